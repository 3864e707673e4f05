//! Small numeric helpers shared across the crate: compensated summation,
//! mergeable running moments, inverse-CDF quantiles and level grids.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Running mean / second central moment, mergeable in any fixed order
/// (Chan et al. pairwise update).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Moments {
            count,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * w,
        }
    }

    /// Unbiased sample variance (0 for fewer than two observations).
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.mean,
            stderr: self.stderr(),
        }
    }
}

/// Combine a slice of partial moments with a fixed-shape pairwise tree so the
/// result depends only on the slice order, never on scheduling.
pub fn tree_merge(parts: &[Moments]) -> Moments {
    match parts.len() {
        0 => Moments::default(),
        1 => parts[0],
        len => {
            let mid = len / 2;
            tree_merge(&parts[..mid]).merge(&tree_merge(&parts[mid..]))
        }
    }
}

pub fn moments_of(values: &[f64]) -> Moments {
    let mut m = Moments::default();
    for &v in values {
        m.push(v);
    }
    m
}

/// A Monte Carlo point estimate together with its standard error. Exact
/// quantities carry `stderr = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0 }
    }
}

/// Inverse-CDF quantile: the smallest observed value `x` with
/// `F(x) >= q`. Works for weighted discrete distributions too.
pub fn weighted_quantile(values: &[(f64, f64)], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty distribution");
    let mut sorted: Vec<(f64, f64)> = values.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = compensated_sum(sorted.iter().map(|v| v.1));
    let target = q.clamp(0.0, 1.0) * total;
    let mut acc = 0.0;
    for &(x, w) in &sorted {
        acc += w;
        if acc >= target - 1e-12 * total {
            return x;
        }
    }
    sorted[sorted.len() - 1].0
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    let weighted: Vec<(f64, f64)> = values.iter().map(|&v| (v, 1.0)).collect();
    weighted_quantile(&weighted, q)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Log,
    Linear,
}

/// Level grid description: `points` levels spanning `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub const DEFAULT_POINTS: usize = 64;

    pub fn log(lo: f64, hi: f64, points: usize) -> Self {
        GridSpec {
            lo,
            hi,
            points,
            spacing: Spacing::Log,
        }
    }

    pub fn linear(lo: f64, hi: f64, points: usize) -> Self {
        GridSpec {
            lo,
            hi,
            points,
            spacing: Spacing::Linear,
        }
    }

    pub fn levels(&self) -> Result<Vec<f64>> {
        if !(self.lo > 0.0) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(invalid("grid", "levels must be positive and finite"));
        }
        if self.points == 0 {
            return Err(invalid("grid", "at least one point required"));
        }
        if self.points == 1 {
            return Ok(vec![self.hi]);
        }
        if self.hi <= self.lo {
            return Err(invalid("grid", "hi must exceed lo"));
        }
        let steps = (self.points - 1) as f64;
        let mut out: Vec<f64> = (0..self.points)
            .map(|j| {
                let t = j as f64 / steps;
                match self.spacing {
                    Spacing::Log => (self.lo.ln() + t * (self.hi.ln() - self.lo.ln())).exp(),
                    Spacing::Linear => self.lo + t * (self.hi - self.lo),
                }
            })
            .collect();
        // pin the endpoints exactly
        out[0] = self.lo;
        let last = out.len() - 1;
        out[last] = self.hi;
        Ok(out)
    }
}
