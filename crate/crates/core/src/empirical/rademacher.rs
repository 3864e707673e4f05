use rand::Rng;
use rayon::prelude::*;

use super::Sample;
use crate::class::{FunctionClass, SubClass};
use crate::error::{Error, Result};
use crate::numeric::{tree_merge, Estimate, Moments};
use crate::rng;

/// Largest sample size for which all `2^n` sign vectors are enumerated.
pub const EXACT_RADEMACHER_MAX_N: usize = 20;

const CHUNK: usize = 2048;

/// One vector of i.i.d. uniform ±1 signs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RademacherDraw {
    pub signs: Vec<i8>,
    pub seed: u64,
}

impl RademacherDraw {
    pub fn from_rng<R: Rng + ?Sized>(n: usize, seed: u64, rng: &mut R) -> Self {
        RademacherDraw {
            signs: (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect(),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RademacherMode {
    /// Enumerate every sign vector (`n ≤ 20`).
    Exact,
    /// Plain Monte Carlo over `draws` sign vectors.
    MonteCarlo { draws: usize, seed: u64 },
}

/// Values of every descriptor entry at the sample points, with its scale range.
struct Rows {
    values: Vec<Vec<f64>>,
    scales: Vec<(f64, f64)>,
    n: usize,
}

impl Rows {
    fn new(members: &SubClass, base: &FunctionClass, s: &Sample) -> Result<Self> {
        s.check_atoms(base.atom_count())?;
        let values = members
            .entries
            .iter()
            .map(|e| {
                let f = base.member(e.member).values();
                s.indices().iter().map(|&i| f[i]).collect()
            })
            .collect();
        let scales = members.entries.iter().map(|e| (e.lo, e.hi)).collect();
        Ok(Rows {
            values,
            scales,
            n: s.n(),
        })
    }

    /// `sup_e max(lo·Z_e, hi·Z_e)` given the raw correlations `Σ σ_i f(X_i)`.
    fn sup(&self, sums: &[f64]) -> f64 {
        let n = self.n as f64;
        sums.iter()
            .zip(&self.scales)
            .map(|(&z, &(lo, hi))| (lo * z).max(hi * z) / n)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn sup_for(&self, signs: &[i8], sums: &mut [f64]) -> f64 {
        for (sum, row) in sums.iter_mut().zip(&self.values) {
            *sum = row.iter().zip(signs).map(|(v, &s)| v * s as f64).sum();
        }
        self.sup(sums)
    }
}

fn exact(rows: &Rows) -> f64 {
    let n = rows.n;
    let mut signs = vec![1i8; n];
    let mut sums: Vec<f64> = rows.values.iter().map(|r| r.iter().sum()).collect();
    let total_vectors: u64 = 1 << n;
    let mut acc = rows.sup(&sums);
    // Gray-code walk: one sign flips per step.
    for k in 1..total_vectors {
        let bit = k.trailing_zeros() as usize;
        signs[bit] = -signs[bit];
        let s = signs[bit] as f64;
        for (sum, row) in sums.iter_mut().zip(&rows.values) {
            *sum += 2.0 * s * row[bit];
        }
        acc += rows.sup(&sums);
    }
    acc / total_vectors as f64
}

fn monte_carlo(rows: &Rows, draws: usize, seed: u64) -> Estimate {
    let chunks = draws.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, "rademacher", c as u64);
            let take = CHUNK.min(draws - c * CHUNK);
            let mut sums = vec![0.0; rows.values.len()];
            let mut m = Moments::default();
            for _ in 0..take {
                let draw = RademacherDraw::from_rng(rows.n, seed, &mut rng);
                m.push(rows.sup_for(&draw.signs, &mut sums));
            }
            m
        })
        .collect();
    tree_merge(&parts).estimate()
}

/// `R_n = E_σ sup (1/n) Σ σ_i g(X_i)` over the described members of `base`.
/// An empty descriptor has average 0.
pub fn rademacher_average(
    members: &SubClass,
    base: &FunctionClass,
    s: &Sample,
    mode: RademacherMode,
) -> Result<Estimate> {
    if members.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    if let RademacherMode::Exact = mode {
        if s.n() > EXACT_RADEMACHER_MAX_N {
            return Err(Error::Resource(format!(
                "exact Rademacher enumeration needs n <= {EXACT_RADEMACHER_MAX_N}, got {}",
                s.n()
            )));
        }
    }
    let rows = Rows::new(members, base, s)?;
    Ok(match mode {
        RademacherMode::Exact => Estimate::exact(exact(&rows)),
        RademacherMode::MonteCarlo { draws, seed } => {
            if draws < 2 {
                return Err(crate::error::invalid("draws", "need at least 2 Monte Carlo draws"));
            }
            monte_carlo(&rows, draws, seed)
        }
    })
}
