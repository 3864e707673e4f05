//! A star-shaped `(1, 2)`-Bernstein class, bounded by 1, whose `ξ_n` fixed
//! point is exactly 1/4 while its empirical minimizer has expectation at
//! most `1/n`.
//!
//! The measure is uniform on `m` atoms. The base family is
//!
//! * every indicator `𝟙_A` with `|A| = m/4` (so `P𝟙_A = 1/4`), and
//! * `N` block differences `f_j = 𝟙_{B_j} − 𝟙_{C_j}` over disjoint blocks
//!   with `P(B_j) = 3/(2n)` and `P(C_j) = 1/(2n)`, so `Pf_j = 1/n` and
//!   `Pf_j² = 2/n`.
//!
//! Any sample of size `n` misses at least `m − n ≥ m/4` atoms, so some
//! indicator has `P_n = 0`: for `r ≤ 1/4` the level `F_r` contains a
//! function with `Pf − P_n f = r`, hence `ξ_n(r) ≥ r > r/4`, and every level
//! above `max(1/4, 1/n)` is empty. The empirical minimizer is the zero
//! function unless some `f_j` has negative empirical mean, in which case it
//! is a block difference with `Pf = 1/n`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::class::{is_scaling_of, star_hull_of_oracle, Class, ClassOracle, FunctionClass, OracleMember, MEMBER_TOL};
use crate::complexity::{curve_from_rows, fixed_point, ComplexityCurve, FixedPointResult};
use crate::empirical::{draw_sample, minimize_empirical, MinimizeMode};
use crate::error::{invalid, Error, Result};
use crate::measure::{DiscreteMeasure, FuncVec};
use crate::numeric::{median, moments_of, quantile, Estimate};
use crate::rng;

const ENUMERATION_CAP: u128 = 200_000;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `C(n, k)`, saturating once it passes `cap`.
fn binomial_capped(n: usize, k: usize, cap: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > cap {
            return cap + 1;
        }
    }
    acc
}

#[derive(Debug)]
pub struct GapOracle {
    measure: DiscreteMeasure,
    n: usize,
    m: usize,
    pairs: usize,
}

impl GapOracle {
    fn quarter(&self) -> usize {
        self.m / 4
    }

    fn block_len(&self) -> (usize, usize) {
        (3 * self.m / (2 * self.n), self.m / (2 * self.n))
    }

    /// Atom ranges `(B_j, C_j)` of pair `j`.
    pub fn blocks(&self, j: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let (lb, lc) = self.block_len();
        let start = j * (lb + lc);
        (start..start + lb, start + lb..start + lb + lc)
    }

    pub fn pair(&self, j: usize) -> FuncVec {
        let (b, c) = self.blocks(j);
        let mut v = vec![0.0; self.m];
        v[b].iter_mut().for_each(|x| *x = 1.0);
        v[c].iter_mut().for_each(|x| *x = -1.0);
        FuncVec::new(v).expect("finite")
    }

    /// Identifier used for members of the indicator family.
    pub fn indicator_id(&self) -> usize {
        self.pairs
    }

    /// The `m/4` atoms with the smallest weights (ties to lower atoms).
    fn lightest_quarter(&self, weights: &[f64]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.m).collect();
        order.sort_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(a.cmp(&b)));
        order.truncate(self.quarter());
        order.sort_unstable();
        order
    }

    /// Item-1 witness: the `m/4` least-hit atoms and their total hit count.
    pub fn witness(&self, counts: &[u32]) -> (Vec<usize>, u64) {
        let w: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let atoms = self.lightest_quarter(&w);
        let hits = atoms.iter().map(|&a| counts[a] as u64).sum();
        (atoms, hits)
    }

    /// Sum of the `m/4` smallest counts.
    fn min_quarter_hits(&self, counts: &[u32]) -> u64 {
        let max = counts.iter().copied().max().unwrap_or(0) as usize;
        let mut histogram = vec![0usize; max + 1];
        for &c in counts {
            histogram[c as usize] += 1;
        }
        let mut need = self.quarter();
        let mut hits = 0u64;
        for (value, &how_many) in histogram.iter().enumerate() {
            let take = how_many.min(need);
            hits += (take * value) as u64;
            need -= take;
            if need == 0 {
                break;
            }
        }
        hits
    }

    fn pair_hit_difference(&self, counts: &[u32], j: usize) -> i64 {
        let (b, c) = self.blocks(j);
        let hb: i64 = counts[b].iter().map(|&x| x as i64).sum();
        let hc: i64 = counts[c].iter().map(|&x| x as i64).sum();
        hb - hc
    }
}

impl ClassOracle for GapOracle {
    fn label(&self) -> &str {
        "gap"
    }

    fn measure(&self) -> &DiscreteMeasure {
        &self.measure
    }

    fn sup_bound(&self) -> f64 {
        1.0
    }

    fn linear_minimize(&self, weights: &[f64]) -> Vec<OracleMember> {
        let mut out = Vec::with_capacity(2);
        let best_pair = (0..self.pairs)
            .map(|j| {
                let (b, c) = self.blocks(j);
                let value: f64 = weights[b].iter().sum::<f64>() - weights[c].iter().sum::<f64>();
                (j, value)
            })
            .fold(None, |acc: Option<(usize, f64)>, cur| match acc {
                Some(best) if best.1 <= cur.1 => Some(best),
                _ => Some(cur),
            });
        if let Some((j, _)) = best_pair {
            out.push(OracleMember {
                member: j,
                values: self.pair(j),
            });
        }
        out.push(OracleMember {
            member: self.indicator_id(),
            values: FuncVec::indicator(self.m, &self.lightest_quarter(weights)),
        });
        out
    }

    fn slab_sup(&self, counts: &[u32], n: usize, levels: &[f64]) -> Vec<f64> {
        let n = n as f64;
        let family = 1.0 - (self.min_quarter_hits(counts) as f64 / n) / 0.25;
        let pair_level = 1.0 / self.n as f64;
        let pair = (0..self.pairs)
            .map(|j| self.pair_hit_difference(counts, j))
            .min()
            .map(|d| 1.0 - (d as f64 / n) / pair_level);
        levels
            .iter()
            .map(|&r| {
                let mut best: Option<f64> = None;
                if r <= 0.25 + MEMBER_TOL {
                    best = Some(family);
                }
                if let Some(p) = pair {
                    if r <= pair_level + MEMBER_TOL {
                        best = Some(best.map_or(p, |b| b.max(p)));
                    }
                }
                best.map_or(0.0, |d| r * d)
            })
            .collect()
    }

    fn representatives(&self) -> Vec<FuncVec> {
        let first: Vec<usize> = (0..self.quarter()).collect();
        std::iter::once(FuncVec::indicator(self.m, &first))
            .chain((0..self.pairs).map(|j| self.pair(j)))
            .collect()
    }

    fn contains(&self, g: &FuncVec) -> bool {
        if g.len() != self.m {
            return false;
        }
        let nonzero: Vec<f64> = g.values().iter().copied().filter(|v| v.abs() > MEMBER_TOL).collect();
        if nonzero.is_empty() {
            return true;
        }
        let a = nonzero[0];
        if nonzero.len() == self.quarter()
            && a > 0.0
            && a <= 1.0 + MEMBER_TOL
            && nonzero.iter().all(|v| (v - a).abs() <= MEMBER_TOL)
        {
            return true;
        }
        (0..self.pairs).any(|j| is_scaling_of(g, &self.pair(j)))
    }
}

/// Parameters and oracle of one gap-class instance.
#[derive(Debug, Clone)]
pub struct GapClassSpec {
    pub n: usize,
    pub m: usize,
    pub pairs: usize,
    oracle: Arc<GapOracle>,
}

/// Builds the gap class for sample size `n`. `m` is rounded up to a multiple
/// of `lcm(4, 2n)` so block probabilities are exact; `None` means `8n`, and
/// `pairs = None` means `⌊n/2⌋`.
pub fn build_gap_class(n: usize, m: Option<usize>, pairs: Option<usize>) -> Result<GapClassSpec> {
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    let pairs = pairs.unwrap_or(n / 2);
    if pairs > n / 2 {
        return Err(invalid("pairs", format!("at most n/2 = {} disjoint block pairs fit", n / 2)));
    }
    let step = 4 * (2 * n) / gcd(4, 2 * n);
    let requested = m.unwrap_or(8 * n).max(1);
    let m = requested.div_ceil(step) * step;
    let measure = DiscreteMeasure::uniform(m)?;
    Ok(GapClassSpec {
        n,
        m,
        pairs,
        oracle: Arc::new(GapOracle { measure, n, m, pairs }),
    })
}

impl GapClassSpec {
    pub fn oracle(&self) -> &GapOracle {
        &self.oracle
    }

    pub fn measure(&self) -> &DiscreteMeasure {
        &self.oracle.measure
    }

    /// The star hull, as seen by the generic operations.
    pub fn class(&self) -> Class {
        let o: Arc<dyn ClassOracle> = self.oracle.clone();
        star_hull_of_oracle(o).into()
    }

    /// Lists the whole base family (pairs first, then indicators in
    /// lexicographic order). Only for small `m`.
    pub fn enumerate_base(&self) -> Result<FunctionClass> {
        let q = self.m / 4;
        if binomial_capped(self.m, q, ENUMERATION_CAP) > ENUMERATION_CAP {
            return Err(Error::Resource(format!(
                "C({}, {q}) subsets exceed the enumeration cap",
                self.m
            )));
        }
        let mut members: Vec<FuncVec> = (0..self.pairs).map(|j| self.oracle.pair(j)).collect();
        let mut subset: Vec<usize> = (0..q).collect();
        loop {
            members.push(FuncVec::indicator(self.m, &subset));
            // next combination in lexicographic order
            let Some(i) = (0..q).rev().find(|&i| subset[i] < self.m - q + i) else {
                break;
            };
            subset[i] += 1;
            for k in i + 1..q {
                subset[k] = subset[k - 1] + 1;
            }
        }
        FunctionClass::new("gap-enumerated", members)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapExperimentConfig {
    pub replicates: usize,
    pub rho: f64,
    pub delta: f64,
    pub seed: u64,
    /// Constant in the lower end `(1/n)(1 − c·√(ln n / n) − ρ)`.
    pub c_lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReplicate {
    pub replicate: usize,
    pub exact: f64,
    pub adversarial_low: f64,
    pub adversarial_high: f64,
    pub witness_found: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileSummary {
    pub mean: Estimate,
    pub q01: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
}

impl QuantileSummary {
    pub fn of(values: &[f64]) -> Self {
        QuantileSummary {
            mean: moments_of(values).estimate(),
            q01: quantile(values, 0.01),
            q10: quantile(values, 0.10),
            q50: quantile(values, 0.50),
            q90: quantile(values, 0.90),
            q99: quantile(values, 0.99),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub n: usize,
    pub m: usize,
    pub pairs: usize,
    pub config: GapExperimentConfig,
    pub fixed_point: FixedPointResult,
    pub pfhat_exact: QuantileSummary,
    pub pfhat_adversarial_low: QuantileSummary,
    pub pfhat_adversarial_high: QuantileSummary,
    pub witness_fraction: f64,
    pub exact_within_one_over_n: f64,
    pub lower_end: f64,
    pub bracket_fraction: f64,
    /// Smallest `c` for which a `1 − δ` fraction of adversarial-low
    /// minimizers clear `(1/n)(1 − c·√(ln n / n) − ρ)`.
    pub c_meas: f64,
    pub headline_ratio: f64,
    #[serde(skip)]
    pub curve: ComplexityCurve,
    #[serde(skip)]
    pub rows: Vec<GapReplicate>,
}

/// Replicate `k` draws from stream `(seed, "gap-demo", k)`; the same samples
/// feed the minimizers and the `ξ_n` curve.
pub fn gap_experiment(spec: &GapClassSpec, grid: &[f64], cfg: &GapExperimentConfig) -> Result<GapReport> {
    if cfg.replicates < 2 {
        return Err(invalid("replicates", "need at least 2 replicates"));
    }
    if !(cfg.rho >= 0.0 && cfg.rho < 0.125) {
        return Err(invalid("rho", "need 0 <= rho < 1/8"));
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(invalid("delta", "need 0 < delta < 1"));
    }
    if grid.is_empty() || grid.iter().any(|r| !(*r > 0.0)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("grid", "levels must be positive and strictly increasing"));
    }
    let class = spec.class();
    let p = spec.measure();
    let n = spec.n;
    let results: Vec<(GapReplicate, Vec<f64>)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|k| {
            let mut stream = rng::stream(cfg.seed, "gap-demo", k as u64);
            let s = draw_sample(p, n, cfg.seed, &mut stream)?;
            let (_, hits) = spec.oracle.witness(s.counts());
            let exact = minimize_empirical(&class, p, &s, cfg.rho, MinimizeMode::Exact)?;
            let low = minimize_empirical(&class, p, &s, cfg.rho, MinimizeMode::AdversarialLow)?;
            let high = minimize_empirical(&class, p, &s, cfg.rho, MinimizeMode::AdversarialHigh)?;
            let sups = spec.oracle.slab_sup(s.counts(), n, grid);
            Ok((
                GapReplicate {
                    replicate: k,
                    exact: exact.true_value,
                    adversarial_low: low.true_value,
                    adversarial_high: high.true_value,
                    witness_found: hits == 0,
                },
                sups,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rows, sups): (Vec<GapReplicate>, Vec<Vec<f64>>) = results.into_iter().unzip();

    let top = 0.25_f64.max(1.0 / n as f64);
    let empty = grid.iter().map(|&r| r > top + MEMBER_TOL).collect();
    let curve = curve_from_rows(&sups, grid.to_vec(), n, 1.0, empty);
    let fp = fixed_point(&curve, 0.25, 0.0)?;

    let reps = rows.len() as f64;
    let nf = n as f64;
    let exact: Vec<f64> = rows.iter().map(|r| r.exact).collect();
    let low: Vec<f64> = rows.iter().map(|r| r.adversarial_low).collect();
    let high: Vec<f64> = rows.iter().map(|r| r.adversarial_high).collect();
    let scale = (nf.ln() / nf).sqrt();
    let lower_end = (1.0 - cfg.c_lower * scale - cfg.rho) / nf;
    let upper_end = 1.0 / nf;
    let bracket_hits = rows
        .iter()
        .filter(|r| r.adversarial_low >= lower_end - 1e-15 && r.adversarial_high <= upper_end + 1e-15)
        .count();
    let needed_c: Vec<f64> = low
        .iter()
        .map(|&v| if scale > 0.0 { ((1.0 - cfg.rho - nf * v) / scale).max(0.0) } else { 0.0 })
        .collect();
    let median_exact = median(&exact);
    Ok(GapReport {
        n,
        m: spec.m,
        pairs: spec.pairs,
        config: *cfg,
        headline_ratio: fp.r_star / median_exact,
        fixed_point: fp,
        pfhat_exact: QuantileSummary::of(&exact),
        pfhat_adversarial_low: QuantileSummary::of(&low),
        pfhat_adversarial_high: QuantileSummary::of(&high),
        witness_fraction: rows.iter().filter(|r| r.witness_found).count() as f64 / reps,
        exact_within_one_over_n: exact.iter().filter(|&&v| v <= upper_end + 1e-15).count() as f64 / reps,
        lower_end,
        bracket_fraction: bracket_hits as f64 / reps,
        c_meas: quantile(&needed_c, 1.0 - cfg.delta),
        curve,
        rows,
    })
}
