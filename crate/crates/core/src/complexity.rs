//! Localized complexity curves `ξ_n(r)` and `ξ̂_n(r)`, their fixed points and
//! the `ε`-maximizer brackets of `ξ_n(r) − r`.

use rayon::prelude::*;
use serde::Serialize;

use crate::class::{check_slab_constants, empirical_slab, Class, HullBase, DEFAULT_LEVEL_BAND, MEMBER_TOL};
use crate::empirical::{draw_sample, rademacher_average, scored, RademacherMode, Sample};
use crate::error::{invalid, Error, Result};
use crate::measure::DiscreteMeasure;
use crate::numeric::{moments_of, GridSpec};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    TrueMeasure,
    Empirical,
}

impl CurveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveKind::TrueMeasure => "true-measure",
            CurveKind::Empirical => "empirical",
        }
    }
}

/// Monte Carlo estimate of `ξ_n(r) = E sup{Pf − P_n f : f ∈ F_r}` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub replicates: usize,
    pub n: usize,
    pub kind: CurveKind,
    /// Uniform bound `b` of the class.
    pub sup_bound: f64,
    /// Levels where `F_r` is empty and the value 0 comes from the convention
    /// `sup ∅ = 0`.
    pub empty_levels: Vec<bool>,
}

/// `ξ̂_n(r) = R_n(F̂_r)` on one sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub n: usize,
    pub sample_seed: u64,
    pub sup_bound: f64,
    pub empty_levels: Vec<bool>,
}

/// Common read access for fixed-point searches.
pub trait LevelCurve {
    fn grid(&self) -> &[f64];
    fn values(&self) -> &[f64];
    fn stderr(&self) -> &[f64];
    fn upper(&self) -> f64;
    fn empty_levels(&self) -> &[bool];
}

impl LevelCurve for ComplexityCurve {
    fn grid(&self) -> &[f64] {
        &self.grid
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
    fn stderr(&self) -> &[f64] {
        &self.stderr
    }
    fn upper(&self) -> f64 {
        self.sup_bound
    }
    fn empty_levels(&self) -> &[bool] {
        &self.empty_levels
    }
}

impl LevelCurve for EmpiricalCurve {
    fn grid(&self) -> &[f64] {
        &self.grid
    }
    fn values(&self) -> &[f64] {
        &self.values
    }
    fn stderr(&self) -> &[f64] {
        &self.stderr
    }
    fn upper(&self) -> f64 {
        self.sup_bound
    }
    fn empty_levels(&self) -> &[bool] {
        &self.empty_levels
    }
}

/// Expectations of the base members (representatives for oracle hulls).
fn base_expectations(class: &Class, p: &DiscreteMeasure) -> Vec<f64> {
    match class {
        Class::Explicit(f) => f.members().iter().map(|g| p.expect_unchecked(g.values())).collect(),
        Class::Hull(h) => match h.base() {
            HullBase::Explicit(f) => f.members().iter().map(|g| p.expect_unchecked(g.values())).collect(),
            HullBase::Oracle(o) => o
                .representatives()
                .iter()
                .map(|g| p.expect_unchecked(g.values()))
                .collect(),
        },
    }
}

/// 64 log-spaced levels over `[max(1/(4n), min positive Pf / 4), b]`.
pub fn default_grid(class: &Class, p: &DiscreteMeasure, n: usize) -> Result<GridSpec> {
    let min_pf = base_expectations(class, p)
        .into_iter()
        .filter(|&v| v > MEMBER_TOL)
        .fold(f64::INFINITY, f64::min);
    let mut lo = 1.0 / (4.0 * n as f64);
    if min_pf.is_finite() {
        lo = lo.max(min_pf / 4.0);
    }
    let hi = class.sup_bound();
    if !(hi > lo) {
        return Err(invalid("grid", format!("class bound {hi} leaves no room above {lo}")));
    }
    Ok(GridSpec::log(lo, hi, GridSpec::DEFAULT_POINTS))
}

fn check_grid(grid: &[f64], b: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("grid", "empty grid"));
    }
    if let Some(r) = grid.iter().find(|r| !(**r > 0.0)) {
        return Err(invalid("grid", format!("levels must be positive, got {r}")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("grid", "levels must be strictly increasing"));
    }
    if grid[grid.len() - 1] > b * (1.0 + 1e-12) {
        return Err(invalid("grid", format!("levels must not exceed the class bound {b}")));
    }
    Ok(())
}

/// Which grid levels have an empty `F_r` for every sample.
fn empty_level_flags(class: &Class, p: &DiscreteMeasure, grid: &[f64], band: f64) -> Vec<bool> {
    let pfs = base_expectations(class, p);
    grid.iter()
        .map(|&r| {
            if class.is_hull() {
                !pfs.iter().any(|&v| v > 0.0 && v >= r - MEMBER_TOL)
            } else {
                !pfs.iter().any(|&v| (v - r).abs() <= band * r + MEMBER_TOL)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiOptions {
    /// Relative band for level sets of explicit (non-hull) classes.
    pub band: f64,
}

impl Default for XiOptions {
    fn default() -> Self {
        XiOptions {
            band: DEFAULT_LEVEL_BAND,
        }
    }
}

/// Per-replicate level suprema; row `k` is replicate `k`.
pub(crate) fn replicate_level_sups(
    class: &Class,
    p: &DiscreteMeasure,
    n: usize,
    grid: &[f64],
    replicates: usize,
    seed: u64,
    experiment: &str,
    band: f64,
) -> Result<Vec<Vec<f64>>> {
    (0..replicates)
        .into_par_iter()
        .map(|k| {
            let mut stream = rng::stream(seed, experiment, k as u64);
            let s = draw_sample(p, n, seed, &mut stream)?;
            scored::level_sups(class, p, &s, grid, band)
        })
        .collect()
}

/// Averages replicate rows column-wise into a curve.
pub(crate) fn curve_from_rows(
    rows: &[Vec<f64>],
    grid: Vec<f64>,
    n: usize,
    sup_bound: f64,
    empty_levels: Vec<bool>,
) -> ComplexityCurve {
    let mut values = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        let column: Vec<f64> = rows.iter().map(|row| row[j]).collect();
        let m = moments_of(&column);
        values.push(m.mean);
        stderr.push(m.stderr());
    }
    ComplexityCurve {
        grid,
        values,
        stderr,
        replicates: rows.len(),
        n,
        kind: CurveKind::TrueMeasure,
        sup_bound,
        empty_levels,
    }
}

/// Monte Carlo `ξ_n` over `replicates` independent samples of size `n`.
/// Replicate `k` draws from stream `(seed, "xi-curve", k)`.
pub fn xi_curve(
    class: &Class,
    p: &DiscreteMeasure,
    n: usize,
    grid: &[f64],
    replicates: usize,
    seed: u64,
    opts: &XiOptions,
) -> Result<ComplexityCurve> {
    if replicates < 2 {
        return Err(invalid("K", "need at least 2 replicates"));
    }
    if n == 0 {
        return Err(invalid("n", "sample size must be positive"));
    }
    class.check_measure(p)?;
    let b = class.sup_bound();
    check_grid(grid, b)?;
    let rows = replicate_level_sups(class, p, n, grid, replicates, seed, "xi-curve", opts.band)?;
    let empty = empty_level_flags(class, p, grid, opts.band);
    Ok(curve_from_rows(&rows, grid.to_vec(), n, b, empty))
}

/// Data-dependent curve `ξ̂_n(r) = R_n(F̂_r)` on one sample.
pub fn empirical_xi_curve(
    class: &Class,
    sample: &Sample,
    c1: f64,
    c2: f64,
    grid: &[f64],
    mode: RademacherMode,
) -> Result<EmpiricalCurve> {
    check_slab_constants(c1, c2)?;
    let base = class
        .explicit_members()
        .ok_or_else(|| Error::Unsupported("empirical curves need an explicit class or hull base".into()))?;
    let b = class.sup_bound();
    check_grid(grid, b)?;
    let per_level = grid
        .par_iter()
        .enumerate()
        .map(|(j, &r)| {
            let slab = empirical_slab(class, sample, c1, c2, r)?;
            let level_mode = match mode {
                RademacherMode::Exact => RademacherMode::Exact,
                RademacherMode::MonteCarlo { draws, seed } => RademacherMode::MonteCarlo {
                    draws,
                    seed: rng::stream_seed(seed, "empirical-xi", j as u64),
                },
            };
            let est = rademacher_average(&slab, base, sample, level_mode)?;
            Ok((est, slab.is_empty()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalCurve {
        grid: grid.to_vec(),
        values: per_level.iter().map(|(e, _)| e.value).collect(),
        stderr: per_level.iter().map(|(e, _)| e.stderr).collect(),
        c1,
        c2,
        n: sample.n(),
        sample_seed: sample.seed(),
        sup_bound: b,
        empty_levels: per_level.iter().map(|(_, empty)| *empty).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedPointStatus {
    /// A failing level is followed by the first succeeding one.
    Crossed,
    /// The smallest grid level already satisfies the inequality.
    Degenerate,
    /// No grid level satisfies it; `r_star` is the class bound.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointResult {
    pub r_star: f64,
    pub factor: f64,
    pub slope: f64,
    /// `(last failing level, first succeeding level)`.
    pub bracket: (Option<f64>, Option<f64>),
    pub status: FixedPointStatus,
    /// The value at `r_star` is 0 only because the level set there is empty.
    pub empty_level_at_crossing: bool,
}

impl FixedPointResult {
    pub fn bracket_width(&self) -> Option<f64> {
        match self.bracket {
            (Some(l), Some(r)) => Some(r - l),
            _ => None,
        }
    }
}

/// Smallest grid level with `value(r) + slope·r ≤ factor·r`.
pub fn fixed_point<C: LevelCurve + ?Sized>(curve: &C, factor: f64, slope: f64) -> Result<FixedPointResult> {
    if curve.grid().is_empty() {
        return Err(invalid("curve", "empty curve"));
    }
    if !(factor > 0.0) {
        return Err(invalid("factor", "must be positive"));
    }
    if !(slope >= 0.0) || slope >= factor {
        return Err(invalid("slope", "need 0 <= slope < factor"));
    }
    let grid = curve.grid();
    let values = curve.values();
    let first = grid
        .iter()
        .zip(values)
        .position(|(&r, &v)| v + slope * r <= factor * r);
    Ok(match first {
        Some(0) => FixedPointResult {
            r_star: grid[0],
            factor,
            slope,
            bracket: (None, Some(grid[0])),
            status: FixedPointStatus::Degenerate,
            empty_level_at_crossing: curve.empty_levels()[0],
        },
        Some(j) => FixedPointResult {
            r_star: grid[j],
            factor,
            slope,
            bracket: (Some(grid[j - 1]), Some(grid[j])),
            status: FixedPointStatus::Crossed,
            empty_level_at_crossing: curve.empty_levels()[j],
        },
        None => FixedPointResult {
            r_star: curve.upper(),
            factor,
            slope,
            bracket: (grid.last().copied(), None),
            status: FixedPointStatus::Exhausted,
            empty_level_at_crossing: false,
        },
    })
}

/// Range of levels that `ε`-approximately maximize `ξ_n(r) − r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketPair {
    pub epsilon: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    /// `max_j (ξ_n(r_j) − r_j)` over the grid.
    pub peak: f64,
}

/// `r_{ε,−}` and `r_{ε,+}`. Level 0 is an extra candidate whose value is the
/// curve value at the smallest grid level.
pub fn epsilon_brackets<C: LevelCurve + ?Sized>(curve: &C, epsilon: f64, b: f64) -> Result<BracketPair> {
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon", "must be positive"));
    }
    let grid = curve.grid();
    let values = curve.values();
    if grid.is_empty() {
        return Err(invalid("curve", "empty curve"));
    }
    let peak = grid
        .iter()
        .zip(values)
        .map(|(r, v)| v - r)
        .fold(f64::NEG_INFINITY, f64::max);
    let threshold = peak - epsilon;
    let candidates = std::iter::once((0.0, values[0]))
        .chain(grid.iter().copied().zip(values.iter().copied()))
        .filter(|&(r, _)| r <= b * (1.0 + 1e-12));
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (r, v) in candidates {
        if v - r >= threshold {
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    Ok(BracketPair {
        epsilon,
        r_minus: lo,
        r_plus: hi,
        peak,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonThreshold {
    pub epsilon_min: f64,
    /// `max(r*, c(b+B)(x + ln n)/n)`.
    pub r_prime: f64,
    pub r_star: f64,
    pub peak: f64,
}

/// `ε_min = c·√(max(peak, r')·(B + b)(x + ln n)/n)`.
pub fn epsilon_threshold<C: LevelCurve + ?Sized>(
    curve: &C,
    bernstein_b: f64,
    b: f64,
    x: f64,
    n: f64,
    c: f64,
) -> Result<EpsilonThreshold> {
    if !(bernstein_b > 0.0 && b > 0.0 && n > 0.0 && c > 0.0 && x >= 0.0) {
        return Err(invalid("threshold", "B, b, n and c must be positive and x nonnegative"));
    }
    let fp = fixed_point(curve, 0.25, 0.0)?;
    let log_term = x + n.ln();
    let r_prime = fp.r_star.max(c * (b + bernstein_b) * log_term / n);
    let peak = curve
        .grid()
        .iter()
        .zip(curve.values())
        .map(|(r, v)| v - r)
        .fold(f64::NEG_INFINITY, f64::max);
    let epsilon_min = c * (peak.max(r_prime) * (bernstein_b + b) * log_term / n).max(0.0).sqrt();
    Ok(EpsilonThreshold {
        epsilon_min,
        r_prime,
        r_star: fp.r_star,
        peak,
    })
}
