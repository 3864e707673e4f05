//! Executable checks of the localized bounds: the fixed-point bound on the
//! empirical minimizer, multiplicative ratio bounds, the `ε`-bracket
//! containment of `P f̂`, and concentration profiles of `‖P − P_n‖_F`.
//!
//! The absolute constants in these statements are unknown, so every
//! `validate_*` routine reports a measured rate with explicit Monte Carlo
//! slack instead of asserting exact arithmetic.

use rayon::prelude::*;
use serde::Serialize;

use crate::bernstein::bernstein_certificate;
use crate::class::{Class, MEMBER_TOL};
use crate::complexity::{epsilon_brackets, epsilon_threshold, fixed_point, BracketPair, ComplexityCurve, EpsilonThreshold};
use crate::empirical::scored::{interval_sup, scored_members};
use crate::empirical::{draw_sample, minimize_empirical, sup_deviation, MinimizeMode, Sample};
use crate::error::{invalid, Error, Result};
use crate::measure::DiscreteMeasure;
use crate::numeric::{moments_of, quantile, Estimate};
use crate::rng;

pub const T12_MIN_REPLICATES: usize = 100;
pub const CONCENTRATION_MIN_K: usize = 100;

fn binomial_estimate(hits: usize, total: usize) -> Estimate {
    let rate = hits as f64 / total as f64;
    Estimate {
        value: rate,
        stderr: (rate * (1.0 - rate) / total as f64).sqrt(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub bound: f64,
    pub fixed_point_term: f64,
    pub deviation_term: f64,
    pub c: f64,
    pub x: f64,
    pub b: f64,
    #[serde(rename = "B")]
    pub bernstein_b: f64,
    pub n: usize,
    pub target_rate: f64,
    pub violation_rate: Option<Estimate>,
    pub replicates: Option<usize>,
    /// Largest rate accepted: `e^{−x} + 2·√(e^{−x}(1 − e^{−x})/R) + 0.01`.
    pub allowed_rate: Option<f64>,
    pub pass: Option<bool>,
}

/// `max{r*, c(b + B)x/n}`, with `r*` the `ξ_n(r) ≤ r/4` fixed point.
pub fn theorem12_bound(curve: &ComplexityCurve, b: f64, bernstein_b: f64, x: f64, n: usize, c: f64) -> Result<BoundReport> {
    if !(x > 0.0) {
        return Err(invalid("x", "confidence parameter must be positive"));
    }
    if n == 0 {
        return Err(invalid("n", "must be positive"));
    }
    let fp = fixed_point(curve, 0.25, 0.0)?;
    let deviation_term = c * (b + bernstein_b) * x / n as f64;
    Ok(BoundReport {
        bound: fp.r_star.max(deviation_term),
        fixed_point_term: fp.r_star,
        deviation_term,
        c,
        x,
        b,
        bernstein_b,
        n,
        target_rate: (-x).exp(),
        violation_rate: None,
        replicates: None,
        allowed_rate: None,
        pass: None,
    })
}

/// Runs `replicates` samples (stream `(seed, "validate-t12", k)`) and counts
/// how often the empirical minimizer exceeds the bound.
pub fn validate_theorem12(
    class: &Class,
    p: &DiscreteMeasure,
    n: usize,
    x: f64,
    replicates: usize,
    seed: u64,
    curve: &ComplexityCurve,
    c: f64,
) -> Result<BoundReport> {
    if !class.is_hull() {
        return Err(Error::Precondition("the bound needs a star-shaped class".into()));
    }
    if replicates < T12_MIN_REPLICATES {
        return Err(invalid("replicates", format!("need at least {T12_MIN_REPLICATES}")));
    }
    let cert = bernstein_certificate(class, p, 1.0)?;
    if !cert.satisfied {
        return Err(Error::Precondition(format!(
            "class is not (1, B)-Bernstein (member {:?} has nonpositive mean)",
            cert.worst_member
        )));
    }
    let mut report = theorem12_bound(curve, class.sup_bound(), cert.constant.max(1.0), x, n, c)?;
    let bound = report.bound;
    let exceed: Vec<bool> = (0..replicates)
        .into_par_iter()
        .map(|k| {
            let mut stream = rng::stream(seed, "validate-t12", k as u64);
            let s = draw_sample(p, n, seed, &mut stream)?;
            let fhat = minimize_empirical(class, p, &s, 0.0, MinimizeMode::Exact)?;
            Ok(fhat.true_value > bound)
        })
        .collect::<Result<Vec<_>>>()?;
    let rate = binomial_estimate(exceed.iter().filter(|&&e| e).count(), replicates);
    let target = report.target_rate;
    let allowed = target + 2.0 * (target * (1.0 - target) / replicates as f64).sqrt() + 0.01;
    report.violation_rate = Some(rate);
    report.replicates = Some(replicates);
    report.allowed_rate = Some(allowed);
    report.pass = Some(rate.value <= allowed);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioSide {
    /// `Pf > (1 + ε)P_n f (+ r)`.
    Upper,
    /// `Pf < (1 − ε)P_n f (− r)`.
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioViolation {
    pub member: usize,
    pub pf: f64,
    pub pn: f64,
    pub side: RatioSide,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioCheckReport {
    pub epsilon: f64,
    pub r_min: f64,
    pub additive_variant: bool,
    pub additive_r: f64,
    pub checked: usize,
    pub violations: Vec<RatioViolation>,
}

/// Checks `(1 − ε)P_n f − r ≤ Pf ≤ (1 + ε)P_n f + r` for every member with
/// `Pf ≥ r_min` (`r = 0` unless `additive_r` is given). For hulls the base
/// members stand for all their scalings: the multiplicative form is
/// scale-invariant and the additive slack only helps smaller scales.
pub fn ratio_check(
    class: &Class,
    p: &DiscreteMeasure,
    s: &Sample,
    epsilon: f64,
    r_min: f64,
    additive_r: Option<f64>,
) -> Result<RatioCheckReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid("epsilon", "need 0 < epsilon < 1"));
    }
    if !(r_min >= 0.0) {
        return Err(invalid("r_min", "must be nonnegative"));
    }
    let r = additive_r.unwrap_or(0.0);
    if !(r >= 0.0) {
        return Err(invalid("additive_r", "must be nonnegative"));
    }
    let scored = scored_members(class, p, s, true)?;
    let mut violations = Vec::new();
    let mut checked = 0;
    let mut seen = std::collections::BTreeSet::new();
    for m in scored.iter().filter(|m| m.pf >= r_min) {
        if !seen.insert((m.member, m.pf.to_bits(), m.pn.to_bits())) {
            continue;
        }
        checked += 1;
        if m.pf - ((1.0 + epsilon) * m.pn + r) > MEMBER_TOL {
            violations.push(RatioViolation {
                member: m.member,
                pf: m.pf,
                pn: m.pn,
                side: RatioSide::Upper,
            });
        }
        if ((1.0 - epsilon) * m.pn - r) - m.pf > MEMBER_TOL {
            violations.push(RatioViolation {
                member: m.member,
                pf: m.pf,
                pn: m.pn,
                side: RatioSide::Lower,
            });
        }
    }
    Ok(RatioCheckReport {
        epsilon,
        r_min,
        additive_variant: additive_r.is_some(),
        additive_r: r,
        checked,
        violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GateReport {
    /// `E sup{Pf − P_n f : 0 ≤ Pf ≤ c1/n}` over the hull.
    pub value: Estimate,
    pub c1: f64,
    /// `sup_s(ξ_n(s) − s) − ε`.
    pub threshold: f64,
    pub applies: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalizationReport {
    pub epsilon: f64,
    pub threshold: EpsilonThreshold,
    pub condition_met: bool,
    pub brackets: BracketPair,
    pub lower_end: f64,
    pub upper_end: f64,
    pub gate: GateReport,
    pub replicates: usize,
    pub x: f64,
    /// Fraction with `P f̂ ≤ max(1/n, r_{ε,+})`.
    pub upper_fraction: f64,
    /// Fraction with `P f̂ ≥ r_{ε,−}`; reported only when the gate applies.
    pub lower_fraction: Option<f64>,
    /// Fraction inside `[r_{ε,−}, max(1/n, r_{ε,+})]`, as a plain measurement.
    pub two_sided_fraction: f64,
    /// Containment used for pass/fail: two-sided when the gate applies,
    /// upper end only otherwise.
    pub containment_fraction: f64,
    pub required_fraction: f64,
    /// `None` when `ε` is below the threshold.
    pub pass: Option<bool>,
    pub pfhat_mean: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalizationConfig {
    /// `None` uses the threshold itself.
    pub epsilon: Option<f64>,
    pub x: f64,
    pub replicates: usize,
    pub seed: u64,
    pub c: f64,
    /// The gate's slab `0 ≤ Pf ≤ c1/n`.
    pub gate_c1: f64,
}

/// Measures how often `P f̂` falls inside the `ε`-brackets of the supplied
/// `ξ_n` curve. Replicate `k` uses stream `(seed, "validate-t31", k)`.
pub fn validate_theorem31(
    class: &Class,
    p: &DiscreteMeasure,
    n: usize,
    curve: &ComplexityCurve,
    cfg: &LocalizationConfig,
) -> Result<LocalizationReport> {
    if !class.is_hull() {
        return Err(Error::Precondition("the brackets need a star-shaped class".into()));
    }
    if cfg.replicates < 2 {
        return Err(invalid("replicates", "need at least 2"));
    }
    if !(cfg.gate_c1 > 0.0) {
        return Err(invalid("c1", "gate constant must be positive"));
    }
    let cert = bernstein_certificate(class, p, 1.0)?;
    if !cert.satisfied {
        return Err(Error::Precondition("class is not (1, B)-Bernstein".into()));
    }
    let b = class.sup_bound();
    let threshold = epsilon_threshold(curve, cert.constant.max(1.0), b, cfg.x, n as f64, cfg.c)?;
    let epsilon = cfg.epsilon.unwrap_or(threshold.epsilon_min);
    let condition_met = epsilon >= threshold.epsilon_min;
    let brackets = epsilon_brackets(curve, epsilon, b)?;
    let upper_end = (1.0 / n as f64).max(brackets.r_plus);
    let lower_end = brackets.r_minus;
    let cap = cfg.gate_c1 / n as f64;
    let per_rep: Vec<(f64, f64)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|k| {
            let mut stream = rng::stream(cfg.seed, "validate-t31", k as u64);
            let s = draw_sample(p, n, cfg.seed, &mut stream)?;
            let fhat = minimize_empirical(class, p, &s, 0.0, MinimizeMode::Exact)?;
            let scored = scored_members(class, p, &s, false)?;
            Ok((fhat.true_value, interval_sup(&scored, cap, true)))
        })
        .collect::<Result<Vec<_>>>()?;
    let pf: Vec<f64> = per_rep.iter().map(|v| v.0).collect();
    let gate_values: Vec<f64> = per_rep.iter().map(|v| v.1).collect();
    let gate_value = moments_of(&gate_values).estimate();
    let gate_threshold = brackets.peak - epsilon;
    let applies = gate_value.value < gate_threshold;
    let reps = pf.len() as f64;
    let tol = 1e-15;
    let frac = |pred: &dyn Fn(f64) -> bool| pf.iter().filter(|&&v| pred(v)).count() as f64 / reps;
    let upper_fraction = frac(&|v| v <= upper_end + tol);
    let two_sided_fraction = frac(&|v| v <= upper_end + tol && v >= lower_end - tol);
    let lower_fraction = applies.then(|| frac(&|v| v >= lower_end - tol));
    let containment_fraction = if applies { two_sided_fraction } else { upper_fraction };
    let required_fraction = 1.0 - (-cfg.x).exp() - 0.05;
    Ok(LocalizationReport {
        epsilon,
        threshold,
        condition_met,
        brackets,
        lower_end,
        upper_end,
        gate: GateReport {
            value: gate_value,
            c1: cfg.gate_c1,
            threshold: gate_threshold,
            applies,
        },
        replicates: cfg.replicates,
        x: cfg.x,
        upper_fraction,
        lower_fraction,
        two_sided_fraction,
        containment_fraction,
        required_fraction,
        pass: condition_met.then_some(containment_fraction >= required_fraction),
        pfhat_mean: moments_of(&pf).estimate(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationProfile {
    pub n: usize,
    pub replicates: usize,
    pub mean: Estimate,
    pub q01: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
    /// `q01/mean − 1`.
    pub alpha_low: f64,
    /// `q99/mean − 1`.
    pub alpha_high: f64,
}

impl ConcentrationProfile {
    /// Profile of an observed (or exactly weighted) distribution of
    /// `‖P − P_n‖_F` values, given as `(value, weight)` pairs.
    pub fn from_weighted(n: usize, replicates: usize, values: &[(f64, f64)], mean: Estimate) -> Self {
        let q = |level| crate::numeric::weighted_quantile(values, level);
        let (q01, q99) = (q(0.01), q(0.99));
        let alpha = |v: f64| if mean.value > 0.0 { v / mean.value - 1.0 } else { 0.0 };
        ConcentrationProfile {
            n,
            replicates,
            mean,
            q01,
            q10: q(0.10),
            q50: q(0.50),
            q90: q(0.90),
            q99,
            alpha_low: alpha(q01),
            alpha_high: alpha(q99),
        }
    }
}

/// Distribution of `sup_F |Pf − P_n f|` over `K` samples (stream
/// `(seed, "concentration", k)`).
pub fn concentration_profile(class: &Class, p: &DiscreteMeasure, n: usize, k: usize, seed: u64) -> Result<ConcentrationProfile> {
    if k < CONCENTRATION_MIN_K {
        return Err(invalid("K", format!("need at least {CONCENTRATION_MIN_K} replicates")));
    }
    let sups: Vec<f64> = (0..k)
        .into_par_iter()
        .map(|r| {
            let mut stream = rng::stream(seed, "concentration", r as u64);
            let s = draw_sample(p, n, seed, &mut stream)?;
            Ok(sup_deviation(class, p, &s)?.absolute)
        })
        .collect::<Result<Vec<_>>>()?;
    let weighted: Vec<(f64, f64)> = sups.iter().map(|&v| (v, 1.0)).collect();
    Ok(ConcentrationProfile::from_weighted(n, k, &weighted, moments_of(&sups).estimate()))
}

/// Convenience for callers that only need one quantile of a profile run.
pub fn deviation_quantile(values: &[f64], q: f64) -> f64 {
    quantile(values, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class::{star_hull, FunctionClass};
    use crate::complexity::CurveKind;

    fn flat_curve(value: f64) -> ComplexityCurve {
        let grid: Vec<f64> = (1..=100).map(|j| j as f64 / 100.0).collect();
        ComplexityCurve {
            values: vec![value; grid.len()],
            stderr: vec![0.0; grid.len()],
            empty_levels: vec![false; grid.len()],
            grid,
            replicates: 2,
            n: 10,
            kind: CurveKind::TrueMeasure,
            sup_bound: 1.0,
        }
    }

    #[test]
    fn bound_examples() {
        // ξ ≡ 1/16 crosses r/4 at r = 0.25
        let r = theorem12_bound(&flat_curve(1.0 / 16.0), 1.0, 2.0, 1.0, 1000, 1.0).unwrap();
        assert_eq!(r.fixed_point_term, 0.25);
        assert!((r.deviation_term - 0.003).abs() < 1e-15);
        assert_eq!(r.bound, 0.25);
        let z = theorem12_bound(&flat_curve(0.0), 1.0, 2.0, 5.0, 10, 1.0).unwrap();
        assert_eq!(z.bound, z.deviation_term);
        let z2 = theorem12_bound(&flat_curve(0.0), 1.0, 2.0, 10.0, 10, 1.0).unwrap();
        assert!((z2.deviation_term - 2.0 * z.deviation_term).abs() < 1e-15);
        assert_eq!(z2.fixed_point_term, z.fixed_point_term);
        assert!(theorem12_bound(&flat_curve(0.0), 1.0, 2.0, 0.0, 10, 1.0).is_err());
    }

    #[test]
    fn ratio_check_examples() {
        let p = DiscreteMeasure::uniform(2).unwrap();
        // Pf = 0.5, P_n f = 0.2 on this sample (one hit on atom 0 out of 5... use values)
        let c: Class = FunctionClass::from_rows("r", vec![vec![0.2, 0.8]]).unwrap().into();
        let s = Sample::from_indices(2, vec![0, 0], 0).unwrap();
        let rep = ratio_check(&c, &p, &s, 0.1, 0.0, None).unwrap();
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].side, RatioSide::Upper);
        let slack = ratio_check(&c, &p, &s, 0.1, 0.0, Some(0.8)).unwrap();
        assert!(slack.violations.is_empty());
        let exact_sample = Sample::from_indices(2, vec![0, 1], 0).unwrap();
        assert!(ratio_check(&c, &p, &exact_sample, 0.01, 0.0, None).unwrap().violations.is_empty());
        assert!(ratio_check(&c, &p, &s, 1.0, 0.0, None).is_err());
    }

    #[test]
    fn t12_needs_hull_and_certificate() {
        let p = DiscreteMeasure::uniform(2).unwrap();
        let base = FunctionClass::from_rows("b", vec![vec![1.0, -1.0]]).unwrap();
        let curve = flat_curve(0.0);
        assert!(matches!(
            validate_theorem12(&base.clone().into(), &p, 10, 1.0, 100, 1, &curve, 1.0),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            validate_theorem12(&star_hull(base).into(), &p, 10, 1.0, 100, 1, &curve, 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn singleton_hull_never_violates() {
        let p = DiscreteMeasure::uniform(3).unwrap();
        let h: Class = star_hull(FunctionClass::from_rows("s", vec![vec![1.0, 0.0, 0.5]]).unwrap()).into();
        let rep = validate_theorem12(&h, &p, 20, 2.0, 200, 4, &flat_curve(0.0), 1.0).unwrap();
        assert_eq!(rep.violation_rate.unwrap().value, 0.0);
        assert_eq!(rep.pass, Some(true));
    }

    #[test]
    fn zero_class_profile() {
        let p = DiscreteMeasure::uniform(3).unwrap();
        let c: Class = FunctionClass::from_rows("z", vec![vec![0.0; 3]]).unwrap().into();
        let prof = concentration_profile(&c, &p, 10, 100, 1).unwrap();
        assert_eq!((prof.q01, prof.q50, prof.q99, prof.mean.value), (0.0, 0.0, 0.0, 0.0));
        assert!(concentration_profile(&c, &p, 10, 50, 1).is_err());
    }
}
