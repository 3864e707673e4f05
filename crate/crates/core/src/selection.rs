//! Penalized model selection over nested classes and the deterministic
//! oracle-inequality audit.
//!
//! Classes are predictor classes on the `x` atoms; losses live on the pair
//! atoms of the joint distribution. Class numbers `k` are 1-based.

use rayon::prelude::*;
use serde::Serialize;

use crate::class::{star_hull, FunctionClass, MEMBER_TOL};
use crate::complexity::{empirical_xi_curve, fixed_point, FixedPointResult};
use crate::empirical::{draw_sample, RademacherMode, Sample};
use crate::error::{invalid, Error, Result};
use crate::loss::{argmin_lowest, excess_loss_class, loss_class, JointDistribution, LossSpec};
use crate::measure::DiscreteMeasure;
use crate::numeric::GridSpec;
use crate::rng;

pub const DEFAULT_PENALTY_SCALE: f64 = 3.5;
pub const ORACLE_FACTOR: f64 = 9.0;
pub const IMPLICATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct NestedProblem {
    classes: Vec<FunctionClass>,
    losses: Vec<FunctionClass>,
    loss: LossSpec,
    joint: JointDistribution,
    measure: DiscreteMeasure,
    eps: Vec<f64>,
    /// `Pℓ_f` for every member of every class.
    risks: Vec<Vec<f64>>,
    best_per_class: Vec<usize>,
    penalty_scale: f64,
}

fn check_eps(eps: &[f64], k: usize) -> Result<()> {
    if eps.len() != k {
        return Err(invalid("eps", format!("expected {k} values, got {}", eps.len())));
    }
    if eps.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(invalid("eps", "values must be finite and nonnegative"));
    }
    if let Some(i) = eps.windows(2).position(|w| w[1] < w[0]) {
        return Err(invalid(
            "eps",
            format!("must be nondecreasing (eps[{}] = {} > eps[{}] = {})", i, eps[i], i + 1, eps[i + 1]),
        ));
    }
    Ok(())
}

pub fn make_nested(
    classes: Vec<FunctionClass>,
    loss: LossSpec,
    joint: JointDistribution,
    eps: Vec<f64>,
) -> Result<NestedProblem> {
    if classes.is_empty() {
        return Err(Error::EmptyClass);
    }
    check_eps(&eps, classes.len())?;
    for (k, pair) in classes.windows(2).enumerate() {
        if let Some(member) = pair[0]
            .members()
            .iter()
            .position(|g| pair[1].position(g, MEMBER_TOL).is_none())
        {
            return Err(Error::NotNested {
                class: k + 1,
                member,
                next: k + 2,
            });
        }
    }
    let losses = classes
        .iter()
        .map(|g| loss_class(g, &loss, &joint))
        .collect::<Result<Vec<_>>>()?;
    let measure = joint.measure();
    let risks: Vec<Vec<f64>> = losses
        .iter()
        .map(|l| l.members().iter().map(|f| measure.expect_unchecked(f.values())).collect())
        .collect();
    let best_per_class = risks.iter().map(|r| argmin_lowest(r)).collect();
    Ok(NestedProblem {
        classes,
        losses,
        loss,
        joint,
        measure,
        eps,
        risks,
        best_per_class,
        penalty_scale: DEFAULT_PENALTY_SCALE,
    })
}

impl NestedProblem {
    pub fn with_penalty_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(invalid("penalty_scale", "must be finite and nonnegative"));
        }
        self.penalty_scale = scale;
        Ok(self)
    }

    /// Same problem with new `ε_k`.
    pub fn with_eps(mut self, eps: Vec<f64>) -> Result<Self> {
        check_eps(&eps, self.classes.len())?;
        self.eps = eps;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[FunctionClass] {
        &self.classes
    }

    pub fn loss_classes(&self) -> &[FunctionClass] {
        &self.losses
    }

    pub fn loss(&self) -> &LossSpec {
        &self.loss
    }

    pub fn joint(&self) -> &JointDistribution {
        &self.joint
    }

    pub fn measure(&self) -> &DiscreteMeasure {
        &self.measure
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn risks(&self) -> &[Vec<f64>] {
        &self.risks
    }

    /// Index of `f_k*` inside class `k` (0-based position in the slice).
    pub fn best_per_class(&self) -> &[usize] {
        &self.best_per_class
    }

    pub fn best_risk(&self, k: usize) -> f64 {
        self.risks[k][self.best_per_class[k]]
    }

    pub fn penalty_scale(&self) -> f64 {
        self.penalty_scale
    }

    /// `inf_k(Pℓ_{f_k*} + 9ε_k)` and the 1-based `k` attaining it.
    pub fn oracle_target(&self) -> (f64, usize) {
        let values: Vec<f64> = (0..self.len())
            .map(|k| self.best_risk(k) + ORACLE_FACTOR * self.eps[k])
            .collect();
        let k = argmin_lowest(&values);
        (values[k], k + 1)
    }

    fn empirical_risks(&self, s: &Sample) -> Result<Vec<Vec<f64>>> {
        s.check_atoms(self.measure.atom_count())?;
        Ok(self
            .losses
            .iter()
            .map(|l| l.members().iter().map(|f| s.mean_unchecked(f.values())).collect())
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSelection {
    pub k: usize,
    pub member: usize,
    pub empirical_risk: f64,
    pub penalty: f64,
    pub penalized: f64,
    pub true_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub per_class: Vec<ClassSelection>,
    pub chosen_k: usize,
    pub chosen_member: usize,
    pub chosen_risk: f64,
    pub oracle_target: f64,
    pub oracle_k: usize,
    pub penalty_scale: f64,
}

/// `f̂_k = argmin_{F_k} P_nℓ`, then `k̂ = argmin_k P_nℓ_{f̂_k} + scale·ε_k`.
/// Ties go to the lower member index and the smaller `k`.
pub fn select(problem: &NestedProblem, s: &Sample) -> Result<SelectionResult> {
    let emp = problem.empirical_risks(s)?;
    let per_class: Vec<ClassSelection> = emp
        .iter()
        .enumerate()
        .map(|(k, risks)| {
            let member = argmin_lowest(risks);
            let penalty = problem.penalty_scale * problem.eps[k];
            ClassSelection {
                k: k + 1,
                member,
                empirical_risk: risks[member],
                penalty,
                penalized: risks[member] + penalty,
                true_risk: problem.risks[k][member],
            }
        })
        .collect();
    let penalized: Vec<f64> = per_class.iter().map(|c| c.penalized).collect();
    let chosen = &per_class[argmin_lowest(&penalized)];
    let (oracle_target, oracle_k) = problem.oracle_target();
    Ok(SelectionResult {
        chosen_k: chosen.k,
        chosen_member: chosen.member,
        chosen_risk: chosen.true_risk,
        per_class: per_class.clone(),
        oracle_target,
        oracle_k,
        penalty_scale: problem.penalty_scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesesReport {
    pub h1: bool,
    pub h2: bool,
    /// `sup_k sup_f (Pℓ_f − Pℓ_{f_k*} − 2(P_nℓ_f − P_nℓ_{f_k*}) − ε_k)`.
    pub margin1: f64,
    /// `sup_k sup_f (P_nℓ_f − P_nℓ_{f_k*} − 2(Pℓ_f − Pℓ_{f_k*}) − ε_k)`.
    pub margin2: f64,
}

impl HypothesesReport {
    pub fn both(&self) -> bool {
        self.h1 && self.h2
    }
}

pub fn hypotheses_check(problem: &NestedProblem, s: &Sample) -> Result<HypothesesReport> {
    let emp = problem.empirical_risks(s)?;
    let mut margin1 = f64::NEG_INFINITY;
    let mut margin2 = f64::NEG_INFINITY;
    for (k, (risks, emp_risks)) in problem.risks.iter().zip(&emp).enumerate() {
        let star = problem.best_per_class[k];
        let (p_star, pn_star) = (risks[star], emp_risks[star]);
        let eps = problem.eps[k];
        for (p, pn) in risks.iter().zip(emp_risks) {
            margin1 = margin1.max(p - p_star - 2.0 * (pn - pn_star) - eps);
            margin2 = margin2.max(pn - pn_star - 2.0 * (p - p_star) - eps);
        }
    }
    Ok(HypothesesReport {
        h1: margin1 <= 0.0,
        h2: margin2 <= 0.0,
        margin1,
        margin2,
    })
}

/// `Pℓ_f̂ − inf_k(Pℓ_{f_k*} + 9ε_k)`.
pub fn oracle_check(problem: &NestedProblem, selection: &SelectionResult) -> f64 {
    selection.chosen_risk - problem.oracle_target().0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub replicates: usize,
    pub n: usize,
    pub hypotheses_true: usize,
    /// Replicates where both hypotheses hold but the gap exceeds the tolerance.
    pub implication_failures: usize,
    pub max_gap_when_hypotheses_hold: Option<f64>,
    pub max_gap: f64,
    pub chosen_k_counts: Vec<usize>,
    pub mean_chosen_risk: f64,
    pub oracle_target: f64,
}

impl AuditReport {
    pub fn pass(&self) -> bool {
        self.implication_failures == 0
    }
}

/// Draws `replicates` samples (stream `(seed, "model-select", r)`) and tests
/// the implication "both hypotheses ⇒ gap ≤ 1e-12" on each.
pub fn implication_audit(problem: &NestedProblem, n: usize, replicates: usize, seed: u64) -> Result<AuditReport> {
    if replicates == 0 {
        return Err(invalid("replicates", "must be positive"));
    }
    let rows: Vec<(bool, f64, usize, f64)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut stream = rng::stream(seed, "model-select", r as u64);
            let s = draw_sample(&problem.measure, n, seed, &mut stream)?;
            let h = hypotheses_check(problem, &s)?;
            let sel = select(problem, &s)?;
            Ok((h.both(), oracle_check(problem, &sel), sel.chosen_k, sel.chosen_risk))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0; problem.len()];
    for row in &rows {
        counts[row.2 - 1] += 1;
    }
    let held: Vec<f64> = rows.iter().filter(|r| r.0).map(|r| r.1).collect();
    Ok(AuditReport {
        replicates,
        n,
        hypotheses_true: held.len(),
        implication_failures: held.iter().filter(|&&g| g > IMPLICATION_TOL).count(),
        max_gap_when_hypotheses_hold: held.iter().copied().reduce(f64::max),
        max_gap: rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max),
        chosen_k_counts: counts,
        mean_chosen_risk: crate::numeric::compensated_sum(rows.iter().map(|r| r.3)) / replicates as f64,
        oracle_target: problem.oracle_target().0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalEpsOptions {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub factor: f64,
    pub grid_points: usize,
    pub mode: RademacherMode,
}

impl Default for EmpiricalEpsOptions {
    fn default() -> Self {
        EmpiricalEpsOptions {
            c1: 0.5,
            c2: 2.0,
            c3: 1.0 / 16.0,
            factor: 0.25,
            grid_points: 32,
            mode: RademacherMode::MonteCarlo { draws: 2000, seed: 0 },
        }
    }
}

/// `ε_k` as the empirical fixed point (value + c3·r ≤ factor·r) of the star
/// hull of class `k`'s excess-loss class, then made nondecreasing by a
/// running maximum. Returns the fixed points alongside.
pub fn empirical_eps(
    classes: &[FunctionClass],
    loss: &LossSpec,
    joint: &JointDistribution,
    s: &Sample,
    opts: &EmpiricalEpsOptions,
) -> Result<(Vec<f64>, Vec<FixedPointResult>)> {
    let n = s.n().max(1) as f64;
    let mut eps = Vec::with_capacity(classes.len());
    let mut fps = Vec::with_capacity(classes.len());
    let mut running: f64 = 0.0;
    for g in classes {
        let excess = excess_loss_class(g, loss, joint)?;
        let hull = star_hull(excess.class).into();
        let b = crate::class::Class::sup_bound(&hull);
        let fp = if b > 0.0 {
            let grid = GridSpec::log((1.0 / (4.0 * n)).min(b), b, opts.grid_points).levels()?;
            let curve = empirical_xi_curve(&hull, s, opts.c1, opts.c2, &grid, opts.mode)?;
            fixed_point(&curve, opts.factor, opts.c3)?
        } else {
            FixedPointResult {
                r_star: 0.0,
                factor: opts.factor,
                slope: opts.c3,
                bracket: (None, None),
                status: crate::complexity::FixedPointStatus::Degenerate,
                empty_level_at_crossing: true,
            }
        };
        running = running.max(fp.r_star);
        eps.push(running);
        fps.push(fp);
    }
    Ok((eps, fps))
}
