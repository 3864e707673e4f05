use serde::Serialize;

use super::scored::{scored_members, Scored};
use super::Sample;
use crate::class::{Class, MEMBER_TOL};
use crate::error::{invalid, Result};
use crate::measure::DiscreteMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinimizeMode {
    /// The empirical minimizer; ties go to smaller `Pf`, then smaller index.
    Exact,
    /// Among `ρ/n`-approximate minimizers, one with the smallest `Pf`.
    AdversarialLow,
    /// Among `ρ/n`-approximate minimizers, one with the largest `Pf`.
    AdversarialHigh,
}

/// The selected function `scale · base[member_id]`. `member_id` is `None`
/// for the zero function of a hull.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizerResult {
    pub member_id: Option<usize>,
    pub scale: f64,
    pub empirical_value: f64,
    pub true_value: f64,
    pub rho: f64,
    pub mode: MinimizeMode,
}

#[derive(Debug, Clone, Copy)]
struct Choice {
    member: Option<usize>,
    scale: f64,
    pf: f64,
    pn: f64,
}

impl Choice {
    fn zero() -> Self {
        Choice {
            member: None,
            scale: 0.0,
            pf: 0.0,
            pn: 0.0,
        }
    }

    fn at(s: &Scored, a: f64) -> Self {
        Choice {
            member: Some(s.member),
            scale: a,
            pf: a * s.pf,
            pn: a * s.pn,
        }
    }

    /// `None` (the zero function) orders before every member index.
    fn index_key(&self) -> (bool, usize) {
        match self.member {
            None => (false, 0),
            Some(i) => (true, i),
        }
    }
}

/// Chooses the option extremizing `Pf` (lowest when `lowest`), ties to the
/// smaller index.
fn pick(options: impl IntoIterator<Item = Choice>, lowest: bool) -> Option<Choice> {
    let mut best: Option<Choice> = None;
    for c in options {
        best = Some(match best {
            None => c,
            Some(b) => {
                let better = if lowest { c.pf < b.pf - MEMBER_TOL } else { c.pf > b.pf + MEMBER_TOL };
                let tie = (c.pf - b.pf).abs() <= MEMBER_TOL && c.index_key() < b.index_key();
                if better || tie {
                    c
                } else {
                    b
                }
            }
        });
    }
    best
}

fn explicit_choice(scored: &[Scored], slack: f64, mode: MinimizeMode) -> Option<Choice> {
    let inf = scored.iter().map(|s| s.pn).fold(f64::INFINITY, f64::min);
    let cutoff = match mode {
        MinimizeMode::Exact => inf + MEMBER_TOL,
        _ => inf + slack + MEMBER_TOL,
    };
    let feasible = scored.iter().filter(|s| s.pn <= cutoff).map(|s| Choice::at(s, 1.0));
    pick(feasible, mode != MinimizeMode::AdversarialHigh)
}

/// Feasible scales `a ∈ [0, 1]` with `a · pn ≤ u`.
fn feasible_scales(pn: f64, u: f64) -> Option<(f64, f64)> {
    if pn > MEMBER_TOL {
        if u < -MEMBER_TOL {
            None
        } else {
            Some((0.0, (u.max(0.0) / pn).min(1.0)))
        }
    } else if pn < -MEMBER_TOL {
        let lo = (u / pn).max(0.0);
        if lo > 1.0 + MEMBER_TOL {
            None
        } else {
            Some((lo.min(1.0), 1.0))
        }
    } else if u >= -MEMBER_TOL {
        Some((0.0, 1.0))
    } else {
        None
    }
}

fn hull_choice(scored: &[Scored], slack: f64, mode: MinimizeMode) -> Choice {
    let inf = scored.iter().map(|s| s.pn).fold(0.0_f64, f64::min);
    match mode {
        MinimizeMode::Exact => {
            let options: Vec<Choice> = if inf < -MEMBER_TOL {
                scored
                    .iter()
                    .filter(|s| s.pn <= inf + MEMBER_TOL)
                    .map(|s| Choice::at(s, 1.0))
                    .collect()
            } else {
                std::iter::once(Choice::zero())
                    .chain(
                        scored
                            .iter()
                            .filter(|s| s.pn.abs() <= MEMBER_TOL && s.pf < 0.0)
                            .map(|s| Choice::at(s, 1.0)),
                    )
                    .collect()
            };
            pick(options, true).expect("hull always has a minimizer")
        }
        _ => {
            let u = inf + slack;
            let mut options = Vec::new();
            if u >= -MEMBER_TOL {
                options.push(Choice::zero());
            }
            for s in scored {
                if let Some((lo, hi)) = feasible_scales(s.pn, u) {
                    options.push(Choice::at(s, lo));
                    options.push(Choice::at(s, hi));
                }
            }
            pick(options, mode == MinimizeMode::AdversarialLow).expect("exact minimizer is always feasible")
        }
    }
}

/// Empirical (or `ρ`-approximate) minimizer. A function is `ρ`-approximate
/// when `P_n f ≤ inf P_n + ρ/n`.
pub fn minimize_empirical(
    class: &Class,
    p: &DiscreteMeasure,
    sample: &Sample,
    rho: f64,
    mode: MinimizeMode,
) -> Result<MinimizerResult> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(invalid("rho", "must be finite and nonnegative"));
    }
    let scored = scored_members(class, p, sample, false)?;
    let slack = rho / sample.n() as f64;
    let choice = if class.is_hull() {
        hull_choice(&scored, slack, mode)
    } else {
        explicit_choice(&scored, slack, mode).expect("class is nonempty")
    };
    Ok(MinimizerResult {
        member_id: choice.member,
        scale: choice.scale,
        empirical_value: choice.pn,
        true_value: choice.pf,
        rho,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class::{star_hull, FunctionClass};

    fn setup() -> (DiscreteMeasure, Sample) {
        (
            DiscreteMeasure::uniform(4).unwrap(),
            Sample::from_indices(4, vec![0, 0, 1], 0).unwrap(),
        )
    }

    #[test]
    fn tie_goes_to_smaller_expectation() {
        let (p, s) = setup();
        // both vanish on the sample; f has Pf = 0.5
        let c: Class = FunctionClass::from_rows(
            "t",
            vec![vec![0.0, 0.0, 1.0, 1.0], vec![0.0; 4]],
        )
        .unwrap()
        .into();
        let r = minimize_empirical(&c, &p, &s, 0.0, MinimizeMode::Exact).unwrap();
        assert_eq!(r.member_id, Some(1));
        assert_eq!(r.true_value, 0.0);
    }

    #[test]
    fn hull_picks_zero_when_nothing_negative() {
        let (p, s) = setup();
        let h: Class = star_hull(FunctionClass::from_rows("h", vec![vec![0.0, 0.0, 1.0, 1.0]]).unwrap()).into();
        let r = minimize_empirical(&h, &p, &s, 0.0, MinimizeMode::Exact).unwrap();
        assert_eq!(r.member_id, None);
        assert_eq!(r.scale, 0.0);
        // with slack the adversary can scale all the way up
        let hi = minimize_empirical(&h, &p, &s, 0.5, MinimizeMode::AdversarialHigh).unwrap();
        assert_eq!(hi.scale, 1.0);
        assert_eq!(hi.true_value, 0.5);
    }

    #[test]
    fn hull_adversarial_scales_negative_member() {
        let (p, s) = setup();
        // P_n f = -1/3 on the sample, Pf = 0.25
        let h: Class = star_hull(FunctionClass::from_rows("h", vec![vec![-0.5, 0.0, 1.0, 0.5]]).unwrap()).into();
        let ex = minimize_empirical(&h, &p, &s, 0.0, MinimizeMode::Exact).unwrap();
        assert!((ex.empirical_value + 1.0 / 3.0).abs() < 1e-15);
        let lo = minimize_empirical(&h, &p, &s, 0.3, MinimizeMode::AdversarialLow).unwrap();
        // a ≥ (−1/3 + 0.1)/(−1/3) = 0.7
        assert!((lo.scale - 0.7).abs() < 1e-12);
        assert!(lo.true_value <= ex.true_value);
        let hi = minimize_empirical(&h, &p, &s, 0.3, MinimizeMode::AdversarialHigh).unwrap();
        assert!(hi.true_value >= ex.true_value);
    }

    #[test]
    fn negative_rho_rejected() {
        let (p, s) = setup();
        let c: Class = FunctionClass::from_rows("c", vec![vec![0.0; 4]]).unwrap().into();
        assert!(minimize_empirical(&c, &p, &s, -1.0, MinimizeMode::Exact).is_err());
    }
}
