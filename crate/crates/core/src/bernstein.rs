//! Bernstein certificates: the smallest `B` with `Pf² ≤ B·(Pf)^β` over a class.
//!
//! For a star hull the scaled member `a·f` has ratio
//! `a^{2−β}·Pf²/(Pf)^β`, increasing in `a`, so checking the base members
//! (the `a = 1` endpoint) covers the whole hull.

use serde::Serialize;

use crate::class::{Class, HullBase, MEMBER_TOL};
use crate::empirical::scored;
use crate::error::{invalid, Result};
use crate::measure::{DiscreteMeasure, FuncVec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BernsteinCert {
    pub beta: f64,
    /// `sup Pf²/(Pf)^β` over checked members; infinite when some member has
    /// `Pf ≤ 0` but `Pf² > 0`.
    #[serde(rename = "B")]
    pub constant: f64,
    /// Index (into the checked list) of the member attaining the supremum.
    pub worst_member: Option<usize>,
    pub satisfied: bool,
    pub checked: usize,
    /// Largest sup norm among checked members.
    pub sup_bound: f64,
}

impl BernsteinCert {
    /// Whether the certificate shows the class is `(β, bound)`-Bernstein.
    pub fn holds_with(&self, bound: f64) -> bool {
        self.satisfied && self.constant <= bound + MEMBER_TOL
    }
}

pub fn bernstein_certificate(class: &Class, p: &DiscreteMeasure, beta: f64) -> Result<BernsteinCert> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid("beta", format!("need 0 < beta <= 1, got {beta}")));
    }
    class.check_measure(p)?;
    let reps;
    let members: &[FuncVec] = match class {
        Class::Explicit(f) => f.members(),
        Class::Hull(h) => match h.base() {
            HullBase::Explicit(f) => f.members(),
            HullBase::Oracle(o) => {
                scored::check_oracle_measure(p, o.measure())?;
                reps = o.representatives();
                &reps
            }
        },
    };
    certify_members(members, p, beta)
}

pub(crate) fn certify_members(members: &[FuncVec], p: &DiscreteMeasure, beta: f64) -> Result<BernsteinCert> {
    let mut constant = 0.0_f64;
    let mut worst = None;
    let mut satisfied = true;
    let mut sup_bound = 0.0_f64;
    for (i, f) in members.iter().enumerate() {
        sup_bound = sup_bound.max(f.sup_bound());
        let pf = p.expectation(f)?;
        let pf2 = p.moment2(f)?;
        if pf2 <= MEMBER_TOL * MEMBER_TOL {
            continue;
        }
        if pf <= MEMBER_TOL {
            if satisfied {
                worst = Some(i);
            }
            satisfied = false;
            constant = f64::INFINITY;
            continue;
        }
        let ratio = pf2 / pf.powf(beta);
        if satisfied && (worst.is_none() || ratio > constant) {
            constant = ratio;
            worst = Some(i);
        }
    }
    Ok(BernsteinCert {
        beta,
        constant,
        worst_member: worst,
        satisfied,
        checked: members.len(),
        sup_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class::{star_hull, FunctionClass};

    #[test]
    fn indicators_have_constant_one() {
        let p = DiscreteMeasure::from_weights(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let c: Class = FunctionClass::from_rows(
            "ind",
            vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 1.0, 1.0], vec![0.0; 4]],
        )
        .unwrap()
        .into();
        let cert = bernstein_certificate(&c, &p, 1.0).unwrap();
        assert!(cert.satisfied);
        assert!((cert.constant - 1.0).abs() < 1e-15);
    }

    #[test]
    fn block_difference_has_constant_two() {
        // P(B) = 3/(2n), P(C) = 1/(2n) with n = 4 on 16 uniform atoms
        let n = 4.0;
        let m = 16;
        let p = DiscreteMeasure::uniform(m).unwrap();
        let mut v = vec![0.0; m];
        let b_atoms = (3.0 * m as f64 / (2.0 * n)) as usize;
        let c_atoms = (m as f64 / (2.0 * n)) as usize;
        v[..b_atoms].iter_mut().for_each(|x| *x = 1.0);
        v[b_atoms..b_atoms + c_atoms].iter_mut().for_each(|x| *x = -1.0);
        let f = FuncVec::new(v).unwrap();
        assert_eq!(p.expectation(&f).unwrap(), 1.0 / n);
        assert_eq!(p.moment2(&f).unwrap(), 2.0 / n);
        let c: Class = star_hull(FunctionClass::new("pair", vec![f]).unwrap()).into();
        let cert = bernstein_certificate(&c, &p, 1.0).unwrap();
        assert_eq!(cert.constant, 2.0);
        assert_eq!(cert.worst_member, Some(0));
    }

    #[test]
    fn nonpositive_mean_breaks_certificate() {
        let p = DiscreteMeasure::uniform(2).unwrap();
        let c: Class = FunctionClass::from_rows("bad", vec![vec![1.0, 0.0], vec![1.0, -1.0]])
            .unwrap()
            .into();
        let cert = bernstein_certificate(&c, &p, 1.0).unwrap();
        assert!(!cert.satisfied);
        assert_eq!(cert.worst_member, Some(1));
        assert!(!cert.holds_with(100.0));
    }

    #[test]
    fn beta_range_checked() {
        let p = DiscreteMeasure::uniform(1).unwrap();
        let c: Class = FunctionClass::from_rows("z", vec![vec![0.5]]).unwrap().into();
        assert!(bernstein_certificate(&c, &p, 0.0).is_err());
        assert!(bernstein_certificate(&c, &p, 1.5).is_err());
        let half = bernstein_certificate(&c, &p, 0.5).unwrap();
        assert!((half.constant - 0.25 / 0.5_f64.sqrt()).abs() < 1e-15);
    }
}
