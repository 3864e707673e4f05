//! Per-sample `(Pf, P_n f)` summaries and the closed-form hull suprema built
//! on them.

use crate::class::{Class, HullBase, MEMBER_TOL};
use crate::empirical::Sample;
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Scored {
    pub member: usize,
    pub pf: f64,
    pub pn: f64,
}

pub(crate) fn check_oracle_measure(p: &DiscreteMeasure, oracle_p: &DiscreteMeasure) -> Result<()> {
    if p.atom_count() != oracle_p.atom_count() {
        return Err(Error::DimensionMismatch {
            expected: oracle_p.atom_count(),
            actual: p.atom_count(),
        });
    }
    if p.probs().iter().zip(oracle_p.probs()).any(|(a, b)| (a - b).abs() > 1e-15) {
        return Err(Error::Precondition(
            "measure differs from the one the class oracle was built for".into(),
        ));
    }
    Ok(())
}

/// Members that can attain any extreme of a linear functional in `P_n` within
/// their expectation level. Explicit classes return every member; oracle
/// hulls return the linear-minimization candidates for `P_n` (and, with
/// `both_sides`, for `−P_n` as well).
pub(crate) fn scored_members(
    class: &Class,
    p: &DiscreteMeasure,
    sample: &Sample,
    both_sides: bool,
) -> Result<Vec<Scored>> {
    class.check_measure(p)?;
    sample.check_atoms(class.atom_count())?;
    let explicit = match class {
        Class::Explicit(f) => Some(f),
        Class::Hull(h) => match h.base() {
            HullBase::Explicit(f) => Some(f),
            HullBase::Oracle(_) => None,
        },
    };
    if let Some(f) = explicit {
        return Ok(f
            .members()
            .iter()
            .enumerate()
            .map(|(member, g)| Scored {
                member,
                pf: p.expect_unchecked(g.values()),
                pn: sample.mean_unchecked(g.values()),
            })
            .collect());
    }
    let Class::Hull(h) = class else { unreachable!() };
    let oracle = h.oracle().expect("oracle-backed hull");
    check_oracle_measure(p, oracle.measure())?;
    let mut weights = sample.empirical_weights();
    let mut cands = oracle.linear_minimize(&weights);
    if both_sides {
        weights.iter_mut().for_each(|w| *w = -*w);
        cands.extend(oracle.linear_minimize(&weights));
    }
    Ok(cands
        .into_iter()
        .map(|c| Scored {
            member: c.member,
            pf: p.expect_unchecked(c.values.values()),
            pn: sample.mean_unchecked(c.values.values()),
        })
        .collect())
}

/// `r · max{1 − P_n f / Pf : Pf ≥ r}` per level, 0 on empty levels.
pub(crate) fn hull_level_sups(scored: &[Scored], levels: &[f64]) -> Vec<f64> {
    let mut pos: Vec<&Scored> = scored.iter().filter(|s| s.pf > 0.0).collect();
    pos.sort_by(|a, b| b.pf.total_cmp(&a.pf));
    let mut prefix = Vec::with_capacity(pos.len());
    let mut best = f64::NEG_INFINITY;
    for s in &pos {
        best = best.max(1.0 - s.pn / s.pf);
        prefix.push(best);
    }
    levels
        .iter()
        .map(|&r| {
            let k = pos.partition_point(|s| s.pf >= r - MEMBER_TOL);
            if k == 0 {
                0.0
            } else {
                r * prefix[k - 1]
            }
        })
        .collect()
}

/// Band level sets of explicit classes: `max{Pf − P_n f : |Pf − r| ≤ band·r}`.
pub(crate) fn band_level_sups(scored: &[Scored], levels: &[f64], band: f64) -> Vec<f64> {
    levels
        .iter()
        .map(|&r| {
            scored
                .iter()
                .filter(|s| (s.pf - r).abs() <= band * r + MEMBER_TOL)
                .map(|s| s.pf - s.pn)
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
                .unwrap_or(0.0)
        })
        .collect()
}

/// `sup{Pg − P_n g : 0 ≤ Pg ≤ r_max}` over the hull (or over the explicit
/// members when `hull` is false); 0 when nothing qualifies.
pub(crate) fn interval_sup(scored: &[Scored], r_max: f64, hull: bool) -> f64 {
    if hull {
        scored.iter().fold(0.0_f64, |acc, s| {
            let v = if s.pf > MEMBER_TOL {
                (r_max / s.pf).min(1.0) * (s.pf - s.pn)
            } else if s.pf.abs() <= MEMBER_TOL {
                -s.pn
            } else {
                0.0
            };
            acc.max(v)
        })
    } else {
        scored
            .iter()
            .filter(|s| s.pf >= -MEMBER_TOL && s.pf <= r_max + MEMBER_TOL)
            .map(|s| s.pf - s.pn)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
            .unwrap_or(0.0)
    }
}

/// Per-level suprema of `Pg − P_n g` over `F_r` for one sample.
pub(crate) fn level_sups(
    class: &Class,
    p: &DiscreteMeasure,
    sample: &Sample,
    levels: &[f64],
    band: f64,
) -> Result<Vec<f64>> {
    match class {
        Class::Hull(h) => match h.base() {
            HullBase::Oracle(o) => {
                class.check_measure(p)?;
                check_oracle_measure(p, o.measure())?;
                sample.check_atoms(class.atom_count())?;
                Ok(o.slab_sup(sample.counts(), sample.n(), levels))
            }
            HullBase::Explicit(_) => Ok(hull_level_sups(&scored_members(class, p, sample, false)?, levels)),
        },
        Class::Explicit(_) => Ok(band_level_sups(&scored_members(class, p, sample, false)?, levels, band)),
    }
}
