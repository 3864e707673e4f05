//! Function classes, star-shaped hulls and the sub-class descriptors used for
//! level sets and empirical slabs.
//!
//! A [`StarHull`] is never materialized. Every downstream computation uses
//! the fact that `a·f` has `P(a·f) = a·Pf` and `P_n(a·f) = a·P_n f`, so
//! suprema and minima over the continuum of scalings reduce to closed forms
//! over the base members.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::empirical::Sample;
use crate::error::{invalid, Error, Result};
use crate::measure::{DiscreteMeasure, FuncVec};

/// Coordinatewise tolerance used for membership and level tests.
pub const MEMBER_TOL: f64 = 1e-12;

/// Default half-width of the level band for explicit (non-hull) classes,
/// relative to the level.
pub const DEFAULT_LEVEL_BAND: f64 = 0.05;

/// A finite, explicitly listed class of functions on a shared atom set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionClass {
    label: String,
    members: Vec<FuncVec>,
}

impl FunctionClass {
    pub fn new(label: impl Into<String>, members: Vec<FuncVec>) -> Result<Self> {
        let first = members.first().ok_or(Error::EmptyClass)?;
        let m = first.len();
        if let Some(bad) = members.iter().find(|f| f.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: bad.len(),
            });
        }
        Ok(FunctionClass {
            label: label.into(),
            members,
        })
    }

    pub fn from_rows(label: impl Into<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let members = rows.into_iter().map(FuncVec::new).collect::<Result<Vec<_>>>()?;
        Self::new(label, members)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn members(&self) -> &[FuncVec] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &FuncVec {
        &self.members[i]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn atom_count(&self) -> usize {
        self.members[0].len()
    }

    pub fn sup_bound(&self) -> f64 {
        self.members.iter().fold(0.0, |acc, f| acc.max(f.sup_bound()))
    }

    /// Index of a member equal to `g` within `tol`, if any.
    pub fn position(&self, g: &FuncVec, tol: f64) -> Option<usize> {
        self.members.iter().position(|f| f.approx_eq(g, tol))
    }

    pub(crate) fn check_measure(&self, p: &DiscreteMeasure) -> Result<()> {
        if p.atom_count() != self.atom_count() {
            return Err(Error::DimensionMismatch {
                expected: self.atom_count(),
                actual: p.atom_count(),
            });
        }
        Ok(())
    }
}

/// A base member handed out by a [`ClassOracle`]; `member` is the oracle's
/// own identifier for it.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleMember {
    pub member: usize,
    pub values: FuncVec,
}

/// Access to a base family too large to list. The star hull of the family is
/// what downstream operations see.
pub trait ClassOracle: Send + Sync + fmt::Debug {
    fn label(&self) -> &str;

    /// The measure the family is defined against.
    fn measure(&self) -> &DiscreteMeasure;

    /// Uniform bound `b` on the base family.
    fn sup_bound(&self) -> f64;

    /// Linear minimization over the base family: for every base member `f`
    /// the returned set contains some `g` with `Pg = Pf` and
    /// `Σ w_i g_i ≤ Σ w_i f_i`.
    fn linear_minimize(&self, weights: &[f64]) -> Vec<OracleMember>;

    /// For each level `r`, `sup{Pg − P_n g : g in the hull, Pg = r}`, with 0
    /// for empty levels. `counts` are per-atom sample multiplicities.
    fn slab_sup(&self, counts: &[u32], n: usize, levels: &[f64]) -> Vec<f64>;

    /// A finite witness set of base members sufficient for Bernstein checks.
    fn representatives(&self) -> Vec<FuncVec>;

    /// Membership of `g` in the star hull of the family.
    fn contains(&self, g: &FuncVec) -> bool;
}

#[derive(Debug, Clone)]
pub enum HullBase {
    Explicit(FunctionClass),
    Oracle(Arc<dyn ClassOracle>),
}

/// `{a·f : f ∈ base, 0 ≤ a ≤ 1}`.
#[derive(Debug, Clone)]
pub struct StarHull {
    base: HullBase,
}

impl StarHull {
    pub fn base(&self) -> &HullBase {
        &self.base
    }

    pub fn explicit_base(&self) -> Option<&FunctionClass> {
        match &self.base {
            HullBase::Explicit(f) => Some(f),
            HullBase::Oracle(_) => None,
        }
    }

    pub fn oracle(&self) -> Option<&Arc<dyn ClassOracle>> {
        match &self.base {
            HullBase::Oracle(o) => Some(o),
            HullBase::Explicit(_) => None,
        }
    }

    pub fn atom_count(&self) -> usize {
        match &self.base {
            HullBase::Explicit(f) => f.atom_count(),
            HullBase::Oracle(o) => o.measure().atom_count(),
        }
    }

    pub fn sup_bound(&self) -> f64 {
        match &self.base {
            HullBase::Explicit(f) => f.sup_bound(),
            HullBase::Oracle(o) => o.sup_bound(),
        }
    }

    /// `g ∈ hull` iff `g = a·f` for some base `f` and `a ∈ [0, 1]`, within
    /// `MEMBER_TOL` per coordinate.
    pub fn contains(&self, g: &FuncVec) -> Result<bool> {
        if g.len() != self.atom_count() {
            return Err(Error::DimensionMismatch {
                expected: self.atom_count(),
                actual: g.len(),
            });
        }
        if g.values().iter().all(|v| v.abs() <= MEMBER_TOL) {
            return Ok(true);
        }
        match &self.base {
            HullBase::Explicit(class) => Ok(class.members().iter().any(|f| is_scaling_of(g, f))),
            HullBase::Oracle(o) => Ok(o.contains(g)),
        }
    }
}

/// Whether `g = a·f` for some `a ∈ [0, 1]`.
pub fn is_scaling_of(g: &FuncVec, f: &FuncVec) -> bool {
    let ff: f64 = f.values().iter().map(|v| v * v).sum();
    if ff == 0.0 {
        return g.values().iter().all(|v| v.abs() <= MEMBER_TOL);
    }
    let gf: f64 = g.values().iter().zip(f.values()).map(|(a, b)| a * b).sum();
    let a = gf / ff;
    if !(-MEMBER_TOL..=1.0 + MEMBER_TOL).contains(&a) {
        return false;
    }
    let a = a.clamp(0.0, 1.0);
    g.values()
        .iter()
        .zip(f.values())
        .all(|(gv, fv)| (gv - a * fv).abs() <= MEMBER_TOL)
}

pub fn star_hull(class: FunctionClass) -> StarHull {
    StarHull {
        base: HullBase::Explicit(class),
    }
}

pub fn star_hull_of_oracle(oracle: Arc<dyn ClassOracle>) -> StarHull {
    StarHull {
        base: HullBase::Oracle(oracle),
    }
}

/// Either an explicit finite class or a star hull.
#[derive(Debug, Clone)]
pub enum Class {
    Explicit(FunctionClass),
    Hull(StarHull),
}

impl Class {
    pub fn atom_count(&self) -> usize {
        match self {
            Class::Explicit(f) => f.atom_count(),
            Class::Hull(h) => h.atom_count(),
        }
    }

    pub fn sup_bound(&self) -> f64 {
        match self {
            Class::Explicit(f) => f.sup_bound(),
            Class::Hull(h) => h.sup_bound(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Class::Explicit(f) => f.label().to_string(),
            Class::Hull(h) => match h.base() {
                HullBase::Explicit(f) => format!("star({})", f.label()),
                HullBase::Oracle(o) => format!("star({})", o.label()),
            },
        }
    }

    pub fn is_hull(&self) -> bool {
        matches!(self, Class::Hull(_))
    }

    /// The explicit member list backing this class, if any.
    pub fn explicit_members(&self) -> Option<&FunctionClass> {
        match self {
            Class::Explicit(f) => Some(f),
            Class::Hull(h) => h.explicit_base(),
        }
    }

    pub(crate) fn check_measure(&self, p: &DiscreteMeasure) -> Result<()> {
        if p.atom_count() != self.atom_count() {
            return Err(Error::DimensionMismatch {
                expected: self.atom_count(),
                actual: p.atom_count(),
            });
        }
        Ok(())
    }
}

impl From<FunctionClass> for Class {
    fn from(f: FunctionClass) -> Self {
        Class::Explicit(f)
    }
}

impl From<StarHull> for Class {
    fn from(h: StarHull) -> Self {
        Class::Hull(h)
    }
}

/// One entry of a sub-class descriptor: base member `member` at every scale
/// in `[lo, hi]`. Explicit classes use `lo = hi = 1`; level sets of hulls use
/// a single scale `lo = hi = r/Pf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledRange {
    pub member: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Finite description of a sub-class of an explicit class or of the star
/// hull of an explicit base.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SubClass {
    pub entries: Vec<ScaledRange>,
}

impl SubClass {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn members(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.member).collect()
    }

    /// Whole-class descriptor at unit scale.
    pub fn all(class: &FunctionClass) -> Self {
        SubClass {
            entries: (0..class.len())
                .map(|member| ScaledRange {
                    member,
                    lo: 1.0,
                    hi: 1.0,
                })
                .collect(),
        }
    }

    /// Endpoint functions of every entry (one per entry when `lo == hi`).
    pub fn materialize(&self, base: &FunctionClass) -> Vec<FuncVec> {
        let mut out = Vec::new();
        for e in &self.entries {
            out.push(base.member(e.member).scaled(e.lo));
            if e.hi != e.lo {
                out.push(base.member(e.member).scaled(e.hi));
            }
        }
        out
    }
}

/// Options for level sets of explicit (non-hull) classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelOptions {
    /// Members with `|Pf − r| ≤ band·r` count as level-`r` members.
    pub band: f64,
}

impl Default for LevelOptions {
    fn default() -> Self {
        LevelOptions {
            band: DEFAULT_LEVEL_BAND,
        }
    }
}

/// `F_r = {g : Pg = r}`.
///
/// For hulls this is exact: `{(r/Pf)·f : Pf ≥ r}`. Explicit classes use the
/// band `[r − h, r + h]` with `h = band·r`.
pub fn level_set(
    class: &Class,
    r: f64,
    p: &DiscreteMeasure,
    opts: &LevelOptions,
) -> Result<SubClass> {
    if !(r >= 0.0) {
        return Err(invalid("r", format!("level must be nonnegative, got {r}")));
    }
    class.check_measure(p)?;
    match class {
        Class::Explicit(f) => {
            let h = opts.band * r;
            let entries = f
                .members()
                .iter()
                .enumerate()
                .filter(|(_, g)| (p.expect_unchecked(g.values()) - r).abs() <= h + MEMBER_TOL)
                .map(|(member, _)| ScaledRange {
                    member,
                    lo: 1.0,
                    hi: 1.0,
                })
                .collect();
            Ok(SubClass { entries })
        }
        Class::Hull(hull) => {
            let base = hull.explicit_base().ok_or_else(|| {
                Error::Unsupported("level_set needs an explicit hull base".into())
            })?;
            let mut entries = Vec::new();
            for (member, f) in base.members().iter().enumerate() {
                let pf = p.expect_unchecked(f.values());
                if pf > 0.0 && pf >= r - MEMBER_TOL {
                    let a = (r / pf).min(1.0);
                    entries.push(ScaledRange { member, lo: a, hi: a });
                }
            }
            Ok(SubClass { entries })
        }
    }
}

/// `F(δ) = {f ∈ F : Pf ≤ inf_F Pf + δ}`.
pub fn sublevel_class(class: &FunctionClass, p: &DiscreteMeasure, delta: f64) -> Result<FunctionClass> {
    if !(delta >= 0.0) {
        return Err(invalid("delta", "must be nonnegative"));
    }
    class.check_measure(p)?;
    let risks: Vec<f64> = class
        .members()
        .iter()
        .map(|f| p.expect_unchecked(f.values()))
        .collect();
    let best = risks.iter().copied().fold(f64::INFINITY, f64::min);
    let keep = class
        .members()
        .iter()
        .zip(&risks)
        .filter(|(_, &r)| r <= best + delta)
        .map(|(f, _)| f.clone())
        .collect();
    FunctionClass::new(format!("{}(delta={delta})", class.label()), keep)
}

/// `F̂_r = {g : c1·r ≤ P_n g ≤ c2·r}`.
///
/// For hulls each base member contributes the exact interval of scales
/// `a ∈ (0, 1]` that lands its empirical mean inside the slab.
pub fn empirical_slab(class: &Class, sample: &Sample, c1: f64, c2: f64, r: f64) -> Result<SubClass> {
    check_slab_constants(c1, c2)?;
    if !(r > 0.0) {
        return Err(invalid("r", "slab level must be positive"));
    }
    let (base, scaled) = match class {
        Class::Explicit(f) => (f, false),
        Class::Hull(h) => (
            h.explicit_base().ok_or_else(|| {
                Error::Unsupported("empirical slabs need an explicit hull base".into())
            })?,
            true,
        ),
    };
    sample.check_atoms(base.atom_count())?;
    let (lo_level, hi_level) = (c1 * r, c2 * r);
    let mut entries = Vec::new();
    for (member, f) in base.members().iter().enumerate() {
        let pn = sample.mean_unchecked(f.values());
        if !scaled {
            if pn >= lo_level - MEMBER_TOL && pn <= hi_level + MEMBER_TOL {
                entries.push(ScaledRange { member, lo: 1.0, hi: 1.0 });
            }
        } else if pn > 0.0 {
            let lo = lo_level / pn;
            let hi = (hi_level / pn).min(1.0);
            if lo <= hi {
                entries.push(ScaledRange { member, lo, hi });
            }
        }
    }
    Ok(SubClass { entries })
}

pub(crate) fn check_slab_constants(c1: f64, c2: f64) -> Result<()> {
    if !(c1 > 0.0 && c1 < 1.0) {
        return Err(invalid("c1", format!("need 0 < c1 < 1, got {c1}")));
    }
    if !(c2 > 1.0 && c2.is_finite()) {
        return Err(invalid("c2", format!("need c2 > 1, got {c2}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(v: &[f64]) -> FuncVec {
        FuncVec::new(v.to_vec()).unwrap()
    }

    #[test]
    fn hull_membership_examples() {
        let base = FunctionClass::new("one", vec![f(&[1.0, -0.5, 2.0])]).unwrap();
        let hull = star_hull(base.clone());
        assert!(hull.contains(&base.member(0).scaled(0.5)).unwrap());
        assert!(hull.contains(&FuncVec::zeros(3)).unwrap());
        assert!(!hull.contains(&base.member(0).scaled(1.5)).unwrap());
        assert!(!hull.contains(&base.member(0).scaled(-0.5)).unwrap());
        assert!(!hull.contains(&f(&[1.0, 0.0, 2.0])).unwrap());
    }

    #[test]
    fn class_requires_members_of_equal_length() {
        assert_eq!(FunctionClass::new("e", vec![]), Err(Error::EmptyClass));
        assert!(matches!(
            FunctionClass::new("x", vec![f(&[1.0]), f(&[1.0, 2.0])]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn hull_level_set_scales_to_level() {
        let p = DiscreteMeasure::uniform(2).unwrap();
        let hull: Class = star_hull(FunctionClass::new("h", vec![f(&[1.0, 0.0])]).unwrap()).into();
        let opts = LevelOptions::default();
        let ls = level_set(&hull, 0.25, &p, &opts).unwrap();
        assert_eq!(ls.entries, vec![ScaledRange { member: 0, lo: 0.5, hi: 0.5 }]);
        assert!(level_set(&hull, 0.6, &p, &opts).unwrap().is_empty());
        assert!(level_set(&hull, -0.1, &p, &opts).is_err());
    }

    #[test]
    fn explicit_level_set_uses_band() {
        let p = DiscreteMeasure::uniform(2).unwrap();
        let c: Class = FunctionClass::new("c", vec![f(&[1.0, 0.0]), f(&[1.04, 0.0]), f(&[1.2, 0.0])])
            .unwrap()
            .into();
        let ls = level_set(&c, 0.5, &p, &LevelOptions::default()).unwrap();
        assert_eq!(ls.members(), vec![0, 1]);
    }

    #[test]
    fn sublevel_examples() {
        let p = DiscreteMeasure::uniform(1).unwrap();
        let c = FunctionClass::from_rows("s", vec![vec![0.1], vec![0.2], vec![0.5], vec![0.1]]).unwrap();
        assert_eq!(sublevel_class(&c, &p, 0.0).unwrap().len(), 2);
        assert_eq!(sublevel_class(&c, &p, 0.15).unwrap().len(), 3);
        assert_eq!(sublevel_class(&c, &p, 1.0).unwrap().len(), 4);
    }

    #[test]
    fn slab_membership() {
        let s = Sample::from_indices(4, vec![0, 1, 1], 0).unwrap();
        let c: Class = FunctionClass::from_rows(
            "s",
            vec![vec![0.3, 0.3, 0.0, 0.0], vec![0.0, 0.0, 1.0, 1.0]],
        )
        .unwrap()
        .into();
        // member 0 has P_n = 0.3 = r; member 1 has P_n = 0
        let slab = empirical_slab(&c, &s, 0.5, 2.0, 0.3).unwrap();
        assert_eq!(slab.members(), vec![0]);
        assert!(empirical_slab(&c, &s, 1.0, 2.0, 0.3).is_err());
        assert!(empirical_slab(&c, &s, 0.5, 0.9, 0.3).is_err());
    }

    #[test]
    fn hull_slab_gives_scale_interval() {
        let s = Sample::from_indices(2, vec![0, 0], 0).unwrap();
        let hull: Class = star_hull(FunctionClass::from_rows("h", vec![vec![0.8, 0.0]]).unwrap()).into();
        let slab = empirical_slab(&hull, &s, 0.5, 2.0, 0.2).unwrap();
        assert_eq!(slab.entries.len(), 1);
        let e = slab.entries[0];
        assert!((e.lo - 0.125).abs() < 1e-15 && (e.hi - 0.5).abs() < 1e-15);
    }
}
