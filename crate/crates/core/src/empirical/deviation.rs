use serde::Serialize;

use super::scored::scored_members;
use super::Sample;
use crate::class::Class;
use crate::error::Result;
use crate::measure::DiscreteMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    /// `sup (Pf − P_n f)`.
    pub signed: f64,
    /// `sup |Pf − P_n f| = ‖P − P_n‖_F`.
    pub absolute: f64,
}

/// Exact suprema of the empirical process over the class. Hulls contain the
/// zero function, so both suprema are at least 0 there and are attained at
/// unit scale.
pub fn sup_deviation(class: &Class, p: &DiscreteMeasure, s: &Sample) -> Result<Deviation> {
    let scored = scored_members(class, p, s, true)?;
    let init = if class.is_hull() { 0.0 } else { f64::NEG_INFINITY };
    let signed = scored.iter().map(|x| x.pf - x.pn).fold(init, f64::max);
    let absolute = scored.iter().map(|x| (x.pf - x.pn).abs()).fold(init.max(0.0), f64::max);
    Ok(Deviation { signed, absolute })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class::{star_hull, FunctionClass};

    #[test]
    fn zero_class_has_no_deviation() {
        let p = DiscreteMeasure::uniform(3).unwrap();
        let s = Sample::from_indices(3, vec![0, 1], 0).unwrap();
        let c: Class = FunctionClass::from_rows("z", vec![vec![0.0; 3]]).unwrap().into();
        assert_eq!(sup_deviation(&c, &p, &s).unwrap(), Deviation { signed: 0.0, absolute: 0.0 });
    }

    #[test]
    fn hull_signed_sup_is_clamped_at_zero() {
        let p = DiscreteMeasure::uniform(2).unwrap();
        let s = Sample::from_indices(2, vec![0, 0], 0).unwrap();
        // Pf = 0.5, P_n f = 1
        let base = FunctionClass::from_rows("b", vec![vec![1.0, 0.0]]).unwrap();
        let explicit = sup_deviation(&base.clone().into(), &p, &s).unwrap();
        assert_eq!(explicit.signed, -0.5);
        assert_eq!(explicit.absolute, 0.5);
        let hull = sup_deviation(&star_hull(base).into(), &p, &s).unwrap();
        assert_eq!(hull.signed, 0.0);
        assert_eq!(hull.absolute, 0.5);
    }
}
