//! Finite probability spaces and real functions on their atoms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

pub const PROB_SUM_TOL: f64 = 1e-12;

/// Probability measure on atoms `0..m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    probs: Vec<f64>,
}

impl DiscreteMeasure {
    /// Normalizes nonnegative weights into a probability vector.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "weight {} at atom {i} is negative or not finite",
                weights[i]
            )));
        }
        let total = compensated_sum(weights.iter().copied());
        if !(total > 0.0) {
            return Err(Error::InvalidMeasure("all weights are zero".into()));
        }
        Ok(DiscreteMeasure {
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    /// Takes probabilities as given; they must already sum to one.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "probability {} at atom {i} is negative or not finite",
                probs[i]
            )));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidMeasure(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(DiscreteMeasure { probs })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        Self::from_weights(&vec![1.0; m])
    }

    pub fn point_mass(m: usize, atom: usize) -> Result<Self> {
        let mut w = vec![0.0; m];
        *w.get_mut(atom)
            .ok_or_else(|| Error::InvalidMeasure(format!("atom {atom} out of range")))? = 1.0;
        Self::from_weights(&w)
    }

    pub fn atom_count(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn check(&self, f: &FuncVec) -> Result<()> {
        if f.len() != self.atom_count() {
            return Err(Error::DimensionMismatch {
                expected: self.atom_count(),
                actual: f.len(),
            });
        }
        Ok(())
    }

    /// `Pf`.
    pub fn expectation(&self, f: &FuncVec) -> Result<f64> {
        self.check(f)?;
        Ok(self.expect_unchecked(f.values()))
    }

    /// `Pf²`.
    pub fn moment2(&self, f: &FuncVec) -> Result<f64> {
        self.check(f)?;
        Ok(compensated_sum(
            self.probs.iter().zip(f.values()).map(|(p, v)| p * v * v),
        ))
    }

    pub(crate) fn expect_unchecked(&self, values: &[f64]) -> f64 {
        compensated_sum(self.probs.iter().zip(values).map(|(p, v)| p * v))
    }
}

/// `make_measure`: normalize weights.
pub fn make_measure(weights: &[f64]) -> Result<DiscreteMeasure> {
    DiscreteMeasure::from_weights(weights)
}

/// A real function on the atoms together with its sup norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuncVec {
    values: Vec<f64>,
    sup_bound: f64,
}

impl FuncVec {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(format!(
                "value at atom {i} is not finite"
            )));
        }
        let sup_bound = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        Ok(FuncVec { values, sup_bound })
    }

    pub fn zeros(m: usize) -> Self {
        FuncVec {
            values: vec![0.0; m],
            sup_bound: 0.0,
        }
    }

    pub fn indicator(m: usize, atoms: &[usize]) -> Self {
        let mut values = vec![0.0; m];
        for &a in atoms {
            values[a] = 1.0;
        }
        FuncVec::new(values).expect("indicator values are finite")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn is_zero(&self) -> bool {
        self.sup_bound == 0.0
    }

    pub fn scaled(&self, a: f64) -> FuncVec {
        FuncVec {
            values: self.values.iter().map(|v| a * v).collect(),
            sup_bound: a.abs() * self.sup_bound,
        }
    }

    /// Coordinatewise equality within `tol`.
    pub fn approx_eq(&self, other: &FuncVec, tol: f64) -> bool {
        self.len() == other.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

impl<'de> Deserialize<'de> for FuncVec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        FuncVec::new(values).map_err(serde::de::Error::custom)
    }
}

impl<'de> Deserialize<'de> for DiscreteMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            probs: Vec<f64>,
        }
        let raw = Raw::deserialize(d)?;
        DiscreteMeasure::from_probs(raw.probs).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_examples() {
        assert_eq!(make_measure(&[1.0; 4]).unwrap().probs(), &[0.25; 4]);
        assert_eq!(make_measure(&[0.3, 0.7]).unwrap().probs(), &[0.3, 0.7]);
        assert_eq!(make_measure(&[2.0, 6.0]).unwrap().probs(), &[0.25, 0.75]);
    }

    #[test]
    fn invalid_weights_rejected() {
        assert!(matches!(make_measure(&[0.0, 0.0]), Err(Error::InvalidMeasure(_))));
        assert!(matches!(make_measure(&[1.0, -0.5]), Err(Error::InvalidMeasure(_))));
        assert!(matches!(make_measure(&[f64::NAN]), Err(Error::InvalidMeasure(_))));
        assert!(DiscreteMeasure::from_probs(vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn moments_of_simple_functions() {
        let p = make_measure(&[0.3, 0.2, 0.5]).unwrap();
        assert_eq!(p.expectation(&FuncVec::zeros(3)).unwrap(), 0.0);
        let ind = FuncVec::indicator(3, &[0]);
        assert!((p.expectation(&ind).unwrap() - 0.3).abs() < 1e-15);
        assert!((p.moment2(&ind).unwrap() - 0.3).abs() < 1e-15);
        assert!(matches!(
            p.expectation(&FuncVec::zeros(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quarter_measure_indicator() {
        let p = DiscreteMeasure::uniform(16).unwrap();
        let f = FuncVec::indicator(16, &[1, 5, 9, 13]);
        assert_eq!(p.expectation(&f).unwrap(), 0.25);
    }

    #[test]
    fn sup_bound_is_exact() {
        let f = FuncVec::new(vec![0.5, -2.0, 1.0]).unwrap();
        assert_eq!(f.sup_bound(), 2.0);
        assert!(FuncVec::new(vec![f64::INFINITY]).is_err());
    }
}
