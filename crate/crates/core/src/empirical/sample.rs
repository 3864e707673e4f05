use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measure::{DiscreteMeasure, FuncVec};
use crate::numeric::compensated_sum;

/// `X_1, …, X_n` as atom indices, with per-atom multiplicities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    indices: Vec<usize>,
    counts: Vec<u32>,
    seed: u64,
}

impl Sample {
    pub fn from_indices(atom_count: usize, indices: Vec<usize>, seed: u64) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("n", "sample must be nonempty"));
        }
        let mut counts = vec![0u32; atom_count];
        for &i in &indices {
            *counts
                .get_mut(i)
                .ok_or_else(|| invalid("indices", format!("atom {i} out of range 0..{atom_count}")))? += 1;
        }
        Ok(Sample {
            indices,
            counts,
            seed,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.indices.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn atom_count(&self) -> usize {
        self.counts.len()
    }

    /// Empirical measure `counts / n` as a weight vector.
    pub fn empirical_weights(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub(crate) fn check_atoms(&self, m: usize) -> Result<()> {
        if m != self.atom_count() {
            return Err(Error::DimensionMismatch {
                expected: self.atom_count(),
                actual: m,
            });
        }
        Ok(())
    }

    pub(crate) fn mean_unchecked(&self, values: &[f64]) -> f64 {
        compensated_sum(
            self.counts
                .iter()
                .zip(values)
                .filter(|(&c, _)| c > 0)
                .map(|(&c, v)| c as f64 * v),
        ) / self.n() as f64
    }

    pub fn to_record(&self) -> SampleRecord {
        SampleRecord {
            seed: self.seed,
            n: self.n(),
            indices: self.indices.clone(),
        }
    }

    pub fn from_record(atom_count: usize, record: &SampleRecord) -> Result<Self> {
        if record.n != record.indices.len() {
            return Err(invalid(
                "n",
                format!("record says n = {} but lists {} indices", record.n, record.indices.len()),
            ));
        }
        Sample::from_indices(atom_count, record.indices.clone(), record.seed)
    }
}

/// JSON replay form of a sample: `{"seed":…, "n":…, "indices":[…]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub seed: u64,
    pub n: usize,
    pub indices: Vec<usize>,
}

/// Draws `n` i.i.d. atoms from `p`. `seed` is stored as provenance only; the
/// draw is a function of the stream state.
pub fn draw_sample<R: Rng + ?Sized>(p: &DiscreteMeasure, n: usize, seed: u64, rng: &mut R) -> Result<Sample> {
    if n == 0 {
        return Err(invalid("n", "sample size must be at least 1"));
    }
    let dist = WeightedIndex::new(p.probs()).map_err(|e| Error::InvalidMeasure(e.to_string()))?;
    let indices: Vec<usize> = (0..n).map(|_| dist.sample(rng)).collect();
    Sample::from_indices(p.atom_count(), indices, seed)
}

/// `P_n f = (1/n) Σ f(X_i)`.
pub fn empirical_mean(f: &FuncVec, s: &Sample) -> Result<f64> {
    s.check_atoms(f.len())?;
    Ok(s.mean_unchecked(f.values()))
}
