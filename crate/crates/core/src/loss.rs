//! Tabulated losses, joint `(x, y)` distributions and excess-loss classes.

use serde::{Deserialize, Serialize};

use crate::class::{FunctionClass, MEMBER_TOL};
use crate::error::{invalid, Error, Result};
use crate::measure::{DiscreteMeasure, FuncVec};
use crate::numeric::compensated_sum;

/// `ℓ(α, y)` on a finite prediction × response grid; `table[i][j]` is the
/// loss of prediction `predictions[i]` against response `responses[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub predictions: Vec<f64>,
    pub responses: Vec<f64>,
    pub table: Vec<Vec<f64>>,
}

fn grid_index(grid: &[f64], value: f64) -> Option<usize> {
    grid.iter().position(|g| (g - value).abs() <= MEMBER_TOL)
}

impl LossSpec {
    pub fn new(predictions: Vec<f64>, responses: Vec<f64>, table: Vec<Vec<f64>>) -> Result<Self> {
        if predictions.is_empty() || responses.is_empty() {
            return Err(invalid("loss", "grids must be nonempty"));
        }
        if table.len() != predictions.len() || table.iter().any(|row| row.len() != responses.len()) {
            return Err(invalid("loss", "table shape must be predictions × responses"));
        }
        if table.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("loss", "entries must be finite and nonnegative"));
        }
        Ok(LossSpec {
            predictions,
            responses,
            table,
        })
    }

    /// `ℓ(α, y) = 𝟙[α ≠ y]` on a shared label grid.
    pub fn discrete(labels: &[f64]) -> Self {
        let table = labels
            .iter()
            .map(|a| labels.iter().map(|y| if a == y { 0.0 } else { 1.0 }).collect())
            .collect();
        LossSpec {
            predictions: labels.to_vec(),
            responses: labels.to_vec(),
            table,
        }
    }

    pub fn eval(&self, alpha: f64, y: f64) -> Option<f64> {
        Some(self.table[grid_index(&self.predictions, alpha)?][grid_index(&self.responses, y)?])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointAtom {
    pub x: usize,
    pub y: f64,
    pub p: f64,
}

/// Law of `(X, Y)` as a list of weighted pairs. Each pair is one atom of the
/// product space on which losses live.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub x_atoms: usize,
    pub pairs: Vec<JointAtom>,
}

impl JointDistribution {
    pub fn new(x_atoms: usize, pairs: Vec<JointAtom>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidMeasure("joint distribution has no pairs".into()));
        }
        if let Some(a) = pairs.iter().find(|a| a.x >= x_atoms) {
            return Err(invalid("joint", format!("x-atom {} out of range 0..{x_atoms}", a.x)));
        }
        if pairs.iter().any(|a| !(a.p >= 0.0) || !a.p.is_finite() || !a.y.is_finite()) {
            return Err(Error::InvalidMeasure("pair probabilities must be finite and nonnegative".into()));
        }
        let total = compensated_sum(pairs.iter().map(|a| a.p));
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("pair probabilities sum to {total}, not 1")));
        }
        Ok(JointDistribution { x_atoms, pairs })
    }

    /// The measure on pair atoms.
    pub fn measure(&self) -> DiscreteMeasure {
        DiscreteMeasure::from_probs(self.pairs.iter().map(|a| a.p).collect())
            .expect("validated at construction")
    }

    /// Pair-space atom indices carrying an x-atom.
    pub fn atoms_of(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().enumerate().filter(move |(_, a)| a.x == x).map(|(i, _)| i)
    }
}

/// `ℓ_g(x, y) = ℓ(g(x), y)` on the pair atoms, for every predictor in `g_class`.
pub fn loss_class(g_class: &FunctionClass, loss: &LossSpec, joint: &JointDistribution) -> Result<FunctionClass> {
    if g_class.atom_count() != joint.x_atoms {
        return Err(Error::DimensionMismatch {
            expected: joint.x_atoms,
            actual: g_class.atom_count(),
        });
    }
    if let Some((k, a)) = joint
        .pairs
        .iter()
        .enumerate()
        .find(|(_, a)| grid_index(&loss.responses, a.y).is_none())
    {
        return Err(Error::OffGrid {
            grid: "response",
            value: a.y,
            position: k,
        });
    }
    let mut members = Vec::with_capacity(g_class.len());
    for g in g_class.members() {
        if let Some((x, &v)) = g
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| grid_index(&loss.predictions, **v).is_none())
        {
            return Err(Error::OffGrid {
                grid: "prediction",
                value: v,
                position: x,
            });
        }
        let values = joint
            .pairs
            .iter()
            .map(|a| loss.eval(g.values()[a.x], a.y).expect("grids checked"))
            .collect();
        members.push(FuncVec::new(values)?);
    }
    FunctionClass::new(format!("loss({})", g_class.label()), members)
}

/// `{ℓ_g − ℓ_{g*}}` on the pair space, where `g*` minimizes `Pℓ_g`
/// (lowest index among ties).
#[derive(Debug, Clone)]
pub struct ExcessLoss {
    pub class: FunctionClass,
    pub measure: DiscreteMeasure,
    pub g_star: usize,
    /// `Pℓ_g` for every predictor.
    pub risks: Vec<f64>,
}

/// Index of the smallest value, lowest index among ties within `MEMBER_TOL`.
pub(crate) fn argmin_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] - MEMBER_TOL {
            best = i;
        }
    }
    best
}

pub fn excess_loss_class(g_class: &FunctionClass, loss: &LossSpec, joint: &JointDistribution) -> Result<ExcessLoss> {
    let losses = loss_class(g_class, loss, joint)?;
    let measure = joint.measure();
    let risks: Vec<f64> = losses
        .members()
        .iter()
        .map(|l| measure.expect_unchecked(l.values()))
        .collect();
    let g_star = argmin_lowest(&risks);
    let star = losses.member(g_star).values().to_vec();
    let members = losses
        .members()
        .iter()
        .map(|l| FuncVec::new(l.values().iter().zip(&star).map(|(a, b)| a - b).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExcessLoss {
        class: FunctionClass::new(format!("excess({})", g_class.label()), members)?,
        measure,
        g_star,
        risks,
    })
}
