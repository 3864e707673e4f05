use rand::Rng;

use crate::class::FunctionClass;
use crate::error::{invalid, Error, Result};
use crate::loss::{JointAtom, JointDistribution, LossSpec};
use crate::measure::DiscreteMeasure;
use crate::rng;

pub const MAX_CLASSIFICATION_ATOMS: usize = 10;

/// Binary classification with `|Pr(Y = 1 | x) − 1/2| ≥ margin` everywhere.
#[derive(Debug, Clone)]
pub struct ClassificationScenario {
    /// All `2^atoms` labelings (member `b` labels atom `x` with bit `x` of
    /// `b`), or a random subset that contains the Bayes labeling.
    pub predictors: FunctionClass,
    pub loss: LossSpec,
    pub joint: JointDistribution,
    pub marginal: DiscreteMeasure,
    /// `Pr(Y = 1 | x)`.
    pub eta: Vec<f64>,
    /// Index of the Bayes labeling in `predictors`.
    pub bayes: usize,
}

pub fn classification_scenario(margin: f64, atoms: usize, seed: u64) -> Result<ClassificationScenario> {
    if atoms > MAX_CLASSIFICATION_ATOMS {
        return Err(Error::Resource(format!(
            "{atoms} atoms would need 2^{atoms} labelings; the cap is {MAX_CLASSIFICATION_ATOMS}"
        )));
    }
    build(margin, atoms, None, seed)
}

/// Same law, but the predictors are the Bayes labeling (index 0) followed by
/// `count − 1` uniformly random labelings (stream `(seed, "classification-predictors", 0)`).
pub fn sampled_classification_scenario(
    margin: f64,
    atoms: usize,
    count: usize,
    seed: u64,
) -> Result<ClassificationScenario> {
    if count == 0 {
        return Err(invalid("predictors", "need at least one predictor"));
    }
    build(margin, atoms, Some(count), seed)
}

fn build(margin: f64, atoms: usize, count: Option<usize>, seed: u64) -> Result<ClassificationScenario> {
    if !(margin > 0.0 && margin <= 0.5) {
        return Err(invalid("margin", format!("need 0 < h <= 1/2, got {margin}")));
    }
    if atoms == 0 {
        return Err(invalid("atoms", "need at least one atom"));
    }
    let mut stream = rng::stream(seed, "classification", 0);
    let weights: Vec<f64> = (0..atoms).map(|_| stream.random_range(0.5..1.5)).collect();
    let marginal = DiscreteMeasure::from_weights(&weights)?;
    let eta: Vec<f64> = (0..atoms)
        .map(|_| {
            let gap = margin + (0.5 - margin) * stream.random::<f64>();
            if stream.random::<bool>() {
                0.5 + gap
            } else {
                0.5 - gap
            }
        })
        .collect();
    let mut pairs = Vec::with_capacity(2 * atoms);
    for x in 0..atoms {
        let px = marginal.probs()[x];
        for (y, p) in [(1.0, px * eta[x]), (0.0, px * (1.0 - eta[x]))] {
            if p > 0.0 {
                pairs.push(JointAtom { x, y, p });
            }
        }
    }
    // renormalize away rounding in the products
    let total: f64 = pairs.iter().map(|a| a.p).sum();
    pairs.iter_mut().for_each(|a| a.p /= total);
    let joint = JointDistribution::new(atoms, pairs)?;
    let bayes_row: Vec<f64> = eta.iter().map(|&e| if e > 0.5 { 1.0 } else { 0.0 }).collect();
    let (rows, bayes, label) = match count {
        None => {
            let rows: Vec<Vec<f64>> = (0..1usize << atoms)
                .map(|b| (0..atoms).map(|x| (b >> x & 1) as f64).collect())
                .collect();
            let bayes = (0..atoms).filter(|&x| eta[x] > 0.5).map(|x| 1usize << x).sum();
            (rows, bayes, "labelings")
        }
        Some(count) => {
            let mut draws = rng::stream(seed, "classification-predictors", 0);
            let mut rows = vec![bayes_row];
            rows.extend((1..count).map(|_| (0..atoms).map(|_| if draws.random::<bool>() { 1.0 } else { 0.0 }).collect()));
            (rows, 0, "sampled-labelings")
        }
    };
    Ok(ClassificationScenario {
        predictors: FunctionClass::from_rows(label, rows)?,
        loss: LossSpec::discrete(&[0.0, 1.0]),
        joint,
        marginal,
        eta,
        bayes,
    })
}
