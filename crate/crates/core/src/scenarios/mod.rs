//! Ready-made problem instances.

mod classification;
mod gap;

pub use classification::{
    classification_scenario, sampled_classification_scenario, ClassificationScenario, MAX_CLASSIFICATION_ATOMS,
};
pub use gap::{
    build_gap_class, gap_experiment, GapClassSpec, GapExperimentConfig, GapOracle, GapReplicate, GapReport,
    QuantileSummary,
};
