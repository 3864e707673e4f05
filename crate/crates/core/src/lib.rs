//! Numerical laboratory for empirical risk minimization over finite
//! probability spaces.
//!
//! The crate estimates localized complexities `ξ_n(r)` and their data-dependent
//! counterparts, computes the resulting fixed-point bounds, audits penalized
//! model selection over nested classes, and constructs a star-shaped class in
//! which the fixed point is a constant while the empirical minimizer has
//! expectation of order `1/n`.

pub mod bernstein;
pub mod class;
pub mod complexity;
pub mod empirical;
pub mod error;
pub mod io;
pub mod loss;
pub mod measure;
pub mod numeric;
pub mod rng;
pub mod scenarios;
pub mod selection;
pub mod theorems;

pub use bernstein::{bernstein_certificate, BernsteinCert};
pub use class::{
    empirical_slab, level_set, star_hull, star_hull_of_oracle, sublevel_class, Class, ClassOracle,
    FunctionClass, HullBase, LevelOptions, OracleMember, ScaledRange, StarHull, SubClass,
};
pub use complexity::{
    default_grid, empirical_xi_curve, epsilon_brackets, epsilon_threshold, fixed_point, xi_curve,
    BracketPair, ComplexityCurve, CurveKind, EmpiricalCurve, EpsilonThreshold, FixedPointResult,
    FixedPointStatus, LevelCurve, XiOptions,
};
pub use empirical::{
    draw_sample, empirical_mean, minimize_empirical, rademacher_average, sup_deviation, Deviation,
    MinimizeMode, MinimizerResult, RademacherDraw, RademacherMode, Sample, SampleRecord,
};
pub use error::{Error, Result};
pub use loss::{excess_loss_class, loss_class, ExcessLoss, JointAtom, JointDistribution, LossSpec};
pub use measure::{make_measure, DiscreteMeasure, FuncVec};
pub use numeric::{Estimate, GridSpec, Spacing};
