//! Samples, empirical means and minimizers, Rademacher averages and suprema
//! of the empirical process.

mod deviation;
mod minimize;
mod rademacher;
mod sample;
pub(crate) mod scored;

pub use deviation::{sup_deviation, Deviation};
pub use minimize::{minimize_empirical, MinimizeMode, MinimizerResult};
pub use rademacher::{rademacher_average, RademacherDraw, RademacherMode, EXACT_RADEMACHER_MAX_N};
pub use sample::{draw_sample, empirical_mean, Sample, SampleRecord};
