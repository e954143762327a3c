//! Constructions on the real line: Lebesgue-preserving flattening maps,
//! splitting of measure families, ε-approximate Monge maps, and the monotone
//! structure of optimal mixing plans.

mod density;
mod extract;
mod lyapunov;
mod map;
mod mixing;
mod monge;
mod pushforward;
mod split;

pub use density::PiecewiseConstantDensity;
pub use extract::{extract_monge_map, ConstancyReport, Extraction, MongeAssignment, RegionSplit};
pub use lyapunov::{flatten, lyapunov_transform};
pub use map::{AffinePiece, PiecewiseMap};
pub use mixing::{monotone_mixing_1d, GreedyOutcome, MixingResult};
pub use monge::{monge_approx, MongeCell, MongeOptions, MongePartition, MongeResult};
pub use pushforward::{
    pushforward_cdf, pushforward_cdf_on, pushforward_density, CdfTable, DEFAULT_RESOLUTION,
    MIN_RESOLUTION,
};
pub use split::{lyapunov_split, partition, IntervalSet, StepFunction};
