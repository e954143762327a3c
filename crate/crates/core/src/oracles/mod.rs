//! Independent checks of transport plans: competitor programs, cyclic
//! monotonicity, convex potentials, and a grid-search ground truth for the
//! free-target problem.

mod brute;
mod competitor;
mod cyclic;
mod potential;

pub use brute::{audit_free, brute_force_free_target, uniform_grid, AuditReport, BruteResult, MAX_TABLEAU};
pub use competitor::{check_c_monotone, CompetitorReport, SamplerOptions, MAX_SUPPORT_SIZE};
pub use cyclic::{check_cyclic_monotonicity, CycleViolation, CyclicReport, MAX_CYCLE};
pub use potential::{recover_potential, region_pairs, PotentialOutcome};
