//! Simultaneous optimal transport: several source measures moved by one
//! shared plan, to a fixed target or to an optimally chosen one.
//!
//! * [`measure`] holds measure families, plans, and feasibility checks.
//! * [`fixed`] solves the fixed-target program and extracts dual potentials.
//! * [`free`] solves the free-target (optimal mixing) problem.
//! * [`line1d`] builds measure-preserving maps and approximate Monge maps on the line.
//! * [`oracles`] provides brute-force and certificate-based verification.

pub mod error;
pub mod fixed;
pub mod free;
pub mod line1d;
pub mod measure;
pub mod oracles;
pub mod tolerances;

pub use error::{Result, SotError};
pub use tolerances::Tolerances;
