//! Equality-form linear programming for the transport solvers.
//!
//! Programs are `min cᵀx  s.t.  Ax = b,  x ≥ 0` stored densely. Two entry
//! points share one tableau implementation:
//!
//! * [`solve`]: floating point, Dantzig pricing with a Bland fallback on
//!   degenerate runs, final basis refactorized from the original data so the
//!   returned primal/dual pair is accurate to roughly machine precision.
//! * [`solve_exact`]: arbitrary-precision rationals with Bland's rule.
//!
//! [`vertex_enumerate`] lists every basic feasible point of a tiny program and
//! serves as a brute-force oracle for the other two.

mod dense;
mod problem;
mod scalar;
mod simplex;
mod vertex;

pub use problem::{Certificate, LinearProgram, LpSolution, LpStatus};
pub use scalar::{parse_decimal, Rational, Scalar};
pub use simplex::{solve, solve_exact, solve_with, PivotRule, SolverOptions};
pub use vertex::{vertex_enumerate, MAX_VERTEX_COLS, MAX_VERTEX_ROWS};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program has no rows or no columns")]
    Empty,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite coefficient in linear program")]
    NonFinite,
    #[error("numerical breakdown: pivot magnitude {pivot:e}; retry in exact mode")]
    NumericalBreakdown { pivot: f64 },
    #[error("iteration limit of {0} pivots reached")]
    IterationLimit(usize),
    #[error("program too large for vertex enumeration ({rows} rows, {cols} columns)")]
    TooLarge { rows: usize, cols: usize },
}
