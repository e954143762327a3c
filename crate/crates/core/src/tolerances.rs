use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every solver and oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Total-mass check for probability vectors.
    pub mass: f64,
    /// Marginal and mixing-constraint residuals.
    pub feas: f64,
    /// Coordinate distance under which two points coincide.
    pub geom: f64,
    /// Primal/dual objective gap.
    pub gap: f64,
    /// Convex-hull membership of the simplex center.
    pub hull: f64,
    /// Comparisons between independently computed objective values.
    pub cmp: f64,
    /// Kolmogorov distance for pushforward identities.
    pub push: f64,
    /// Lyapunov splitting residual.
    pub split: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mass: 1e-9,
            feas: 1e-8,
            geom: 1e-12,
            gap: 1e-7,
            hull: 1e-10,
            cmp: 1e-6,
            push: 1e-6,
            split: 1e-7,
        }
    }
}

/// Basic variables below this level are rounding residue of a degenerate
/// pivot and are read as zero.
pub(crate) const PRIMAL_NOISE: f64 = 1e-13;

pub(crate) fn clean_primal(v: f64) -> f64 {
    if v > PRIMAL_NOISE {
        v
    } else {
        0.0
    }
}
