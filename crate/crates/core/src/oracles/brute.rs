use serde::Serialize;
use sot_lp::{solve, LpStatus};

use crate::error::{Result, SotError};
use crate::fixed::{assemble, squared_costs};
use crate::free::{enumerate_minimal_subsets, simplex_embed, solve_free, EnumerationLimits};
use crate::measure::{max_dist, DiscreteMeasure, MeasureFamily, Point, TransportPlan};
use crate::tolerances::{clean_primal, Tolerances};

/// Largest dense tableau, in entries, the grid oracle will build.
pub const MAX_TABLEAU: usize = 20_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteResult {
    pub cost: f64,
    /// Grid points receiving positive mass.
    pub target: DiscreteMeasure,
    /// Restricted to the columns of `target`.
    pub plan: TransportPlan,
}

/// Free-marginal program with the target support fixed to `grid` and the
/// target weights left free.
pub fn brute_force_free_target(family: &MeasureFamily, grid: &[Point], tol: &Tolerances) -> Result<BruteResult> {
    let (m, l) = (family.m(), grid.len());
    if l == 0 {
        return Err(SotError::InvalidInput("grid is empty".into()));
    }
    if let Some(p) = grid.iter().find(|p| p.len() != family.dim()) {
        return Err(SotError::DimensionMismatch(format!(
            "grid point of dimension {} for support of dimension {}",
            p.len(),
            family.dim()
        )));
    }
    let rows = m + family.n().saturating_sub(1) * l;
    let entries = rows * (m * l + rows);
    if entries > MAX_TABLEAU {
        return Err(SotError::TooLarge(format!(
            "{m} support points × {l} grid points need a tableau of {entries} entries (cap {MAX_TABLEAU})"
        )));
    }
    let cost = squared_costs(family.support(), grid);
    let lp = assemble(family.mean_weights(), family.ratios(), None, l, &cost)?;
    let sol = solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(SotError::InternalInfeasible);
    }
    let column_mass: Vec<f64> = (0..l).map(|j| (0..m).map(|k| clean_primal(sol.primal[k * l + j])).sum()).collect();
    let kept: Vec<usize> = (0..l).filter(|&j| column_mass[j] > tol.mass).collect();
    let matrix: Vec<f64> = (0..m)
        .flat_map(|k| kept.iter().map(move |&j| (k, j)))
        .map(|(k, j)| clean_primal(sol.primal[k * l + j]))
        .collect();
    let points: Vec<Point> = kept.iter().map(|&j| grid[j].clone()).collect();
    let plan = TransportPlan::from_flat(family.support().to_vec(), points.clone(), matrix).with_cost(sol.objective);
    let target = DiscreteMeasure::from_parts(points, plan.column_sums());
    Ok(BruteResult {
        cost: sol.objective,
        target,
        plan,
    })
}

/// `per_axis` points per coordinate spanning the support's bounding box.
pub fn uniform_grid(family: &MeasureFamily, per_axis: usize) -> Vec<Point> {
    let d = family.dim();
    let support = family.support();
    let lo: Vec<f64> = (0..d).map(|i| support.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..d).map(|i| support.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let axis = |i: usize, s: usize| {
        if per_axis <= 1 {
            0.5 * (lo[i] + hi[i])
        } else {
            lo[i] + (hi[i] - lo[i]) * s as f64 / (per_axis - 1) as f64
        }
    };
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|i| {
                    let s = idx % per_axis;
                    idx /= per_axis;
                    axis(i, s)
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub free_cost: f64,
    pub brute_cost: f64,
    /// `brute_cost − free_cost`.
    pub gap: f64,
    pub grid_size: usize,
    /// Whether the grid contains every candidate barycenter.
    pub seeded: bool,
    pub agrees: bool,
}

/// Cross-checks [`solve_free`] against the grid oracle on a uniform grid,
/// optionally seeded with every candidate barycenter.
pub fn audit_free(
    family: &MeasureFamily,
    limits: &EnumerationLimits,
    per_axis: usize,
    seed_barycenters: bool,
    tol: &Tolerances,
) -> Result<AuditReport> {
    let free = solve_free(family, limits, tol)?;
    let mut grid = uniform_grid(family, per_axis);
    if seed_barycenters {
        let embedding = simplex_embed(family, tol)?;
        for cand in enumerate_minimal_subsets(&embedding, limits, tol)? {
            if !grid.iter().any(|p| max_dist(p, &cand.barycenter) <= tol.geom) {
                grid.push(cand.barycenter);
            }
        }
    }
    let brute = brute_force_free_target(family, &grid, tol)?;
    let gap = brute.cost - free.cost;
    let agrees = if seed_barycenters {
        gap.abs() <= 2.0 * tol.gap
    } else {
        gap >= -tol.cmp
    };
    Ok(AuditReport {
        free_cost: free.cost,
        brute_cost: brute.cost,
        gap,
        grid_size: grid.len(),
        seeded: seed_barycenters,
        agrees,
    })
}
