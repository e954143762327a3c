use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sot_lp::{solve, LinearProgram, LpStatus};

use crate::error::{Result, SotError};
use crate::measure::{CostSpec, MeasureFamily, TransportPlan};
use crate::tolerances::Tolerances;

pub const MAX_SUPPORT_SIZE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplerOptions {
    pub samples: usize,
    pub support_size: usize,
    pub seed: u64,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            samples: 64,
            support_size: 4,
            seed: 0,
        }
    }
}

/// Outcome of testing one finite piece `α` of a plan against its competitors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompetitorReport {
    pub sample: usize,
    /// `(source, target, mass)` of `α`, normalized to total mass 1.
    pub alpha: Vec<(usize, usize, f64)>,
    pub alpha_cost: f64,
    pub best_cost: f64,
    pub pass: bool,
    /// Cheapest competitor when the test fails.
    pub witness: Option<Vec<(usize, usize, f64)>>,
}

/// Cheapest `α′ ≥ 0` on the rows × columns of `α` such that `r_i·α′` and
/// `r_i·α` have the same marginals for every `i`.
fn best_competitor(
    alpha: &[(usize, usize, f64)],
    family: &MeasureFamily,
    cost: &[f64],
    cols: usize,
) -> Result<(f64, Vec<(usize, usize, f64)>)> {
    let mut rows_idx: Vec<usize> = alpha.iter().map(|e| e.0).collect();
    rows_idx.sort_unstable();
    rows_idx.dedup();
    let mut cols_idx: Vec<usize> = alpha.iter().map(|e| e.1).collect();
    cols_idx.sort_unstable();
    cols_idx.dedup();
    let (p, q) = (rows_idx.len(), cols_idx.len());
    let var = |a: usize, b: usize| a * q + b;
    let objective: Vec<f64> = rows_idx
        .iter()
        .flat_map(|&k| cols_idx.iter().map(move |&j| cost[k * cols + j]))
        .collect();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs = Vec::new();
    for (a, &k) in rows_idx.iter().enumerate() {
        rows.push((0..q).map(|b| (var(a, b), 1.0)).collect());
        rhs.push(alpha.iter().filter(|e| e.0 == k).map(|e| e.2).sum());
    }
    for ratio in family.ratios() {
        for (b, &j) in cols_idx.iter().enumerate() {
            rows.push(
                rows_idx
                    .iter()
                    .enumerate()
                    .map(|(a, &k)| (var(a, b), ratio[k]))
                    .collect(),
            );
            rhs.push(alpha.iter().filter(|e| e.1 == j).map(|e| ratio[e.0] * e.2).sum());
        }
    }
    let lp = LinearProgram::from_sparse_rows(objective, rows, rhs)?;
    let sol = solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(SotError::InternalInfeasible);
    }
    let witness = (0..p)
        .flat_map(|a| (0..q).map(move |b| (a, b)))
        .filter_map(|(a, b)| {
            let v = sol.primal[var(a, b)];
            (v > 0.0).then(|| (rows_idx[a], cols_idx[b], v))
        })
        .collect();
    Ok((sol.objective, witness))
}

/// Samples finite pieces of the plan's support and checks that none has a
/// cheaper competitor. Samples are independent and seeded by index.
pub fn check_c_monotone(
    plan: &TransportPlan,
    family: &MeasureFamily,
    cost: &CostSpec,
    options: &SamplerOptions,
    tol: &Tolerances,
) -> Result<Vec<CompetitorReport>> {
    if options.support_size == 0 || options.support_size > MAX_SUPPORT_SIZE {
        return Err(SotError::InvalidInput(format!(
            "support size must lie in 1..={MAX_SUPPORT_SIZE}"
        )));
    }
    if plan.rows() != family.m() {
        return Err(SotError::DimensionMismatch(format!(
            "plan has {} rows, family support has {} points",
            plan.rows(),
            family.m()
        )));
    }
    let entries = plan.support_entries(tol.feas);
    if entries.is_empty() {
        return Err(SotError::EmptySupport);
    }
    let costs = cost.matrix(plan.source(), plan.target())?;
    let size = options.support_size.min(entries.len());
    (0..options.samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(s as u64);
            let mut picked: Vec<usize> = sample(&mut rng, entries.len(), size).into_vec();
            picked.sort_unstable();
            let total: f64 = picked.iter().map(|&e| entries[e].2).sum();
            let alpha: Vec<(usize, usize, f64)> = picked
                .iter()
                .map(|&e| (entries[e].0, entries[e].1, entries[e].2 / total))
                .collect();
            let alpha_cost = alpha.iter().map(|(k, j, v)| v * costs[k * plan.cols() + j]).sum();
            let (best_cost, witness) = best_competitor(&alpha, family, &costs, plan.cols())?;
            let pass = alpha_cost <= best_cost + tol.cmp;
            Ok(CompetitorReport {
                sample: s,
                alpha,
                alpha_cost,
                best_cost,
                pass,
                witness: (!pass).then_some(witness),
            })
        })
        .collect()
}
