//! ε-approximate Monge maps for simultaneous transport on the line.
//!
//! A discrete plan between source cells `A_k` and target cells `B_j` is
//! turned into a map: every support block is refined until the squared cost
//! oscillates by at most ε on each pair of subcells `A' × B'`, each
//! constant piece of `A'` is cut into consecutive parts whose relative lengths
//! are the conditional masses of the `B'`, and all parts sent to one `B'` are
//! concatenated, flattened for every source density in turn, and pushed onto
//! `ν|B'` by its quantile function.

use log::debug;
use rayon::prelude::*;
use serde::Serialize;

use super::density::{merge_breakpoints, PiecewiseConstantDensity};
use super::lyapunov::flatten;
use super::map::{AffinePiece, PiecewiseMap};
use super::pushforward::{pushforward_cdf_on, pushforward_density, DEFAULT_RESOLUTION};
use super::split::{partition, IntervalSet};
use crate::error::{Result, SotError};
use crate::fixed::{solve_fixed, SotInstance};
use crate::measure::{build_family, CostSpec, DiscreteMeasure, TransportPlan};
use crate::tolerances::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MongeOptions {
    pub epsilon: f64,
    /// Uniform cells per side of the discretization (before merging with
    /// density breakpoints).
    pub grid: usize,
    /// Largest number of map pieces before giving up.
    pub max_pieces: usize,
    /// CDF samples for the pushforward check.
    pub resolution: usize,
}

impl Default for MongeOptions {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            grid: 32,
            max_pieces: 2_000_000,
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

/// Source region sent onto one target subcell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MongeCell {
    pub target: (f64, f64),
    pub source: IntervalSet,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MongePartition {
    pub cells: Vec<MongeCell>,
    pub epsilon: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MongeResult {
    pub map: PiecewiseMap,
    pub partition: MongePartition,
    /// Discrete plan between source and target cells (midpoints as support).
    pub plan: TransportPlan,
    pub source_edges: Vec<f64>,
    pub target_edges: Vec<f64>,
    /// `Σ π_kj dist(A_k, B_j)²`, a lower bound for every map.
    pub plan_cost: f64,
    /// `Σ π_kj E(X − Y)²` with `X ~ μ|A_k`, `Y ~ ν|B_j` independent.
    pub block_cost: f64,
    /// `block_cost − plan_cost`.
    pub slack: f64,
    /// `(1/n) Σ_i ∫ (x − T(x))² dμ_i`.
    pub map_cost: f64,
    pub epsilon: f64,
    /// Largest cost oscillation over the subcell pairs used.
    pub max_oscillation: f64,
    /// Kolmogorov distance between `μ_i ∘ T⁻¹` and `ν`, per source.
    pub pushforward_errors: Vec<f64>,
}

impl MongeResult {
    /// `0 ≤ map_cost − plan_cost ≤ ε + slack` up to `tol`.
    pub fn within_bound(&self, tol: f64) -> bool {
        let gap = self.map_cost - self.plan_cost;
        gap >= -tol && gap <= self.epsilon + self.slack + tol
    }
}

fn uniform_edges(lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    let mut edges: Vec<f64> = (0..=cells)
        .map(|i| lo + (hi - lo) * i as f64 / cells as f64)
        .collect();
    edges[cells] = hi;
    edges
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let gap = (b.0 - a.1).max(a.0 - b.1).max(0.0);
    gap * gap
}

/// Oscillation of `d²` over `d ∈ [d0, d1]`.
fn oscillation(d0: f64, d1: f64) -> f64 {
    let hi = (d0 * d0).max(d1 * d1);
    let lo = if d0 <= 0.0 && d1 >= 0.0 {
        0.0
    } else {
        (d0 * d0).min(d1 * d1)
    };
    hi - lo
}

/// Worst oscillation of `(x − y)²` over subcell pairs of widths `(wa, wb)`.
fn worst_oscillation(a: (f64, f64), b: (f64, f64), wa: f64, wb: f64) -> f64 {
    let (d0, d1) = (a.0 - b.1, a.1 - b.0);
    let w = (wa + wb).min(d1 - d0);
    oscillation(d1 - w, d1).max(oscillation(d0, d0 + w))
}

/// Normalized first and second moments of `ρ|[a, b]`, or `None` without mass.
fn cell_moments(rho: &PiecewiseConstantDensity, a: f64, b: f64) -> Option<(f64, f64)> {
    let mass = rho.mass_on(a, b);
    if mass <= 0.0 {
        return None;
    }
    let (m1, m2) = rho.moments_on(a, b);
    Some((m1 / mass, m2 / mass))
}

fn mean_density(family: &[PiecewiseConstantDensity]) -> Result<PiecewiseConstantDensity> {
    let refs: Vec<&PiecewiseConstantDensity> = family.iter().collect();
    let (bp, values) = PiecewiseConstantDensity::common_refinement(&refs);
    let n = family.len() as f64;
    let mean = (0..bp.len() - 1)
        .map(|c| values.iter().map(|v| v[c]).sum::<f64>() / n)
        .collect();
    PiecewiseConstantDensity::new(bp, mean)
}

/// Quantile map from uniform mass on `[0, len]` onto `ν|[v0, v1]`.
fn quantile_map(nu: &PiecewiseConstantDensity, (v0, v1): (f64, f64), len: f64) -> PiecewiseMap {
    let total = nu.mass_on(v0, v1);
    let mut pieces = Vec::new();
    let mut acc = 0.0;
    for (a, b, v) in nu.cells() {
        let (l, r) = (a.max(v0), b.min(v1));
        if r <= l || v <= 0.0 {
            continue;
        }
        let m = v * (r - l);
        let z0 = len * acc / total;
        acc += m;
        let z1 = len * acc / total;
        pieces.push(AffinePiece::onto(z0, z1, l, r));
    }
    if let Some(last) = pieces.last_mut() {
        // absorb rounding at the right end
        let (a, b) = (last.eval(last.lo), last.eval(last.hi));
        *last = AffinePiece::onto(last.lo, len, a, b);
    }
    PiecewiseMap::new(pieces)
}

struct Part {
    x0: f64,
    x1: f64,
    /// Density of each source on the part.
    values: Vec<f64>,
}

/// Map from the parts sent to one target subcell onto that subcell.
fn cell_map(
    parts: &[Part],
    nu: &PiecewiseConstantDensity,
    target: (f64, f64),
    n: usize,
) -> Result<Vec<AffinePiece>> {
    let mut bp = vec![0.0];
    let mut kept = Vec::with_capacity(parts.len());
    for p in parts {
        let last = *bp.last().unwrap();
        let next = last + (p.x1 - p.x0);
        if next > last {
            bp.push(next);
            kept.push(p);
        }
    }
    let parts = kept;
    let len = *bp.last().unwrap();
    if len <= 0.0 {
        return Ok(Vec::new());
    }
    let mut flat = PiecewiseMap::identity(0.0, len);
    for i in 0..n {
        let rho = PiecewiseConstantDensity::new(bp.clone(), parts.iter().map(|p| p.values[i]).collect())?;
        let current = if i == 0 { rho } else { pushforward_density(&flat, &rho)?.on_domain(0.0, len)? };
        let (lo_v, hi_v) = current
            .values()
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        if hi_v <= 0.0 || hi_v - lo_v <= 1e-12 * hi_v {
            continue;
        }
        flat = flatten(&current)?.compose(&flat);
    }
    let cell = quantile_map(nu, target, len).compose(&flat);
    let mut out = Vec::new();
    for (p, z0) in parts.iter().zip(&bp) {
        out.extend(cell.shifted_restriction(p.x0, p.x1, p.x0 - z0));
    }
    Ok(out)
}

fn check_probability(d: &PiecewiseConstantDensity, index: usize, tol: &Tolerances) -> Result<()> {
    let mass = d.mass();
    if (mass - 1.0).abs() > tol.mass {
        return Err(SotError::NonProbability {
            index,
            reason: format!("density has total mass {mass}"),
        });
    }
    Ok(())
}

/// ε-approximate Monge map pushing every source density onto `target`.
///
/// Without `plan`, source cells are the uniform grid merged with the source
/// breakpoints, target cells likewise, and an optimal discrete plan for the
/// cost `dist(A_k, B_j)²` is computed. A supplied plan is read on uniform
/// cells: row `k` is the `k`-th of `plan.rows()` equal source cells and
/// column `j` the `j`-th of `plan.cols()` equal target cells.
pub fn monge_approx(
    family: &[PiecewiseConstantDensity],
    target: &PiecewiseConstantDensity,
    plan: Option<&TransportPlan>,
    options: &MongeOptions,
    tol: &Tolerances,
) -> Result<MongeResult> {
    if family.is_empty() {
        return Err(SotError::InvalidInput("no source densities given".into()));
    }
    if !(options.epsilon > 0.0) {
        return Err(SotError::InvalidInput("epsilon must be positive".into()));
    }
    for (i, d) in family.iter().enumerate() {
        check_probability(d, i, tol)?;
    }
    check_probability(target, 0, tol)?;
    let n = family.len();
    let src_domain = family.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), d| {
        (a.min(d.domain().0), b.max(d.domain().1))
    });
    let tgt_domain = target.domain();
    let src_sets: Vec<&[f64]> = family.iter().map(|d| d.breakpoints()).collect();
    let src_breaks = merge_breakpoints(&src_sets, src_domain);
    let mu = mean_density(family)?;

    let (source_edges, target_edges, matrix) = match plan {
        Some(p) => {
            let se = uniform_edges(src_domain.0, src_domain.1, p.rows());
            let te = uniform_edges(tgt_domain.0, tgt_domain.1, p.cols());
            (se, te, p.matrix_rows())
        }
        None => {
            if options.grid == 0 {
                return Err(SotError::InvalidInput("grid must be positive".into()));
            }
            let se = merge_breakpoints(
                &[&uniform_edges(src_domain.0, src_domain.1, options.grid), &src_breaks],
                src_domain,
            );
            let te = merge_breakpoints(
                &[&uniform_edges(tgt_domain.0, tgt_domain.1, options.grid), target.breakpoints()],
                tgt_domain,
            );
            let matrix = solve_cells(family, target, &se, &te, tol)?;
            (se, te, matrix)
        }
    };
    let na = source_edges.len() - 1;
    let nb = target_edges.len() - 1;
    let a_cell = |k: usize| (source_edges[k], source_edges[k + 1]);
    let b_cell = |j: usize| (target_edges[j], target_edges[j + 1]);
    let mu_mass: Vec<f64> = (0..na).map(|k| mu.mass_on(a_cell(k).0, a_cell(k).1)).collect();
    let nu_mass: Vec<f64> = (0..nb).map(|j| target.mass_on(b_cell(j).0, b_cell(j).1)).collect();

    let mut plan_cost = 0.0;
    let mut block_cost = 0.0;
    let mut support = Vec::new();
    for k in 0..na {
        for j in 0..nb {
            let p = matrix[k][j];
            if p <= 0.0 {
                continue;
            }
            let (Some((x1, x2)), Some((y1, y2))) = (
                cell_moments(&mu, a_cell(k).0, a_cell(k).1),
                cell_moments(target, b_cell(j).0, b_cell(j).1),
            ) else {
                return Err(SotError::InvalidInput(format!(
                    "plan moves mass between cells {k} and {j}, one of which is empty"
                )));
            };
            plan_cost += p * dist2(a_cell(k), b_cell(j));
            block_cost += p * (x2 - 2.0 * x1 * y1 + y2);
            support.push((k, j));
        }
    }
    let slack = (block_cost - plan_cost).max(0.0);
    check_plan_cells(family, target, &matrix, &source_edges, &target_edges, tol)?;

    // subdivision counts
    let eps = options.epsilon;
    let mut pa = vec![1usize; na];
    let mut pb = vec![1usize; nb];
    const MAX_SUBDIVISION: usize = 1 << 20;
    let mut max_osc: f64 = 0.0;
    for &(k, j) in &support {
        loop {
            let (a, b) = (a_cell(k), b_cell(j));
            let (wa, wb) = ((a.1 - a.0) / pa[k] as f64, (b.1 - b.0) / pb[j] as f64);
            let osc = worst_oscillation(a, b, wa, wb);
            if osc <= eps {
                break;
            }
            let side = if wa >= wb { &mut pa[k] } else { &mut pb[j] };
            if *side >= MAX_SUBDIVISION {
                return Err(SotError::ResolutionTooCoarse {
                    oscillation: osc,
                    epsilon: eps,
                });
            }
            *side *= 2;
        }
    }
    let estimate: usize = support.iter().map(|&(k, j)| pa[k] * pb[j]).sum();
    if estimate > options.max_pieces {
        return Err(SotError::ResolutionTooCoarse {
            oscillation: eps * estimate as f64 / options.max_pieces as f64,
            epsilon: eps,
        });
    }
    for &(k, j) in &support {
        let (a, b) = (a_cell(k), b_cell(j));
        let (wa, wb) = ((a.1 - a.0) / pa[k] as f64, (b.1 - b.0) / pb[j] as f64);
        max_osc = max_osc.max(worst_oscillation(a, b, wa, wb));
    }

    // target subcells, globally indexed
    let mut sub_offset = vec![0usize; nb + 1];
    for j in 0..nb {
        sub_offset[j + 1] = sub_offset[j] + pb[j];
    }
    let sub_cell = |j: usize, t: usize| -> (f64, f64) {
        let (b0, b1) = b_cell(j);
        let w = (b1 - b0) / pb[j] as f64;
        let hi = if t + 1 == pb[j] { b1 } else { b0 + w * (t + 1) as f64 };
        (b0 + w * t as f64, hi)
    };
    let mut buckets: Vec<Vec<Part>> = (0..sub_offset[nb]).map(|_| Vec::new()).collect();
    for k in 0..na {
        let row: Vec<usize> = (0..nb).filter(|&j| matrix[k][j] > 0.0).collect();
        if row.is_empty() {
            continue;
        }
        let mut dest = Vec::new();
        let mut fractions = Vec::new();
        for &j in &row {
            for t in 0..pb[j] {
                let sc = sub_cell(j, t);
                let share = target.mass_on(sc.0, sc.1) / nu_mass[j];
                dest.push(sub_offset[j] + t);
                fractions.push(matrix[k][j] / mu_mass[k] * share);
            }
        }
        let (a0, a1) = a_cell(k);
        let w = (a1 - a0) / pa[k] as f64;
        for s in 0..pa[k] {
            let u0 = a0 + w * s as f64;
            let u1 = if s + 1 == pa[k] { a1 } else { a0 + w * (s + 1) as f64 };
            let pieces = merge_breakpoints(&[&src_breaks], (u0, u1));
            for win in pieces.windows(2) {
                let mid = 0.5 * (win[0] + win[1]);
                let values: Vec<f64> = family.iter().map(|d| d.value_at(mid)).collect();
                for ((x0, x1), &b) in partition(win[0], win[1], &fractions).into_iter().zip(&dest) {
                    if x1 > x0 {
                        buckets[b].push(Part {
                            x0,
                            x1,
                            values: values.clone(),
                        });
                    }
                }
            }
        }
    }
    let sub_cells: Vec<(f64, f64)> = (0..nb).flat_map(|j| (0..pb[j]).map(move |t| (j, t))).map(|(j, t)| sub_cell(j, t)).collect();
    let pieces: Vec<Vec<AffinePiece>> = buckets
        .par_iter()
        .zip(&sub_cells)
        .map(|(parts, &cell)| cell_map(parts, target, cell, n))
        .collect::<Result<_>>()?;
    let cells: Vec<MongeCell> = buckets
        .iter()
        .zip(&sub_cells)
        .filter(|(parts, _)| !parts.is_empty())
        .map(|(parts, &cell)| MongeCell {
            target: cell,
            source: IntervalSet::new(parts.iter().map(|p| (p.x0, p.x1)).collect()),
        })
        .collect();
    let mut all: Vec<AffinePiece> = pieces.into_iter().flatten().collect();
    debug!("monge map with {} pieces over {} target subcells", all.len(), sub_cells.len());
    fill_gaps(&mut all, src_domain, tgt_domain.0);
    let map = PiecewiseMap::new(all);

    let map_cost = family.iter().map(|d| map.squared_displacement(d)).sum::<f64>() / n as f64;
    let pushforward_errors = family
        .par_iter()
        .map(|d| {
            let table = pushforward_cdf_on(&map, d, tgt_domain, options.resolution)?;
            Ok(table.kolmogorov_distance(|t| target.cdf(t)))
        })
        .collect::<Result<Vec<_>>>()?;

    let midpoints = |edges: &[f64]| -> Vec<Vec<f64>> {
        edges.windows(2).map(|w| vec![0.5 * (w[0] + w[1])]).collect()
    };
    let plan = TransportPlan::new(midpoints(&source_edges), midpoints(&target_edges), matrix)?
        .with_cost(plan_cost);
    Ok(MongeResult {
        map,
        partition: MongePartition { cells, epsilon: eps },
        plan,
        source_edges,
        target_edges,
        plan_cost,
        block_cost,
        slack,
        map_cost,
        epsilon: eps,
        max_oscillation: max_osc,
        pushforward_errors,
    })
}

/// Constant pieces on the parts of the domain no part covers (null sets up
/// to rounding).
fn fill_gaps(pieces: &mut Vec<AffinePiece>, (lo, hi): (f64, f64), value: f64) {
    pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut gaps = Vec::new();
    let mut pos = lo;
    for p in pieces.iter() {
        if p.lo > pos {
            gaps.push((pos, p.lo));
        }
        pos = pos.max(p.hi);
    }
    if pos < hi {
        gaps.push((pos, hi));
    }
    pieces.extend(gaps.into_iter().map(|(a, b)| AffinePiece {
        lo: a,
        hi: b,
        slope: 0.0,
        intercept: value,
    }));
}

/// Optimal cell plan for the infimum cost `dist(A_k, B_j)²`.
fn solve_cells(
    family: &[PiecewiseConstantDensity],
    target: &PiecewiseConstantDensity,
    se: &[f64],
    te: &[f64],
    tol: &Tolerances,
) -> Result<Vec<Vec<f64>>> {
    let na = se.len() - 1;
    let nb = te.len() - 1;
    let points: Vec<Vec<f64>> = se.windows(2).map(|w| vec![0.5 * (w[0] + w[1])]).collect();
    let weights: Vec<Vec<f64>> = family
        .iter()
        .map(|d| se.windows(2).map(|w| d.mass_on(w[0], w[1])).collect())
        .collect();
    let fam = build_family(points, weights, tol)?;
    let tpoints: Vec<Vec<f64>> = te.windows(2).map(|w| vec![0.5 * (w[0] + w[1])]).collect();
    let tweights: Vec<f64> = te.windows(2).map(|w| target.mass_on(w[0], w[1])).collect();
    let nu = DiscreteMeasure::new(tpoints, tweights, tol)?;
    let cost = fam
        .original_index()
        .iter()
        .map(|&k| (0..nb).map(|j| dist2((se[k], se[k + 1]), (te[j], te[j + 1]))).collect())
        .collect();
    let retained = fam.original_index().to_vec();
    let instance = SotInstance::new(fam, nu, CostSpec::Matrix(cost), tol)?;
    let sol = solve_fixed(&instance, tol)?;
    let mut matrix = vec![vec![0.0; nb]; na];
    for (row, &k) in retained.iter().enumerate() {
        for j in 0..nb {
            let v = sol.plan.get(row, j);
            matrix[k][j] = if v > 0.0 { v } else { 0.0 };
        }
    }
    Ok(matrix)
}

/// Marginal and mixing residuals of a cell plan, rejecting plans that cannot
/// push the sources onto the target.
fn check_plan_cells(
    family: &[PiecewiseConstantDensity],
    target: &PiecewiseConstantDensity,
    matrix: &[Vec<f64>],
    se: &[f64],
    te: &[f64],
    tol: &Tolerances,
) -> Result<()> {
    let limit = tol.push;
    let n = family.len() as f64;
    let masses: Vec<Vec<f64>> = family
        .iter()
        .map(|d| se.windows(2).map(|w| d.mass_on(w[0], w[1])).collect())
        .collect();
    let mean: Vec<f64> = (0..se.len() - 1)
        .map(|k| masses.iter().map(|m| m[k]).sum::<f64>() / n)
        .collect();
    for (k, row) in matrix.iter().enumerate() {
        let total: f64 = row.iter().sum();
        if (total - mean[k]).abs() > limit {
            return Err(SotError::InvalidInput(format!(
                "plan row {k} carries {total}, source cell holds {}",
                mean[k]
            )));
        }
    }
    for j in 0..te.len() - 1 {
        let nu_j = target.mass_on(te[j], te[j + 1]);
        for m in &masses {
            let delivered: f64 = (0..mean.len())
                .filter(|&k| mean[k] > 0.0)
                .map(|k| matrix[k][j] * m[k] / mean[k])
                .sum();
            if (delivered - nu_j).abs() > limit {
                return Err(SotError::InvalidInput(format!(
                    "plan delivers {delivered} of a source to target cell {j} holding {nu_j}"
                )));
            }
        }
    }
    Ok(())
}
