//! Free-target simultaneous transport (optimal mixing).
//!
//! Source points are embedded in the probability simplex by their density
//! ratios. A conditional `π^y` satisfies the mixing constraints exactly when
//! its embedded mean is the simplex center, so optimal targets are built from
//! minimal point sets whose embedded hull contains the center.

use log::debug;
use rayon::prelude::*;
use serde::Serialize;
use sot_lp::{solve, solve_with, LinearProgram, LpStatus, SolverOptions};

use crate::error::{Result, SotError};
use crate::measure::{
    check_plan, max_dist, plan_cost, sq_dist, CostSpec, DiscreteMeasure, FeasibilityReport, MeasureFamily, Point,
    Target, TransportPlan,
};
use crate::tolerances::{clean_primal, Tolerances};

/// Images `ψ(x_k) = (r_1^k, …, r_n^k)/n` of the support in the simplex.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimplexEmbedding {
    pub source: Vec<Point>,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub center: Vec<f64>,
}

pub fn simplex_embed(family: &MeasureFamily, tol: &Tolerances) -> Result<SimplexEmbedding> {
    let n = family.n();
    let points: Vec<Vec<f64>> = (0..family.m())
        .map(|k| {
            family
                .ratio_vector(k)
                .iter()
                .map(|r| r / n as f64)
                .collect()
        })
        .collect();
    let center = vec![1.0 / n as f64; n];
    let mut mean = vec![0.0; n];
    for (p, w) in points.iter().zip(family.mean_weights()) {
        for (acc, v) in mean.iter_mut().zip(p) {
            *acc += w * v;
        }
    }
    let residual = max_dist(&mean, &center);
    if residual > tol.feas {
        return Err(SotError::BarycenterIdentityViolated { residual });
    }
    Ok(SimplexEmbedding {
        source: family.support().to_vec(),
        points,
        weights: family.mean_weights().to_vec(),
        center,
    })
}

/// A minimal set of source points whose embedded hull contains the center.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingCandidate {
    pub indices: Vec<usize>,
    /// Convex weights placing the embedded mean at the center.
    pub weights: Vec<f64>,
    pub barycenter: Point,
    /// `Σ w_k ‖x_k − y‖²` with `y` the barycenter.
    pub local_cost: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnumerationLimits {
    /// Largest subset size; `None` means `n`.
    pub max_size: Option<usize>,
    pub max_points: usize,
    pub max_measures: usize,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        Self {
            max_size: None,
            max_points: 40,
            max_measures: 6,
        }
    }
}

fn combinations(m: usize, size: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(idx.iter().fold(0u64, |acc, &i| acc | (1 << i)));
        let mut i = size;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < m - size + i {
                idx[i] += 1;
                for t in i + 1..size {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn mask_indices(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask & (1 << i) != 0).collect()
}

/// Convex weights hitting the center, if the subset's hull contains it.
fn hull_weights(embedding: &SimplexEmbedding, indices: &[usize], tol: &Tolerances) -> Option<Vec<f64>> {
    let n = embedding.center.len();
    let c = &embedding.center;
    for i in 0..n {
        let (lo, hi) = indices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &k| {
            let v = embedding.points[k][i];
            (lo.min(v), hi.max(v))
        });
        if lo > c[i] + tol.hull || hi < c[i] - tol.hull {
            return None;
        }
    }
    let s = indices.len();
    let weights = if s == 1 {
        vec![1.0]
    } else {
        let mut rows: Vec<Vec<f64>> = (0..n)
            .map(|i| indices.iter().map(|&k| embedding.points[k][i]).collect())
            .collect();
        rows.push(vec![1.0; s]);
        let mut rhs = c.clone();
        rhs.push(1.0);
        let lp = LinearProgram::new(vec![0.0; s], rows, rhs).ok()?;
        let options = SolverOptions {
            feas_tol: tol.hull,
            ..SolverOptions::default()
        };
        let sol = solve_with(&lp, &options).ok()?;
        if sol.status != LpStatus::Optimal {
            return None;
        }
        let mut w: Vec<f64> = sol.primal.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        w
    };
    let mut residual: f64 = 0.0;
    for i in 0..n {
        let v: f64 = indices
            .iter()
            .zip(&weights)
            .map(|(&k, w)| w * embedding.points[k][i])
            .sum();
        residual = residual.max((v - c[i]).abs());
    }
    (residual <= tol.hull).then_some(weights)
}

fn make_candidate(embedding: &SimplexEmbedding, indices: Vec<usize>, weights: Vec<f64>) -> MixingCandidate {
    let dim = embedding.source[0].len();
    let mut barycenter = vec![0.0; dim];
    for (&k, w) in indices.iter().zip(&weights) {
        for (b, x) in barycenter.iter_mut().zip(&embedding.source[k]) {
            *b += w * x;
        }
    }
    let local_cost = indices
        .iter()
        .zip(&weights)
        .map(|(&k, w)| w * sq_dist(&embedding.source[k], &barycenter))
        .sum();
    MixingCandidate {
        indices,
        weights,
        barycenter,
        local_cost,
    }
}

/// All inclusion-minimal subsets of size at most `max_size` (default `n`)
/// whose embedded hull contains the center, ordered by size and then
/// lexicographically by index set.
pub fn enumerate_minimal_subsets(
    embedding: &SimplexEmbedding,
    limits: &EnumerationLimits,
    tol: &Tolerances,
) -> Result<Vec<MixingCandidate>> {
    let m = embedding.points.len();
    let n = embedding.center.len();
    if m > limits.max_points || m > 63 {
        return Err(SotError::EnumerationCapExceeded(format!(
            "{m} support points exceed the cap of {}",
            limits.max_points.min(63)
        )));
    }
    if n > limits.max_measures {
        return Err(SotError::EnumerationCapExceeded(format!(
            "{n} measures exceed the cap of {}",
            limits.max_measures
        )));
    }
    let max_size = limits.max_size.unwrap_or(n).min(n).min(m);
    let mut found: Vec<u64> = Vec::new();
    let mut candidates = Vec::new();
    for size in 1..=max_size {
        let level: Vec<(u64, Vec<f64>)> = combinations(m, size)
            .into_par_iter()
            .filter(|mask| !found.iter().any(|f| f & mask == *f))
            .filter_map(|mask| {
                let indices = mask_indices(mask);
                hull_weights(embedding, &indices, tol).map(|w| (mask, w))
            })
            .collect();
        debug!("subset size {size}: {} candidates", level.len());
        for (mask, weights) in level {
            found.push(mask);
            candidates.push(make_candidate(embedding, mask_indices(mask), weights));
        }
    }
    if candidates.is_empty() {
        return Err(SotError::NoCandidate);
    }
    Ok(candidates)
}

#[derive(Clone, Debug)]
pub struct FreeSolution {
    pub target: DiscreteMeasure,
    pub plan: TransportPlan,
    pub cost: f64,
    pub candidates: Vec<MixingCandidate>,
    /// Mass routed through each candidate.
    pub candidate_mass: Vec<f64>,
    pub feasibility: FeasibilityReport,
}

/// Builds a plan from candidate columns, merging coincident barycenters and
/// ordering targets lexicographically.
pub(crate) fn plan_from_columns(
    family: &MeasureFamily,
    columns: Vec<(Point, Vec<f64>)>,
    tol: &Tolerances,
) -> TransportPlan {
    let mut merged: Vec<(Point, Vec<f64>)> = Vec::new();
    for (y, col) in columns {
        match merged.iter_mut().find(|(z, _)| max_dist(z, &y) <= tol.geom) {
            Some((_, acc)) => acc.iter_mut().zip(&col).for_each(|(a, v)| *a += v),
            None => merged.push((y, col)),
        }
    }
    merged.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let m = family.m();
    let l = merged.len();
    let mut matrix = vec![0.0; m * l];
    for (j, (_, col)) in merged.iter().enumerate() {
        for k in 0..m {
            matrix[k * l + j] = col[k];
        }
    }
    let target = merged.into_iter().map(|(y, _)| y).collect();
    TransportPlan::from_flat(family.support().to_vec(), target, matrix)
}

pub(crate) fn finish_free(
    family: &MeasureFamily,
    plan: TransportPlan,
    tol: &Tolerances,
) -> Result<(TransportPlan, f64, DiscreteMeasure, FeasibilityReport)> {
    let cost = plan_cost(&plan, &CostSpec::SquaredEuclidean)?;
    let plan = plan.with_cost(cost);
    let feasibility = check_plan(&plan, family, Target::Free, tol)?;
    let target = DiscreteMeasure::from_parts(plan.target().to_vec(), plan.column_sums());
    Ok((plan, cost, target, feasibility))
}

/// Optimal free-target plan for squared Euclidean cost.
///
/// Solves `min Σ_c t_c·local_cost(c)` subject to `Σ_{c ∋ k} t_c w_k^(c) = μ^k`
/// over the minimal candidates and assembles the plan column by column.
pub fn solve_free(
    family: &MeasureFamily,
    limits: &EnumerationLimits,
    tol: &Tolerances,
) -> Result<FreeSolution> {
    let embedding = simplex_embed(family, tol)?;
    let candidates = enumerate_minimal_subsets(&embedding, limits, tol)?;
    let m = family.m();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for (c, cand) in candidates.iter().enumerate() {
        for (&k, w) in cand.indices.iter().zip(&cand.weights) {
            rows[k].push((c, *w));
        }
    }
    let objective = candidates.iter().map(|c| c.local_cost).collect();
    let lp = LinearProgram::from_sparse_rows(objective, rows, family.mean_weights().to_vec())?;
    let sol = solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(SotError::InternalInfeasible);
    }
    let candidate_mass: Vec<f64> = sol.primal.iter().map(|t| clean_primal(*t)).collect();
    let columns = candidates
        .iter()
        .zip(&candidate_mass)
        .filter(|(_, t)| **t > 0.0)
        .map(|(cand, t)| {
            let mut col = vec![0.0; m];
            for (&k, w) in cand.indices.iter().zip(&cand.weights) {
                col[k] = t * w;
            }
            (cand.barycenter.clone(), col)
        })
        .collect();
    let plan = plan_from_columns(family, columns, tol);
    let (plan, cost, target, feasibility) = finish_free(family, plan, tol)?;
    Ok(FreeSolution {
        target,
        plan,
        cost,
        candidates,
        candidate_mass,
        feasibility,
    })
}

/// Moves every target atom to the barycenter of its conditional. Empty
/// columns are dropped and coincident atoms merged.
pub fn refine_targets(plan: &TransportPlan, family: &MeasureFamily, tol: &Tolerances) -> TransportPlan {
    let dim = plan.source().first().map_or(0, Vec::len);
    let columns: Vec<(Point, Vec<f64>)> = (0..plan.cols())
        .filter_map(|j| {
            let col = plan.column(j);
            let mass: f64 = col.iter().sum();
            if mass <= 0.0 {
                return None;
            }
            let mut g = vec![0.0; dim];
            for (x, w) in plan.source().iter().zip(&col) {
                g.iter_mut().zip(x).for_each(|(gc, xc)| *gc += w * xc);
            }
            g.iter_mut().for_each(|v| *v /= mass);
            Some((g, col))
        })
        .collect();
    let refined = plan_from_columns(family, columns, tol);
    let cost = plan_cost(&refined, &CostSpec::SquaredEuclidean).expect("squared Euclidean costs never fail");
    refined.with_cost(cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::build_family;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn pts(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|x| vec![*x]).collect()
    }

    fn canonical() -> MeasureFamily {
        build_family(pts(&[0.0, 1.0]), vec![vec![0.75, 0.25], vec![0.25, 0.75]], &tol()).unwrap()
    }

    #[test]
    fn embedding_examples() {
        let e = simplex_embed(&canonical(), &tol()).unwrap();
        assert_eq!(e.points, vec![vec![0.75, 0.25], vec![0.25, 0.75]]);
        let same = build_family(pts(&[0.0, 1.0]), vec![vec![0.5, 0.5]; 2], &tol()).unwrap();
        let e = simplex_embed(&same, &tol()).unwrap();
        assert!(e.points.iter().all(|p| p == &vec![0.5, 0.5]));
        let disjoint = build_family(pts(&[0.0, 1.0]), vec![vec![1.0, 0.0], vec![0.0, 1.0]], &tol()).unwrap();
        let e = simplex_embed(&disjoint, &tol()).unwrap();
        assert_eq!(e.points, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn canonical_candidate() {
        let t = tol();
        let e = simplex_embed(&canonical(), &t).unwrap();
        let c = enumerate_minimal_subsets(&e, &EnumerationLimits::default(), &t).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].indices, vec![0, 1]);
        assert!((c[0].weights[0] - 0.5).abs() < 1e-12);
        assert!((c[0].barycenter[0] - 0.5).abs() < 1e-12);
        assert!((c[0].local_cost - 0.25).abs() < 1e-12);
    }

    #[test]
    fn identical_measures_give_singletons() {
        let t = tol();
        let f = build_family(pts(&[0.0, 1.0, 3.0]), vec![vec![0.2, 0.3, 0.5]; 2], &t).unwrap();
        let sol = solve_free(&f, &EnumerationLimits::default(), &t).unwrap();
        assert!(sol.candidates.iter().all(|c| c.indices.len() == 1));
        assert!(sol.cost.abs() < 1e-15);
        assert_eq!(sol.target.points(), f.support());
    }

    #[test]
    fn collinear_images_yield_only_straddling_pairs() {
        // ratios of measure 1 are 1.5, 1.2, 0.475; only the last lies below 1
        let t = tol();
        let mean = [0.3, 0.3, 0.4];
        let r1 = [1.5, 1.2, 0.475];
        let mu1: Vec<f64> = mean.iter().zip(&r1).map(|(m, r)| m * r).collect();
        let mu2: Vec<f64> = mean.iter().zip(&r1).map(|(m, r)| m * (2.0 - r)).collect();
        let f = build_family(pts(&[0.0, 1.0, 2.0]), vec![mu1, mu2], &t).unwrap();
        let e = simplex_embed(&f, &t).unwrap();
        let c = enumerate_minimal_subsets(&e, &EnumerationLimits::default(), &t).unwrap();
        let sets: Vec<Vec<usize>> = c.iter().map(|c| c.indices.clone()).collect();
        assert_eq!(sets, vec![vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn canonical_free_solution() {
        let t = tol();
        let sol = solve_free(&canonical(), &EnumerationLimits::default(), &t).unwrap();
        assert!((sol.cost - 0.25).abs() < 1e-12);
        assert_eq!(sol.target.len(), 1);
        assert!((sol.target.points()[0][0] - 0.5).abs() < 1e-12);
        assert!(sol.feasibility.feasible);
    }

    #[test]
    fn refine_moves_to_barycenter() {
        let t = tol();
        let f = canonical();
        let plan = TransportPlan::new(f.support().to_vec(), pts(&[0.3]), vec![vec![0.5], vec![0.5]]).unwrap();
        let before = crate::measure::plan_cost(&plan, &crate::measure::CostSpec::SquaredEuclidean).unwrap();
        assert!((before - 0.29).abs() < 1e-12);
        let refined = refine_targets(&plan, &f, &t);
        assert!((refined.target()[0][0] - 0.5).abs() < 1e-12);
        assert!((refined.cost().unwrap() - 0.25).abs() < 1e-12);
        let again = refine_targets(&refined, &f, &t);
        assert_eq!(again.target(), refined.target());
    }

    #[test]
    fn caps_are_enforced() {
        let t = tol();
        let e = simplex_embed(&canonical(), &t).unwrap();
        let limits = EnumerationLimits {
            max_points: 1,
            ..EnumerationLimits::default()
        };
        assert!(matches!(
            enumerate_minimal_subsets(&e, &limits, &t),
            Err(SotError::EnumerationCapExceeded(_))
        ));
    }
}
