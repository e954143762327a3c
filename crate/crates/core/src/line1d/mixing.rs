use log::warn;
use serde::Serialize;

use crate::error::{Result, SotError};
use crate::free::{
    enumerate_minimal_subsets, finish_free, plan_from_columns, simplex_embed, solve_free,
    EnumerationLimits,
};
use crate::measure::{DiscreteMeasure, FeasibilityReport, MeasureFamily, TransportPlan};
use crate::tolerances::Tolerances;

/// How the greedy construction ended.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GreedyOutcome {
    /// Greedy plan returned; its cost matches the reduced LP optimum.
    Matched,
    /// No candidate fit the remaining mass; the LP solution is returned.
    Stall { remaining_mass: f64 },
    /// Greedy finished with a different cost; the LP solution is returned.
    Mismatch { greedy_cost: f64 },
}

#[derive(Clone, Debug)]
pub struct MixingResult {
    pub target: DiscreteMeasure,
    pub plan: TransportPlan,
    pub cost: f64,
    pub outcome: GreedyOutcome,
    /// Optimum of the candidate LP, used as the reference.
    pub reference_cost: f64,
    pub feasibility: FeasibilityReport,
}

/// Free-target plan on the line built by always emitting the feasible
/// conditional with the smallest barycenter.
///
/// Candidates are visited in increasing barycenter order; the leftmost one
/// whose points all carry remaining mass is used as far as the remaining mass
/// allows. The result is compared against [`solve_free`]; a stall or a cost
/// mismatch falls back to the LP plan and is reported in the outcome.
pub fn monotone_mixing_1d(
    family: &MeasureFamily,
    limits: &EnumerationLimits,
    tol: &Tolerances,
) -> Result<MixingResult> {
    if family.dim() != 1 {
        return Err(SotError::DimensionMismatch(format!(
            "monotone mixing needs points on the line, got dimension {}",
            family.dim()
        )));
    }
    let embedding = simplex_embed(family, tol)?;
    let mut candidates = enumerate_minimal_subsets(&embedding, limits, tol)?;
    candidates.sort_by(|a, b| {
        a.barycenter[0]
            .total_cmp(&b.barycenter[0])
            .then_with(|| a.indices.cmp(&b.indices))
    });
    let m = family.m();
    let mut remaining = family.mean_weights().to_vec();
    let mut columns = Vec::new();
    let threshold = tol.mass;
    let stalled = loop {
        if remaining.iter().all(|r| *r <= threshold) {
            break None;
        }
        let Some(cand) = candidates
            .iter()
            .find(|c| c.indices.iter().all(|&k| remaining[k] > threshold))
        else {
            break Some(remaining.iter().sum::<f64>());
        };
        let (limit_pos, t) = cand
            .indices
            .iter()
            .zip(&cand.weights)
            .enumerate()
            .map(|(pos, (&k, w))| (pos, remaining[k] / w))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("candidates are nonempty");
        let mut col = vec![0.0; m];
        for (pos, (&k, w)) in cand.indices.iter().zip(&cand.weights).enumerate() {
            let moved = if pos == limit_pos { remaining[k] } else { t * w };
            col[k] = moved;
            remaining[k] = if pos == limit_pos { 0.0 } else { (remaining[k] - moved).max(0.0) };
        }
        columns.push((cand.barycenter.clone(), col));
    };

    let reference = solve_free(family, limits, tol)?;
    let fallback = |outcome: GreedyOutcome| MixingResult {
        target: reference.target.clone(),
        plan: reference.plan.clone(),
        cost: reference.cost,
        outcome,
        reference_cost: reference.cost,
        feasibility: reference.feasibility.clone(),
    };
    if let Some(remaining_mass) = stalled {
        warn!("greedy mixing stalled with {remaining_mass} mass left; using the LP plan");
        return Ok(fallback(GreedyOutcome::Stall { remaining_mass }));
    }
    let plan = plan_from_columns(family, columns, tol);
    let (plan, cost, target, feasibility) = finish_free(family, plan, tol)?;
    if (cost - reference.cost).abs() > tol.cmp || !feasibility.feasible {
        warn!("greedy mixing cost {cost} differs from the optimum {}; using the LP plan", reference.cost);
        return Ok(fallback(GreedyOutcome::Mismatch { greedy_cost: cost }));
    }
    Ok(MixingResult {
        target,
        plan,
        cost,
        outcome: GreedyOutcome::Matched,
        reference_cost: reference.cost,
        feasibility,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::build_family;

    fn pts(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|x| vec![*x]).collect()
    }

    #[test]
    fn identical_measures() {
        let tol = Tolerances::default();
        let f = build_family(pts(&[0.0, 1.0, 2.0]), vec![vec![0.2, 0.5, 0.3]; 2], &tol).unwrap();
        let r = monotone_mixing_1d(&f, &EnumerationLimits::default(), &tol).unwrap();
        assert_eq!(r.outcome, GreedyOutcome::Matched);
        assert!(r.cost.abs() < 1e-15);
        assert_eq!(r.target.points(), f.support());
    }

    #[test]
    fn canonical_family() {
        let tol = Tolerances::default();
        let f = build_family(pts(&[0.0, 1.0]), vec![vec![0.75, 0.25], vec![0.25, 0.75]], &tol).unwrap();
        let r = monotone_mixing_1d(&f, &EnumerationLimits::default(), &tol).unwrap();
        assert_eq!(r.outcome, GreedyOutcome::Matched);
        assert!((r.cost - 0.25).abs() < 1e-12);
        assert_eq!(r.target.len(), 1);
    }

    #[test]
    fn rejects_higher_dimensions() {
        let tol = Tolerances::default();
        let f = build_family(vec![vec![0.0, 0.0]], vec![vec![1.0]], &tol).unwrap();
        assert!(monotone_mixing_1d(&f, &EnumerationLimits::default(), &tol).is_err());
    }
}
