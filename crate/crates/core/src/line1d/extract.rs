use serde::Serialize;

use crate::error::{Result, SotError};
use crate::measure::{MeasureFamily, TransportPlan};
use crate::tolerances::Tolerances;

/// Deterministic assignment of source points to target points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MongeAssignment {
    /// `assignment[k]` is the target index of source point `k`.
    pub assignment: Vec<usize>,
    /// Largest `|μ_i(T⁻¹(y_j)) − ν_j|` over measures and targets.
    pub pushforward_error: f64,
}

/// Source points whose mass the plan splits, per constancy region.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionSplit {
    pub region: Vec<usize>,
    pub split_sources: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstancyReport {
    pub regions: Vec<RegionSplit>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Extraction {
    Map(MongeAssignment),
    Report(ConstancyReport),
}

/// Reads a map off the plan when every source point sends its mass to a
/// single target (up to `tol.feas`), and otherwise reports the split points.
pub fn extract_monge_map(
    plan: &TransportPlan,
    family: &MeasureFamily,
    tol: &Tolerances,
) -> Result<Extraction> {
    if plan.rows() != family.m() {
        return Err(SotError::DimensionMismatch(format!(
            "plan has {} rows, family support has {} points",
            plan.rows(),
            family.m()
        )));
    }
    let mut assignment = Vec::with_capacity(plan.rows());
    let mut split = vec![false; plan.rows()];
    for k in 0..plan.rows() {
        let row = plan.row(k);
        let (best, top) = row
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, v)| if *v > acc.1 { (j, *v) } else { acc });
        let leakage: f64 = row.iter().sum::<f64>() - top;
        split[k] = leakage > tol.feas;
        assignment.push(best);
    }
    if split.iter().any(|s| *s) {
        let regions = family
            .constancy_regions(tol)
            .into_iter()
            .map(|region| RegionSplit {
                split_sources: region.iter().copied().filter(|&k| split[k]).collect(),
                region,
            })
            .collect();
        return Ok(Extraction::Report(ConstancyReport { regions }));
    }
    let nu = plan.column_sums();
    let mut pushforward_error: f64 = 0.0;
    for measure in family.measures() {
        let mut pushed = vec![0.0; plan.cols()];
        for (k, &j) in assignment.iter().enumerate() {
            pushed[j] += measure[k];
        }
        for (p, v) in pushed.iter().zip(&nu) {
            pushforward_error = pushforward_error.max((p - v).abs());
        }
    }
    Ok(Extraction::Map(MongeAssignment {
        assignment,
        pushforward_error,
    }))
}
