use serde::Serialize;

use crate::error::{Result, SotError};
use crate::measure::{sq_dist, TransportPlan};
use crate::tolerances::Tolerances;

pub const MAX_CYCLE: usize = 6;
const MAX_REPORTED: usize = 256;

/// A cycle of support pairs `(x_k, y_j)` whose cyclic shift is cheaper.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleViolation {
    pub region: usize,
    /// `(source, target)` indices in cycle order.
    pub pairs: Vec<(usize, usize)>,
    /// `Σ ‖x_i − y_i‖² − Σ ‖x_{i+1} − y_i‖²` (positive).
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CyclicReport {
    pub cycles_checked: usize,
    pub total_violations: usize,
    /// The first violations found, at most 256.
    pub violations: Vec<CycleViolation>,
}

impl CyclicReport {
    pub fn is_monotone(&self) -> bool {
        self.total_violations == 0
    }
}

/// Enumerates cycles of length `2..=max_cycle` among the support pairs of
/// each region, each cycle once up to rotation, and records those violating
/// `Σ c(x_i, y_i) ≤ Σ c(x_{i+1}, y_i)` for the squared distance by more than
/// `tol.cmp`.
pub fn check_cyclic_monotonicity(
    plan: &TransportPlan,
    regions: &[Vec<usize>],
    max_cycle: usize,
    tol: &Tolerances,
) -> Result<CyclicReport> {
    if max_cycle > MAX_CYCLE {
        return Err(SotError::InvalidInput(format!(
            "cycle length {max_cycle} exceeds {MAX_CYCLE}"
        )));
    }
    let mut report = CyclicReport {
        cycles_checked: 0,
        total_violations: 0,
        violations: Vec::new(),
    };
    for (r, region) in regions.iter().enumerate() {
        let pairs: Vec<(usize, usize)> = plan
            .support_entries(tol.feas)
            .into_iter()
            .filter(|(k, _, _)| region.contains(k))
            .map(|(k, j, _)| (k, j))
            .collect();
        let xs: Vec<&[f64]> = pairs.iter().map(|&(k, _)| plan.source()[k].as_slice()).collect();
        let ys: Vec<&[f64]> = pairs.iter().map(|&(_, j)| plan.target()[j].as_slice()).collect();
        let mut path = Vec::with_capacity(max_cycle);
        for start in 0..pairs.len() {
            path.clear();
            path.push(start);
            extend(&mut path, start, pairs.len(), max_cycle, &mut |cycle| {
                report.cycles_checked += 1;
                let own: f64 = cycle.iter().map(|&p| sq_dist(xs[p], ys[p])).sum();
                let shifted: f64 = (0..cycle.len())
                    .map(|i| sq_dist(xs[cycle[(i + 1) % cycle.len()]], ys[cycle[i]]))
                    .sum();
                let slack = own - shifted;
                if slack > tol.cmp {
                    report.total_violations += 1;
                    if report.violations.len() < MAX_REPORTED {
                        report.violations.push(CycleViolation {
                            region: r,
                            pairs: cycle.iter().map(|&p| pairs[p]).collect(),
                            slack,
                        });
                    }
                }
            });
        }
    }
    Ok(report)
}

/// Depth-first extension of `path`; cycles are visited with their smallest
/// element first so every cycle appears once per orientation.
fn extend(
    path: &mut Vec<usize>,
    start: usize,
    count: usize,
    max_len: usize,
    visit: &mut dyn FnMut(&[usize]),
) {
    if path.len() >= 2 {
        visit(path);
    }
    if path.len() == max_len {
        return;
    }
    for next in start + 1..count {
        if path.contains(&next) {
            continue;
        }
        path.push(next);
        extend(path, start, count, max_len, visit);
        path.pop();
    }
}
