use serde::Serialize;

use crate::measure::{Point, TransportPlan};
use crate::tolerances::Tolerances;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PotentialOutcome {
    /// `φ_a` at every pair's source point.
    Feasible(Vec<f64>),
    /// Pair indices of a cycle with `Σ ⟨y_i, x_i − x_{i+1}⟩ < 0`, in the order
    /// used by the cyclic check.
    Infeasible { cycle: Vec<usize> },
}

impl PotentialOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, PotentialOutcome::Feasible(_))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Support pairs `(x_k, y_j)` of the plan with source in `region`.
pub fn region_pairs(plan: &TransportPlan, region: &[usize], tol: &Tolerances) -> Vec<(Point, Point)> {
    plan.support_entries(tol.feas)
        .into_iter()
        .filter(|(k, _, _)| region.contains(k))
        .map(|(k, j, _)| (plan.source()[k].clone(), plan.target()[j].clone()))
        .collect()
}

/// Finds a convex potential whose subgradient at `x_a` is `y_a`:
/// `φ_b ≥ φ_a + ⟨y_a, x_b − x_a⟩` for all pairs, each constraint relaxed by
/// `tol.cmp / (2N)`.
///
/// The constraints are difference constraints `φ_a − φ_b ≤ ⟨y_a, x_a − x_b⟩`,
/// solved by Bellman-Ford from a virtual root; a negative cycle is returned
/// when none exists.
pub fn recover_potential(pairs: &[(Point, Point)], tol: &Tolerances) -> PotentialOutcome {
    let n = pairs.len();
    if n == 0 {
        return PotentialOutcome::Feasible(Vec::new());
    }
    let slack = tol.cmp / (2.0 * n as f64);
    // weight[b][a] of the edge b → a
    let weight = |b: usize, a: usize| {
        let (xa, ya) = (&pairs[a].0, &pairs[a].1);
        dot(ya, xa) - dot(ya, &pairs[b].0) + slack
    };
    let mut dist = vec![0.0; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut last = None;
    for _ in 0..n {
        last = None;
        for b in 0..n {
            for a in 0..n {
                if a == b {
                    continue;
                }
                let cand = dist[b] + weight(b, a);
                if cand < dist[a] {
                    dist[a] = cand;
                    pred[a] = Some(b);
                    last = Some(a);
                }
            }
        }
        if last.is_none() {
            break;
        }
    }
    let Some(mut v) = last else {
        return PotentialOutcome::Feasible(dist);
    };
    // step back n times to land on the cycle
    for _ in 0..n {
        v = pred[v].expect("relaxed vertex has a predecessor");
    }
    let mut cycle = vec![v];
    let mut u = pred[v].expect("cycle vertex has a predecessor");
    while u != v {
        cycle.push(u);
        u = pred[u].expect("cycle vertex has a predecessor");
    }
    PotentialOutcome::Infeasible { cycle }
}
