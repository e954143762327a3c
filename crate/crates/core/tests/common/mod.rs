//! Seeded instance generators shared by the integration suites.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sot_core::line1d::{PiecewiseConstantDensity, StepFunction};
use sot_core::measure::{build_family, DiscreteMeasure, MeasureFamily, Point};
use sot_core::Tolerances;
use sot_lp::{solve, LinearProgram};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut ChaCha8Rng, m: usize, d: usize) -> Vec<Point> {
    (0..m).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect()
}

/// Probability vector of length `m`; about a fifth of the entries are zero.
pub fn random_weights(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..m)
            .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.05..1.0) })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            return raw.iter().map(|v| v / total).collect();
        }
    }
}

pub fn random_family_with(rng: &mut ChaCha8Rng, m: usize, n: usize, d: usize) -> MeasureFamily {
    let tol = Tolerances::default();
    let points = random_points(rng, m, d);
    let weights = (0..n).map(|_| random_weights(rng, m)).collect();
    build_family(points, weights, &tol).expect("generated family is valid")
}

/// Family with `d ≤ max_d`, `m ≤ max_m`, `n ≤ max_n`.
pub fn random_family(seed: u64, max_d: usize, max_m: usize, max_n: usize) -> MeasureFamily {
    let mut rng = rng(seed);
    let d = rng.gen_range(1..=max_d);
    let m = rng.gen_range(1..=max_m);
    let n = rng.gen_range(1..=max_n);
    random_family_with(&mut rng, m, n, d)
}

pub fn random_target(rng: &mut ChaCha8Rng, l: usize, d: usize) -> DiscreteMeasure {
    let points = random_points(rng, l, d);
    let mut weights = random_weights(rng, l);
    if weights.iter().all(|w| *w == 0.0) {
        weights[0] = 1.0;
    }
    DiscreteMeasure::probability(points, weights, &Tolerances::default()).expect("generated target is valid")
}

/// Sorted breakpoints `lo = b_0 < … < b_cells = hi`.
pub fn random_breakpoints(rng: &mut ChaCha8Rng, cells: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut inner: Vec<f64> = (1..cells).map(|_| rng.gen_range(lo..hi)).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    let mut bp = vec![lo];
    bp.extend(inner.into_iter().filter(|v| *v > lo && *v < hi));
    bp.push(hi);
    bp
}

/// Probability density on `[0, 1]` with up to `max_cells` cells, some zero.
pub fn random_density(rng: &mut ChaCha8Rng, max_cells: usize) -> PiecewiseConstantDensity {
    let cells = rng.gen_range(1..=max_cells);
    let bp = random_breakpoints(rng, cells, 0.0, 1.0);
    loop {
        let values: Vec<f64> = (0..bp.len() - 1)
            .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.1..3.0) })
            .collect();
        let d = PiecewiseConstantDensity::new(bp.clone(), values).expect("valid density");
        if d.mass() > 0.0 {
            return d.normalized().expect("positive mass");
        }
    }
}

pub fn random_step(rng: &mut ChaCha8Rng, max_cells: usize) -> StepFunction {
    let cells = rng.gen_range(1..=max_cells);
    let bp = random_breakpoints(rng, cells, 0.0, 1.0);
    let values = (0..bp.len() - 1).map(|_| rng.gen::<f64>()).collect();
    StepFunction::new(bp, values).expect("values lie in [0, 1]")
}

/// Ordinary transport LP `min Σ c_kj π_kj` with both marginals, assembled
/// without any of the library's constraint builders.
pub fn classical_ot_value(source: &DiscreteMeasure, target: &DiscreteMeasure) -> f64 {
    let (m, l) = (source.len(), target.len());
    let mut cost = Vec::with_capacity(m * l);
    for x in source.points() {
        for y in target.points() {
            cost.push(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum());
        }
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for k in 0..m {
        let mut row = vec![0.0; m * l];
        row[k * l..(k + 1) * l].iter_mut().for_each(|v| *v = 1.0);
        rows.push(row);
        rhs.push(source.weights()[k]);
    }
    for j in 0..l {
        let mut row = vec![0.0; m * l];
        (0..m).for_each(|k| row[k * l + j] = 1.0);
        rows.push(row);
        rhs.push(target.weights()[j]);
    }
    let lp = LinearProgram::new(cost, rows, rhs).expect("well-formed program");
    solve(&lp).expect("transport program solves").objective
}

/// Squared cost of the north-west corner coupling of two measures on the
/// line, which is optimal for convex costs.
pub fn monotone_coupling_cost(source: &DiscreteMeasure, target: &DiscreteMeasure) -> f64 {
    let sorted = |m: &DiscreteMeasure| {
        let mut v: Vec<(f64, f64)> = m.points().iter().map(|p| p[0]).zip(m.weights().iter().copied()).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    let (a, b) = (sorted(source), sorted(target));
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a[0].1, b[0].1);
    let mut cost = 0.0;
    while i < a.len() && j < b.len() {
        let t = ra.min(rb);
        cost += t * (a[i].0 - b[j].0).powi(2);
        ra -= t;
        rb -= t;
        if ra <= 1e-15 {
            i += 1;
            if i < a.len() {
                ra = a[i].1;
            }
        }
        if rb <= 1e-15 {
            j += 1;
            if j < b.len() {
                rb = b[j].1;
            }
        }
    }
    cost
}
