mod common;

use proptest::prelude::*;
use rand::Rng;
use sot_core::fixed::{solve_classical, solve_fixed, SotInstance};
use sot_core::free::{solve_free, EnumerationLimits};
use sot_core::measure::{build_family, plan_cost, CostSpec, DiscreteMeasure, Point, TransportPlan};
use sot_core::oracles::{
    brute_force_free_target, check_c_monotone, check_cyclic_monotonicity, recover_potential, region_pairs,
    uniform_grid, PotentialOutcome, SamplerOptions,
};
use sot_core::Tolerances;

fn diagonal_plan(pairs: &[(Point, Point)]) -> TransportPlan {
    let n = pairs.len();
    let matrix = (0..n)
        .map(|a| (0..n).map(|b| if a == b { 1.0 / n as f64 } else { 0.0 }).collect())
        .collect();
    TransportPlan::new(
        pairs.iter().map(|p| p.0.clone()).collect(),
        pairs.iter().map(|p| p.1.clone()).collect(),
        matrix,
    )
    .unwrap()
}

/// Random support pairs; half of them lie on the graph of a convex gradient.
fn random_pairs(seed: u64) -> Vec<(Point, Point)> {
    let mut rng = common::rng(seed);
    let n = rng.gen_range(1..=5);
    let d = rng.gen_range(1..=2);
    let monotone = rng.gen_bool(0.5);
    let xs = common::random_points(&mut rng, n, d);
    xs.into_iter()
        .map(|x| {
            let y: Point = if monotone {
                x.iter().map(|v| 2.0 * v + v * v * v).collect()
            } else {
                (0..d).map(|_| rng.gen::<f64>()).collect()
            };
            (x, y)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn optimal_plans_are_c_monotone(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let family = common::random_family(seed, 2, 8, 3);
        let mut rng = common::rng(seed ^ 0xabc);
        let l = rng.gen_range(1..=4);
        let target = common::random_target(&mut rng, l, family.dim());
        let inst = SotInstance::new(family.clone(), target, CostSpec::SquaredEuclidean, &tol).unwrap();
        let fixed = solve_fixed(&inst, &tol).unwrap();
        let free = solve_free(&family, &EnumerationLimits::default(), &tol).unwrap();
        let options = SamplerOptions { samples: 16, support_size: 4, seed };
        for plan in [&fixed.plan, &free.plan] {
            let reports = check_c_monotone(plan, &family, &CostSpec::SquaredEuclidean, &options, &tol).unwrap();
            prop_assert_eq!(reports.len(), 16);
            for r in &reports {
                prop_assert!(r.pass, "{r:?}");
                prop_assert!(r.best_cost <= r.alpha_cost + tol.cmp);
            }
        }
    }

    #[test]
    fn optimal_plans_are_cyclically_monotone_per_region(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let family = common::random_family(seed, 2, 8, 3);
        let mut rng = common::rng(seed ^ 0xdef);
        let l = rng.gen_range(1..=4);
        let target = common::random_target(&mut rng, l, family.dim());
        let inst = SotInstance::new(family.clone(), target, CostSpec::SquaredEuclidean, &tol).unwrap();
        let fixed = solve_fixed(&inst, &tol).unwrap();
        let free = solve_free(&family, &EnumerationLimits::default(), &tol).unwrap();
        let regions = family.constancy_regions(&tol);
        for plan in [&fixed.plan, &free.plan] {
            let report = check_cyclic_monotonicity(plan, &regions, 4, &tol).unwrap();
            prop_assert!(report.is_monotone(), "{report:?}");
            for region in &regions {
                prop_assert!(recover_potential(&region_pairs(plan, region, &tol), &tol).is_feasible());
            }
        }
    }

    #[test]
    fn potentials_exist_exactly_without_cycle_violations(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let pairs = random_pairs(seed);
        let plan = diagonal_plan(&pairs);
        let cyclic = check_cyclic_monotonicity(&plan, &[(0..pairs.len()).collect()], pairs.len().max(2), &tol).unwrap();
        let outcome = recover_potential(&pairs, &tol);
        prop_assert_eq!(outcome.is_feasible(), cyclic.is_monotone(), "{:?} vs {:?}", outcome, cyclic);
        match outcome {
            PotentialOutcome::Feasible(phi) => {
                for a in 0..pairs.len() {
                    for b in 0..pairs.len() {
                        let (xa, ya) = (&pairs[a].0, &pairs[a].1);
                        let lin: f64 = ya.iter().zip(pairs[b].0.iter().zip(xa)).map(|(y, (xb, xa))| y * (xb - xa)).sum();
                        prop_assert!(phi[b] >= phi[a] + lin - tol.cmp);
                    }
                }
            }
            PotentialOutcome::Infeasible { cycle } => {
                // the returned cycle itself has positive slack
                let sq = |p: &[f64], q: &[f64]| -> f64 { p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum() };
                let own: f64 = cycle.iter().map(|&i| sq(&pairs[i].0, &pairs[i].1)).sum();
                let shifted: f64 = (0..cycle.len())
                    .map(|i| sq(&pairs[cycle[(i + 1) % cycle.len()]].0, &pairs[cycle[i]].1))
                    .sum();
                prop_assert!(own - shifted > 0.0);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let family = common::random_family(seed, 1, 8, 2);
        let free = solve_free(&family, &EnumerationLimits::default(), &tol).unwrap();
        let options = SamplerOptions { samples: 8, support_size: 3, seed };
        let a = check_c_monotone(&free.plan, &family, &CostSpec::SquaredEuclidean, &options, &tol).unwrap();
        let b = check_c_monotone(&free.plan, &family, &CostSpec::SquaredEuclidean, &options, &tol).unwrap();
        prop_assert_eq!(a, b);
    }
}

/// Classical 1D instance where exchanging mass along a 2-cycle raises the
/// cost by a known amount.
#[test]
fn crossed_plan_is_caught_with_a_witness() {
    let tol = Tolerances::default();
    let pts = |xs: &[f64]| xs.iter().map(|x| vec![*x]).collect::<Vec<_>>();
    let source = DiscreteMeasure::uniform(pts(&[0.0, 1.0, 2.0]), &tol).unwrap();
    let target = DiscreteMeasure::uniform(pts(&[0.5, 1.5, 2.5]), &tol).unwrap();
    let optimal = solve_classical(&source, &target, &CostSpec::SquaredEuclidean, &tol).unwrap();
    assert!((optimal.cost - 0.25).abs() < 1e-12);
    let third = 1.0 / 3.0;
    let delta = 0.1;
    let crossed = TransportPlan::new(
        source.points().to_vec(),
        target.points().to_vec(),
        vec![
            vec![third - delta, delta, 0.0],
            vec![delta, third - delta, 0.0],
            vec![0.0, 0.0, third],
        ],
    )
    .unwrap();
    // (0 − 1.5)² + (1 − 0.5)² − (0 − 0.5)² − (1 − 1.5)² = 2
    let raised = plan_cost(&crossed, &CostSpec::SquaredEuclidean).unwrap();
    assert!((raised - (0.25 + delta * 2.0)).abs() < 1e-12);
    let family = build_family(source.points().to_vec(), vec![source.weights().to_vec()], &tol).unwrap();
    let options = SamplerOptions { samples: 64, support_size: 4, seed: 3 };
    let reports = check_c_monotone(&crossed, &family, &CostSpec::SquaredEuclidean, &options, &tol).unwrap();
    let failures: Vec<_> = reports.iter().filter(|r| !r.pass).collect();
    assert!(!failures.is_empty());
    for f in failures {
        assert!(f.witness.is_some());
        assert!(f.best_cost < f.alpha_cost - tol.cmp);
    }
    let cyclic = check_cyclic_monotonicity(&crossed, &[vec![0, 1, 2]], 2, &tol).unwrap();
    assert!(!cyclic.is_monotone());
    assert!(cyclic.violations.iter().all(|v| v.pairs.len() == 2));
}

#[test]
fn product_plan_on_identical_measures() {
    let tol = Tolerances::default();
    let pts = vec![vec![0.0], vec![1.0]];
    let mu = DiscreteMeasure::uniform(pts.clone(), &tol).unwrap();
    let product = TransportPlan::product(&mu, &mu);
    // swapping (0→1, 1→0) for (0→0, 1→1) saves 2
    let report = check_cyclic_monotonicity(&product, &[vec![0, 1]], 2, &tol).unwrap();
    assert!(!report.is_monotone());
    let on_a_point = TransportPlan::product(&mu, &DiscreteMeasure::dirac(vec![0.5]));
    let tied = check_cyclic_monotonicity(&on_a_point, &[vec![0, 1]], 2, &tol).unwrap();
    assert!(tied.is_monotone());
}

#[test]
fn brute_force_grid_examples() {
    let tol = Tolerances::default();
    let canonical = build_family(vec![vec![0.0], vec![1.0]], vec![vec![0.75, 0.25], vec![0.25, 0.75]], &tol).unwrap();
    let r = brute_force_free_target(&canonical, &uniform_grid(&canonical, 101), &tol).unwrap();
    assert!((r.cost - 0.25).abs() < 1e-6);
    assert_eq!(r.target.points(), &[vec![0.5]]);
    // grid without 0.5: strictly worse than the optimum
    let off: Vec<Point> = (0..10).map(|i| vec![i as f64 / 10.0 + 0.05]).collect();
    let r = brute_force_free_target(&canonical, &off, &tol).unwrap();
    assert!(r.cost > 0.25 + 1e-4);
    let same = build_family(vec![vec![0.0], vec![1.0]], vec![vec![0.4, 0.6], vec![0.4, 0.6]], &tol).unwrap();
    let r = brute_force_free_target(&same, &uniform_grid(&same, 5), &tol).unwrap();
    assert!(r.cost.abs() < 1e-12);
}
