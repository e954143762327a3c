//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every instance is generated from a fixed seed.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use sot_core::fixed::{solve_fixed, FixedSolution, SotInstance};
use sot_core::free::{enumerate_minimal_subsets, refine_targets, simplex_embed, solve_free, EnumerationLimits, FreeSolution};
use sot_core::line1d::{
    lyapunov_split, lyapunov_transform, monge_approx, monotone_mixing_1d, pushforward_cdf_on, GreedyOutcome,
    MongeOptions, PiecewiseConstantDensity,
};
use sot_core::measure::{
    barycentric_function, build_family, check_plan, plan_cost, CostSpec, DiscreteMeasure, MeasureFamily, Point,
    Target, TransportPlan,
};
use sot_core::oracles::{
    audit_free, brute_force_free_target, check_c_monotone, check_cyclic_monotonicity, recover_potential,
    uniform_grid, SamplerOptions,
};
use sot_core::Tolerances;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Every fixed-target solve made by the suite, for the certificate criterion.
#[derive(Default)]
struct Log {
    fixed: Vec<(f64, f64)>,
}

impl Log {
    fn solve(&mut self, inst: &SotInstance, tol: &Tolerances) -> FixedSolution {
        let sol = solve_fixed(inst, tol).expect("fixed-target solve");
        self.fixed.push(((sol.cost - sol.potentials.objective).abs(), sol.potentials.max_violation(inst)));
        sol
    }
}

fn random_instance(seed: u64, max_d: usize, max_m: usize, max_n: usize, max_l: usize) -> SotInstance {
    let family = common::random_family(seed, max_d, max_m, max_n);
    let mut rng = common::rng(seed.wrapping_mul(31).wrapping_add(7));
    let l = rng.gen_range(1..=max_l);
    let target = common::random_target(&mut rng, l, family.dim());
    SotInstance::new(family, target, CostSpec::SquaredEuclidean, &Tolerances::default()).unwrap()
}

fn canonical_family() -> MeasureFamily {
    build_family(vec![vec![0.0], vec![1.0]], vec![vec![0.75, 0.25], vec![0.25, 0.75]], &Tolerances::default()).unwrap()
}

fn criterion_1(tol: &Tolerances) -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for seed in 0..200u64 {
        let inst = random_instance(1_000 + seed, 3, 12, 4, 6);
        let plan = TransportPlan::product(&inst.family().mean_measure(), inst.target());
        let report = check_plan(&plan, inst.family(), Target::Fixed(inst.target()), tol).unwrap();
        worst = worst
            .max(report.row_error)
            .max(report.column_error.unwrap_or(0.0))
            .max(report.mixing_residual);
        failures += usize::from(!report.feasible);
    }
    let elapsed = start.elapsed();
    Verdict::new(
        failures == 0 && elapsed < Duration::from_secs(5),
        format!("200 families, {failures} infeasible, worst residual {worst:.1e}, {:.2} s", elapsed.as_secs_f64()),
    )
}

fn criterion_2(log: &mut Log, tol: &Tolerances) -> Verdict {
    for seed in 0..100u64 {
        let inst = random_instance(2_000 + seed, 3, 10, 4, 6);
        log.solve(&inst, tol);
    }
    let gap = log.fixed.iter().map(|e| e.0).fold(0.0, f64::max);
    let violation = log.fixed.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    Verdict::new(
        gap <= 1e-7 && violation <= tol.feas,
        format!(
            "{} solves, max |primal − dual| {gap:.1e}, max φ + Σ r_i ψ_i − c {violation:.1e}",
            log.fixed.len()
        ),
    )
}

fn criterion_3(log: &mut Log, tol: &Tolerances) -> Verdict {
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut rng = common::rng(3_000 + seed);
        let d = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=10);
        let l = rng.gen_range(1..=6);
        let points = common::random_points(&mut rng, m, d);
        let w = common::random_weights(&mut rng, m);
        // even seeds: a single measure; odd seeds: identical copies
        let copies = if seed % 2 == 0 { 1 } else { rng.gen_range(2..=4) };
        let family = build_family(points, vec![w; copies], tol).unwrap();
        let target = common::random_target(&mut rng, l, d);
        let reference = common::classical_ot_value(&family.mean_measure(), &target);
        let inst = SotInstance::new(family, target, CostSpec::SquaredEuclidean, tol).unwrap();
        let sol = log.solve(&inst, tol);
        worst = worst.max((sol.cost - reference).abs());
    }
    Verdict::new(worst <= 1e-9, format!("50 instances, max |SOT − OT| {worst:.1e}"))
}

fn criterion_4(log: &mut Log, tol: &Tolerances) -> Verdict {
    let family = canonical_family();
    let half = SotInstance::new(family.clone(), DiscreteMeasure::dirac(vec![0.5]), CostSpec::SquaredEuclidean, tol).unwrap();
    let to_half = log.solve(&half, tol).cost;
    let uniform = DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0]], tol).unwrap();
    let both = SotInstance::new(family.clone(), uniform, CostSpec::SquaredEuclidean, tol).unwrap();
    let to_uniform = log.solve(&both, tol).cost;
    let free = solve_free(&family, &EnumerationLimits::default(), tol).unwrap();
    let brute = brute_force_free_target(&family, &uniform_grid(&family, 101), tol).unwrap();
    let free_is_half = free.target.len() == 1
        && (free.target.points()[0][0] - 0.5).abs() <= 1e-12
        && (free.target.weights()[0] - 1.0).abs() <= 1e-12;
    let pass = (to_half - 0.25).abs() <= 1e-9
        && (to_uniform - 0.5).abs() <= 1e-9
        && free_is_half
        && (free.cost - 0.25).abs() <= 1e-9
        && (brute.cost - free.cost).abs() <= 1e-6;
    Verdict::new(
        pass,
        format!(
            "δ½ {to_half:.12}, uniform {to_uniform:.12}, free {:.12} at {:?}, grid {:.12}",
            free.cost,
            free.target.points(),
            brute.cost
        ),
    )
}

fn criterion_5(tol: &Tolerances) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut oversized = 0;
    let mut candidates = 0;
    for seed in 0..200u64 {
        let family = common::random_family(5_000 + seed, 3, 12, 4);
        let e = simplex_embed(&family, tol).unwrap();
        for i in 0..family.n() {
            let v: f64 = e.points.iter().zip(&e.weights).map(|(p, w)| w * p[i]).sum();
            worst = worst.max((v - 1.0 / family.n() as f64).abs());
        }
        let cands = enumerate_minimal_subsets(&e, &EnumerationLimits::default(), tol).unwrap();
        candidates += cands.len();
        oversized += cands.iter().filter(|c| c.indices.len() > family.n()).count();
    }
    Verdict::new(
        worst <= 1e-8 && oversized == 0,
        format!("200 families, center residual {worst:.1e}, {candidates} candidates, {oversized} with more than n points"),
    )
}

fn criterion_6(log: &mut Log, tol: &Tolerances) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut increases = 0;
    for seed in 0..50u64 {
        let mut rng = common::rng(6_000 + seed);
        let d = if seed % 2 == 0 { 1 } else { 2 };
        let m = rng.gen_range(2..=8);
        let n = rng.gen_range(2..=3);
        let family = common::random_family_with(&mut rng, m, n, d);
        let per_axis = if d == 1 { 21 } else { 6 };
        let report = audit_free(&family, &EnumerationLimits::default(), per_axis, true, tol).unwrap();
        worst = worst.max(report.gap.abs());
        // refinement of a fixed-target optimum and of the free optimum
        let l = rng.gen_range(1..=5);
        let target = common::random_target(&mut rng, l, d);
        let inst = SotInstance::new(family.clone(), target, CostSpec::SquaredEuclidean, tol).unwrap();
        let fixed = log.solve(&inst, tol);
        let free = solve_free(&family, &EnumerationLimits::default(), tol).unwrap();
        for (plan, cost) in [(&fixed.plan, fixed.cost), (&free.plan, free.cost)] {
            let refined = plan_cost(&refine_targets(plan, &family, tol), &CostSpec::SquaredEuclidean).unwrap();
            increases += usize::from(refined > cost + 1e-12);
        }
    }
    Verdict::new(
        worst <= 2e-6 && increases == 0,
        format!("50 families, max |free − grid| {worst:.1e}, {increases} refinements raised the cost"),
    )
}

fn criterion_7() -> Verdict {
    const RES: usize = 10_000;
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let mut rng = common::rng(7_000 + seed);
        let nu = common::random_density(&mut rng, 10).scaled(rng.gen_range(0.2..3.0));
        let t = lyapunov_transform(&nu).unwrap();
        let leb = pushforward_cdf_on(&t, &PiecewiseConstantDensity::lebesgue(), (0.0, 1.0), RES).unwrap();
        let pushed = pushforward_cdf_on(&t, &nu, (0.0, 1.0), RES).unwrap();
        let total = nu.mass();
        worst = worst
            .max(leb.kolmogorov_distance(|y| y))
            .max(pushed.kolmogorov_distance(|y| total * y));
    }
    let half = lyapunov_transform(&PiecewiseConstantDensity::indicator(0.0, 0.5, 2.0).unwrap()).unwrap();
    let exact = [0.0, 0.125, 0.3, 0.49, 0.5, 0.51, 0.8, 1.0].iter().all(|&x| {
        let expected = if x < 0.5 { 2.0 * x } else { 2.0 * x - 1.0 };
        half.eval(x) == Some(expected)
    });
    Verdict::new(
        worst <= 1e-6 && exact,
        format!("100 densities, max Kolmogorov distance {worst:.1e}, closed form exact: {exact}"),
    )
}

fn criterion_8() -> Verdict {
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let mut rng = common::rng(8_000 + seed);
        let n = rng.gen_range(1..=4);
        let family: Vec<PiecewiseConstantDensity> = (0..n).map(|_| common::random_density(&mut rng, 8)).collect();
        let g = common::random_step(&mut rng, 8);
        let e = lyapunov_split(&family, &g).unwrap();
        for mu in &family {
            worst = worst.max((e.measure(mu) - g.integral(mu)).abs());
        }
    }
    Verdict::new(worst <= 1e-7, format!("100 pairs, max |μ_i(E) − ∫ g dμ_i| {worst:.1e}"))
}

fn criterion_9(tol: &Tolerances) -> Verdict {
    let grids = [8, 16, 32];
    let mut ok = true;
    let mut slowest: f64 = 0.0;
    let mut lines = Vec::new();
    for seed in 0..10u64 {
        let mut rng = common::rng(9_000 + seed);
        let n = rng.gen_range(2..=3);
        let family: Vec<PiecewiseConstantDensity> = (0..n).map(|_| common::random_density(&mut rng, 4)).collect();
        let target = common::random_density(&mut rng, 4);
        let start = Instant::now();
        for epsilon in [0.05, 0.01] {
            let mut previous = f64::INFINITY;
            let mut gaps = Vec::new();
            for grid in grids {
                let options = MongeOptions { epsilon, grid, ..MongeOptions::default() };
                match monge_approx(&family, &target, None, &options, tol) {
                    Ok(r) => {
                        let gap = r.map_cost - r.plan_cost;
                        let pushed = r.pushforward_errors.iter().all(|e| *e <= tol.push);
                        ok &= r.within_bound(1e-12) && pushed && gap <= previous + 1e-12;
                        if !r.within_bound(1e-12) || !pushed {
                            lines.push(format!(
                                "instance {seed}, ε {epsilon}, grid {grid}: gap {gap:.3e}, slack {:.3e}, \
                                 pushforward errors {:?}",
                                r.slack, r.pushforward_errors
                            ));
                        }
                        previous = gap;
                        gaps.push(gap);
                    }
                    Err(e) => {
                        ok = false;
                        lines.push(format!("instance {seed}, ε {epsilon}, grid {grid}: {e}"));
                    }
                }
            }
            if gaps.windows(2).any(|w| w[1] > w[0] + 1e-12) {
                lines.push(format!("instance {seed}, ε {epsilon}: gaps {gaps:?}"));
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        slowest = slowest.max(elapsed);
        ok &= elapsed < 60.0;
    }
    let mut detail = format!("10 instances × ε {{0.05, 0.01}} × grids {grids:?}, slowest instance {slowest:.2} s");
    for line in lines {
        detail.push_str(&format!("\n       {line}"));
    }
    Verdict::new(ok, detail)
}

fn structure_ok(plan: &TransportPlan, family: &MeasureFamily, seed: u64, tol: &Tolerances) -> (bool, bool) {
    let options = SamplerOptions { samples: 64, support_size: 4, seed };
    let reports = check_c_monotone(plan, family, &CostSpec::SquaredEuclidean, &options, tol).unwrap();
    let competitor = reports.iter().all(|r| r.pass);
    let cyclic = check_cyclic_monotonicity(plan, &family.constancy_regions(tol), 4, tol).unwrap();
    (competitor, cyclic.is_monotone())
}

fn criterion_10(log: &mut Log, tol: &Tolerances) -> Verdict {
    let mut competitor_fail = 0;
    let mut cyclic_fail = 0;
    let mut plans = 0;
    for seed in 0..30u64 {
        let inst = random_instance(10_000 + seed, 2, 8, 3, 4);
        let fixed = log.solve(&inst, tol);
        let free = solve_free(inst.family(), &EnumerationLimits::default(), tol).unwrap();
        for plan in [&fixed.plan, &free.plan] {
            let (c, y) = structure_ok(plan, inst.family(), seed, tol);
            competitor_fail += usize::from(!c);
            cyclic_fail += usize::from(!y);
            plans += 1;
        }
    }
    let mut disagreements = 0;
    let mut infeasible = 0;
    for seed in 0..100u64 {
        let mut rng = common::rng(10_500 + seed);
        let n = rng.gen_range(1..=4);
        let d = rng.gen_range(1..=2);
        let xs = common::random_points(&mut rng, n, d);
        let monotone = seed % 2 == 0;
        let pairs: Vec<(Point, Point)> = xs
            .into_iter()
            .map(|x| {
                let y = if monotone {
                    x.iter().map(|v| 2.0 * v + v * v * v).collect()
                } else {
                    (0..d).map(|_| rng.gen::<f64>()).collect()
                };
                (x, y)
            })
            .collect();
        let matrix = (0..n).map(|a| (0..n).map(|b| if a == b { 1.0 / n as f64 } else { 0.0 }).collect()).collect();
        let plan = TransportPlan::new(
            pairs.iter().map(|p| p.0.clone()).collect(),
            pairs.iter().map(|p| p.1.clone()).collect(),
            matrix,
        )
        .unwrap();
        let cyclic = check_cyclic_monotonicity(&plan, &[(0..n).collect()], 4, tol).unwrap();
        let potential = recover_potential(&pairs, tol).is_feasible();
        infeasible += usize::from(!potential);
        disagreements += usize::from(potential != cyclic.is_monotone());
    }
    Verdict::new(
        competitor_fail == 0 && cyclic_fail == 0 && disagreements == 0,
        format!(
            "{plans} plans: {competitor_fail} competitor failures, {cyclic_fail} cyclic failures; \
             100 supports ({infeasible} without potential): {disagreements} disagreements"
        ),
    )
}

fn nondecreasing(plan: &TransportPlan) -> bool {
    barycentric_function(plan).windows(2).all(|w| w[1].1[0] >= w[0].1[0] - 1e-9)
}

fn criterion_11(log: &mut Log, tol: &Tolerances) -> Verdict {
    let (mut matched, mut stalled, mut mismatched) = (0, 0, 0);
    let mut silent = 0;
    let mut decreasing = 0;
    for seed in 0..100u64 {
        let mut rng = common::rng(11_000 + seed);
        let m = rng.gen_range(1..=8);
        let n = rng.gen_range(1..=3);
        let family = common::random_family_with(&mut rng, m, n, 1);
        let l = rng.gen_range(1..=5);
        let target = common::random_target(&mut rng, l, 1);
        let inst = SotInstance::new(family.clone(), target, CostSpec::SquaredEuclidean, tol).unwrap();
        let fixed = log.solve(&inst, tol);
        let free: FreeSolution = solve_free(&family, &EnumerationLimits::default(), tol).unwrap();
        let greedy = monotone_mixing_1d(&family, &EnumerationLimits::default(), tol).unwrap();
        for plan in [&fixed.plan, &free.plan, &greedy.plan] {
            decreasing += usize::from(!nondecreasing(plan));
        }
        match greedy.outcome {
            GreedyOutcome::Matched => {
                matched += 1;
                silent += usize::from((greedy.cost - free.cost).abs() > 1e-6);
            }
            GreedyOutcome::Stall { .. } => stalled += 1,
            GreedyOutcome::Mismatch { .. } => mismatched += 1,
        }
        // whatever the outcome, the returned plan is optimal
        silent += usize::from((greedy.cost - free.cost).abs() > 1e-6);
    }
    Verdict::new(
        decreasing == 0 && silent == 0,
        format!(
            "100 families: {decreasing} decreasing barycentric functions; greedy matched {matched}, \
             stalled {stalled}, reported mismatch {mismatched}, silent mismatch {silent}"
        ),
    )
}

fn main() -> ExitCode {
    let tol = Tolerances::default();
    let mut log = Log::default();
    let names = [
        "feasibility baseline",
        "LP certificates",
        "classical reduction",
        "canonical instance",
        "simplex identities",
        "free-target oracle equality",
        "Lyapunov transform",
        "Lyapunov split",
        "Monge ≈ Kantorovich",
        "structure checks",
        "1D monotone structure",
    ];
    let mut verdicts: Vec<(usize, Verdict)> = vec![
        (1, criterion_1(&tol)),
        (3, criterion_3(&mut log, &tol)),
        (4, criterion_4(&mut log, &tol)),
        (5, criterion_5(&tol)),
        (6, criterion_6(&mut log, &tol)),
        (7, criterion_7()),
        (8, criterion_8()),
        (9, criterion_9(&tol)),
        (10, criterion_10(&mut log, &tol)),
        (11, criterion_11(&mut log, &tol)),
    ];
    // certificates cover every fixed-target solve above plus a dedicated batch
    verdicts.push((2, criterion_2(&mut log, &tol)));
    verdicts.sort_by_key(|v| v.0);
    let mut failed = 0;
    for (id, v) in &verdicts {
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("[{status}] {id:>2} {}: {}", names[id - 1], v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} of {} criteria passed", verdicts.len() - failed, verdicts.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
