use std::path::Path;

use serde_json::{json, Value};
use sot_core::fixed::{solve_fixed, solve_fixed_exact, ExactInstance, SotInstance};
use sot_core::free::{solve_free, EnumerationLimits};
use sot_core::line1d::{
    extract_monge_map, lyapunov_transform, monge_approx, monotone_mixing_1d, pushforward_cdf_on, CdfTable,
    MongeOptions, PiecewiseConstantDensity, PiecewiseMap, DEFAULT_RESOLUTION,
};
use sot_core::measure::{
    barycentric_function, check_plan, plan_cost, CostSpec, DiscreteMeasure, FeasibilityReport, MeasureFamily,
    Target, TransportPlan,
};
use sot_core::oracles::{
    audit_free, check_c_monotone, check_cyclic_monotonicity, recover_potential, region_pairs, PotentialOutcome,
    SamplerOptions,
};
use sot_core::Tolerances;
use sot_lp::{Rational, Scalar};

use crate::args::Options;
use crate::error::{CliError, Result};
use crate::format::{
    exact_vec, feasibility_doc, floats, measure_doc, override_tolerances, plan_doc, PlotSink, ProblemFile,
};

/// Options after merging the problem file with command-line flags.
pub struct Settings {
    pub tol: Tolerances,
    pub exact: bool,
    pub grid: Option<usize>,
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub max_subset_size: Option<usize>,
    pub audit: bool,
    pub samples: usize,
    pub support_size: usize,
    pub max_cycle: usize,
    pub resolution: usize,
}

impl Settings {
    pub fn resolve(problem: &ProblemFile, flags: &Options) -> Result<Self> {
        let file = &problem.options;
        let mut tol = file.tolerances;
        override_tolerances(&mut tol, &flags.tol)?;
        let sampler = SamplerOptions::default();
        Ok(Self {
            tol,
            exact: flags.exact || file.exact.unwrap_or(false),
            grid: flags.grid.or(file.grid),
            epsilon: flags.epsilon.or(file.epsilon),
            seed: flags.seed.or(file.seed).unwrap_or(sampler.seed),
            max_subset_size: flags.max_subset_size.or(file.max_subset_size),
            audit: flags.audit || file.audit.unwrap_or(false),
            samples: file.samples.unwrap_or(sampler.samples),
            support_size: file.support_size.unwrap_or(sampler.support_size),
            max_cycle: file.max_cycle.unwrap_or(4),
            resolution: file.resolution.unwrap_or(DEFAULT_RESOLUTION),
        })
    }

    fn limits(&self) -> EnumerationLimits {
        EnumerationLimits {
            max_size: self.max_subset_size,
            ..EnumerationLimits::default()
        }
    }
}

/// Result document and whether every verdict in it passed.
pub struct Outcome {
    pub doc: Value,
    pub ok: bool,
}

fn status(ok: bool, pass: &str, fail: &str) -> String {
    if ok { pass } else { fail }.to_string()
}

fn barycentric_plot(plots: &mut PlotSink, plan: &TransportPlan) -> Result<()> {
    if plan.target().first().map_or(true, |y| y.len() != 1) {
        return Ok(());
    }
    plots.table("barycentric", barycentric_function(plan).into_iter().map(|(y, g)| (y[0], g[0])))
}

fn squared_only(problem: &ProblemFile, command: &str) -> Result<()> {
    if problem.cost.is_some() {
        return Err(CliError::Usage(format!("{command} supports only squared Euclidean cost")));
    }
    Ok(())
}

fn with_dropped(mut report: FeasibilityReport, dropped_mass: f64, tol: &Tolerances) -> FeasibilityReport {
    report.row_error = report.row_error.max(dropped_mass);
    report.feasible &= dropped_mass <= tol.feas;
    report
}

pub fn solve_fixed_cmd(problem: &ProblemFile, path: &Path, s: &Settings, plots: &mut PlotSink) -> Result<Outcome> {
    if s.exact {
        return solve_fixed_exact_cmd(problem, path);
    }
    let family = problem.family(path, &s.tol)?;
    let target = problem
        .target(&s.tol)?
        .ok_or_else(|| CliError::Usage("solve-fixed needs a `target`".into()))?;
    let cost = problem.cost(&family, target.len())?;
    let inst = SotInstance::new(family, target, cost, &s.tol)?;
    let sol = solve_fixed(&inst, &s.tol)?;
    let c = sol.certificate;
    let violation = sol.potentials.max_violation(&inst);
    let ok = sol.feasibility.feasible && c.within(s.tol.feas, s.tol.gap) && violation <= s.tol.feas;
    barycentric_plot(plots, &sol.plan)?;
    let doc = json!({
        "status": status(ok, "optimal", "uncertified"),
        "cost": sol.cost,
        "target": measure_doc(inst.target()),
        "plan": plan_doc(&sol.plan, inst.family()),
        "potentials": {
            "phi": sol.potentials.phi,
            "psi": sol.potentials.psi,
            "objective": sol.potentials.objective,
            "max_violation": violation,
        },
        "certificate": {
            "primal_residual": c.primal_residual,
            "min_primal": c.min_primal,
            "dual_infeasibility": c.dual_infeasibility,
            "complementarity": c.complementarity,
            "duality_gap": c.duality_gap,
        },
        "feasibility": feasibility_doc(&sol.feasibility),
        "dropped": inst.family().dropped(),
    });
    Ok(Outcome { doc, ok })
}

fn rationals(rows: &[Vec<Rational>]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect()
}

fn solve_fixed_exact_cmd(problem: &ProblemFile, path: &Path) -> Result<Outcome> {
    let target = problem
        .target
        .as_ref()
        .ok_or_else(|| CliError::Usage("solve-fixed needs a `target`".into()))?;
    let points = problem.support(path)?;
    let support: Vec<Vec<Rational>> = problem.points.iter().map(|p| exact_vec(p, path)).collect::<Result<_>>()?;
    let measures = problem.measures.iter().map(|w| exact_vec(w, path)).collect::<Result<_>>()?;
    let target_points = target.points.iter().map(|p| exact_vec(p, path)).collect::<Result<_>>()?;
    let target_weights = exact_vec(&target.weights, path)?;
    let cost = match &problem.cost {
        Some(rows) => Some(rows.iter().map(|r| exact_vec(r, path)).collect::<Result<_>>()?),
        None => None,
    };
    let inst = ExactInstance::new(support, measures, target_points, target_weights, cost)?;
    let sol = solve_fixed_exact(&inst)?;
    let ok = sol.cost == sol.dual_objective;
    let plan_f64: Vec<Vec<f64>> = sol.plan.iter().map(|r| r.iter().map(Scalar::to_f64).collect()).collect();
    let target_f64: Vec<Vec<f64>> = target.points.iter().map(|p| floats(p)).collect();
    let retained = inst.retained();
    let source: Vec<Vec<f64>> = retained.iter().map(|&k| points[k].clone()).collect();
    let doc = json!({
        "status": status(ok, "optimal", "uncertified"),
        "cost": sol.cost.to_f64(),
        "exact": {
            "cost": sol.cost.to_string(),
            "dual_objective": sol.dual_objective.to_string(),
            "plan": rationals(&sol.plan),
        },
        "target": { "points": target_f64, "weights": floats(&target.weights) },
        "plan": { "rows": retained, "source": source, "target": target_f64, "matrix": plan_f64 },
    });
    Ok(Outcome { doc, ok })
}

pub fn solve_free_cmd(problem: &ProblemFile, path: &Path, s: &Settings, plots: &mut PlotSink) -> Result<Outcome> {
    squared_only(problem, "solve-free")?;
    let family = problem.family(path, &s.tol)?;
    let limits = s.limits();
    let sol = solve_free(&family, &limits, &s.tol)?;
    let mut ok = sol.feasibility.feasible;
    let original = family.original_index();
    let candidates: Vec<Value> = sol
        .candidates
        .iter()
        .zip(&sol.candidate_mass)
        .map(|(c, mass)| {
            json!({
                "points": c.indices.iter().map(|&k| original[k]).collect::<Vec<_>>(),
                "weights": c.weights,
                "barycenter": c.barycenter,
                "local_cost": c.local_cost,
                "mass": mass,
            })
        })
        .collect();
    let mut doc = json!({
        "cost": sol.cost,
        "target": measure_doc(&sol.target),
        "plan": plan_doc(&sol.plan, &family),
        "candidates": candidates,
        "feasibility": feasibility_doc(&sol.feasibility),
        "dropped": family.dropped(),
    });
    if s.audit {
        let per_axis = s.grid.unwrap_or(if family.dim() == 1 { 101 } else { 11 });
        let audit = audit_free(&family, &limits, per_axis, true, &s.tol)?;
        ok &= audit.agrees;
        doc["audit"] = serde_json::to_value(&audit).expect("audit serializes");
    }
    barycentric_plot(plots, &sol.plan)?;
    doc["status"] = status(ok, "optimal", "uncertified").into();
    Ok(Outcome { doc, ok })
}

pub fn solve_1d_cmd(problem: &ProblemFile, path: &Path, s: &Settings, plots: &mut PlotSink) -> Result<Outcome> {
    squared_only(problem, "solve-1d")?;
    let family = problem.family(path, &s.tol)?;
    if family.dim() != 1 {
        return Err(CliError::Usage(format!("solve-1d needs points on the line, got dimension {}", family.dim())));
    }
    let res = monotone_mixing_1d(&family, &s.limits(), &s.tol)?;
    let ok = res.feasibility.feasible;
    let extraction = extract_monge_map(&res.plan, &family, &s.tol)?;
    barycentric_plot(plots, &res.plan)?;
    let doc = json!({
        "status": status(ok, "optimal", "infeasible"),
        "cost": res.cost,
        "greedy": res.outcome,
        "reference_cost": res.reference_cost,
        "target": measure_doc(&res.target),
        "plan": plan_doc(&res.plan, &family),
        "barycentric": barycentric_function(&res.plan),
        "extraction": extraction,
        "feasibility": feasibility_doc(&res.feasibility),
    });
    Ok(Outcome { doc, ok })
}

/// `(x, T(x))` at both ends of every piece.
fn map_table(map: &PiecewiseMap) -> Vec<(f64, f64)> {
    map.pieces()
        .iter()
        .flat_map(|p| [(p.lo, p.eval(p.lo)), (p.hi, p.eval(p.hi))])
        .collect()
}

fn cdf_rows(table: &CdfTable) -> Vec<(f64, f64)> {
    table.points.iter().copied().zip(table.values.iter().copied()).collect()
}

fn density(doc: Option<&crate::format::DensityDoc>, what: &str) -> Result<PiecewiseConstantDensity> {
    let doc = doc.ok_or_else(|| CliError::Usage(format!("the problem needs `{what}`")))?;
    ProblemFile::density(doc)
}

pub fn lyapunov_cmd(problem: &ProblemFile, s: &Settings, plots: &mut PlotSink) -> Result<Outcome> {
    let nu = density(problem.target_density.as_ref(), "target_density")?;
    let map = lyapunov_transform(&nu)?;
    let lebesgue = pushforward_cdf_on(&map, &PiecewiseConstantDensity::lebesgue(), (0.0, 1.0), s.resolution)?;
    let pushed = pushforward_cdf_on(&map, &nu, (0.0, 1.0), s.resolution)?;
    let total = nu.mass();
    let lebesgue_error = lebesgue.kolmogorov_distance(|y| y);
    let target_error = pushed.kolmogorov_distance(|y| total * y);
    let ok = lebesgue_error <= s.tol.push && target_error <= s.tol.push;
    let table = map_table(&map);
    plots.table("map", table.iter().copied())?;
    plots.table("cdf_lebesgue", cdf_rows(&lebesgue))?;
    plots.table("cdf_target", cdf_rows(&pushed))?;
    let doc = json!({
        "status": status(ok, "verified", "violation"),
        "map": { "pieces": map.pieces(), "table": table },
        "target_mass": total,
        "pushforward": {
            "resolution": s.resolution,
            "lebesgue_error": lebesgue_error,
            "target_error": target_error,
        },
    });
    Ok(Outcome { doc, ok })
}

pub fn monge_cmd(problem: &ProblemFile, s: &Settings, plots: &mut PlotSink) -> Result<Outcome> {
    let family: Vec<PiecewiseConstantDensity> = problem
        .densities
        .as_ref()
        .ok_or_else(|| CliError::Usage("monge-approx needs `densities`".into()))?
        .iter()
        .map(ProblemFile::density)
        .collect::<Result<_>>()?;
    let nu = density(problem.target_density.as_ref(), "target_density")?;
    let defaults = MongeOptions::default();
    let options = MongeOptions {
        epsilon: s.epsilon.unwrap_or(defaults.epsilon),
        grid: s.grid.unwrap_or(defaults.grid),
        resolution: s.resolution,
        ..defaults
    };
    // a supplied cell plan only needs its matrix; cell indices stand in for points
    let cell_plan = match &problem.plan {
        Some(p) => {
            let cols = p.matrix.first().map_or(0, Vec::len);
            let index = |len: usize| (0..len).map(|k| vec![k as f64]).collect::<Vec<_>>();
            Some(TransportPlan::new(index(p.matrix.len()), index(cols), p.matrix.clone())?)
        }
        None => None,
    };
    let r = monge_approx(&family, &nu, cell_plan.as_ref(), &options, &s.tol)?;
    let pushed_ok = r.pushforward_errors.iter().all(|e| *e <= s.tol.push);
    let ok = r.within_bound(s.tol.feas) && pushed_ok;
    if plots.enabled() {
        plots.table("map", map_table(&r.map))?;
        let domain = nu.domain();
        for (i, mu) in family.iter().enumerate() {
            let table = pushforward_cdf_on(&r.map, mu, domain, s.resolution)?;
            plots.table(&format!("cdf_pushforward_{i}"), cdf_rows(&table))?;
        }
        let steps = s.resolution.max(2);
        plots.table(
            "cdf_target",
            (0..steps).map(|t| {
                let y = domain.0 + (domain.1 - domain.0) * t as f64 / (steps - 1) as f64;
                (y, nu.cdf(y))
            }),
        )?;
    }
    let doc = json!({
        "status": status(ok, "verified", "violation"),
        "map_cost": r.map_cost,
        "plan_cost": r.plan_cost,
        "gap": r.map_cost - r.plan_cost,
        "block_cost": r.block_cost,
        "slack": r.slack,
        "epsilon": r.epsilon,
        "within_bound": r.within_bound(s.tol.feas),
        "max_oscillation": r.max_oscillation,
        "pushforward_errors": r.pushforward_errors,
        "cells": {
            "source_edges": r.source_edges,
            "target_edges": r.target_edges,
            "matrix": r.plan.matrix_rows(),
        },
        "map": { "pieces": r.map.pieces() },
    });
    Ok(Outcome { doc, ok })
}

pub fn verify_cmd(problem: &ProblemFile, path: &Path, s: &Settings) -> Result<Outcome> {
    let family = problem.family(path, &s.tol)?;
    let doc_plan = problem
        .plan
        .as_ref()
        .ok_or_else(|| CliError::Usage("verify needs a `plan`".into()))?;
    let loaded = doc_plan.load(problem, &family, path)?;
    let target = problem.target(&s.tol)?;
    let spec = match &target {
        Some(t) => Target::Fixed(t),
        None => Target::Free,
    };
    let report = with_dropped(check_plan(&loaded.plan, &family, spec, &s.tol)?, loaded.dropped_mass, &s.tol);
    let cost = plan_cost(&loaded.plan, &problem.cost(&family, loaded.plan.cols())?)?;
    let ok = report.feasible;
    let doc = json!({
        "status": status(ok, "feasible", "infeasible"),
        "target": if target.is_some() { "fixed" } else { "free" },
        "cost": cost,
        "feasibility": feasibility_doc(&report),
    });
    Ok(Outcome { doc, ok })
}

fn solved_plan(family: &MeasureFamily, target: Option<DiscreteMeasure>, s: &Settings) -> Result<(TransportPlan, &'static str)> {
    Ok(match target {
        Some(t) => {
            let inst = SotInstance::new(family.clone(), t, CostSpec::SquaredEuclidean, &s.tol)?;
            (solve_fixed(&inst, &s.tol)?.plan, "solve-fixed")
        }
        None => (solve_free(family, &s.limits(), &s.tol)?.plan, "solve-free"),
    })
}

pub fn oracle_cmd(problem: &ProblemFile, path: &Path, s: &Settings) -> Result<Outcome> {
    squared_only(problem, "oracle")?;
    let family = problem.family(path, &s.tol)?;
    let target = problem.target(&s.tol)?;
    let (plan, source) = match &problem.plan {
        Some(p) => (p.load(problem, &family, path)?.plan, "file"),
        None => solved_plan(&family, target, s)?,
    };
    let sampler = SamplerOptions {
        samples: s.samples,
        support_size: s.support_size,
        seed: s.seed,
    };
    let reports = check_c_monotone(&plan, &family, &CostSpec::SquaredEuclidean, &sampler, &s.tol)?;
    let failures = reports.iter().filter(|r| !r.pass).count();
    let regions = family.constancy_regions(&s.tol);
    let cyclic = check_cyclic_monotonicity(&plan, &regions, s.max_cycle, &s.tol)?;
    let potentials: Vec<Value> = regions
        .iter()
        .enumerate()
        .map(|(i, region)| {
            let pairs = region_pairs(&plan, region, &s.tol);
            let outcome = recover_potential(&pairs, &s.tol);
            json!({
                "region": i,
                "pairs": pairs.len(),
                "feasible": outcome.is_feasible(),
                "outcome": match outcome {
                    PotentialOutcome::Feasible(phi) => json!({ "phi": phi }),
                    PotentialOutcome::Infeasible { cycle } => json!({ "cycle": cycle }),
                },
            })
        })
        .collect();
    let potentials_ok = potentials.iter().all(|p| p["feasible"] == Value::Bool(true));
    let ok = failures == 0 && cyclic.is_monotone() && potentials_ok;
    let original = family.original_index();
    let doc = json!({
        "status": status(ok, "pass", "violation"),
        "plan_source": source,
        "cost": plan_cost(&plan, &CostSpec::SquaredEuclidean)?,
        "plan": plan_doc(&plan, &family),
        "regions": regions.iter().map(|r| r.iter().map(|&k| original[k]).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "competitor": {
            "seed": s.seed,
            "samples": reports.len(),
            "support_size": s.support_size,
            "failures": failures,
            "reports": reports,
        },
        "cyclic": {
            "max_cycle": s.max_cycle,
            "cycles_checked": cyclic.cycles_checked,
            "total_violations": cyclic.total_violations,
            "violations": cyclic.violations,
        },
        "potentials": potentials,
    });
    Ok(Outcome { doc, ok })
}
