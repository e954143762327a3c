use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sot_core::measure::{build_family, check_plan, DiscreteMeasure, Target, TransportPlan};
use sot_core::Tolerances;
use tempfile::TempDir;

fn problems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

/// Runs `sot` and returns `(exit code, stdout)`.
fn sot(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sot")).args(args).output().expect("sot runs");
    (out.status.code().expect("exit code"), String::from_utf8(out.stdout).expect("utf-8 output"))
}

fn sot_json(args: &[&str]) -> (i32, Value) {
    let (code, out) = sot(args);
    (code, serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out}")))
}

fn problem(name: &str) -> String {
    problems().join(name).to_string_lossy().into_owned()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    v.as_array().unwrap().iter().map(|r| r.as_array().unwrap().iter().map(num).collect()).collect()
}

fn write_json(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn canonical_fixed_target() {
    let (code, doc) = sot_json(&["solve-fixed", &problem("canonical_fixed.json")]);
    assert_eq!(code, 0);
    assert_eq!(doc["status"], "optimal");
    assert!((num(&doc["cost"]) - 0.25).abs() < 1e-12);
    assert_eq!(matrix(&doc["plan"]["matrix"]), [[0.5], [0.5]]);
}

#[test]
fn canonical_exact_cost() {
    let (code, doc) = sot_json(&["solve-fixed", "--exact", &problem("canonical_fixed.json")]);
    assert_eq!(code, 0);
    assert_eq!(doc["exact"]["cost"], "1/4");
    assert_eq!(doc["exact"]["dual_objective"], "1/4");
}

#[test]
fn broken_plan_is_reported() {
    let (code, doc) = sot_json(&["verify", &problem("broken_plan.json")]);
    assert_eq!(code, 1);
    assert_eq!(doc["status"], "infeasible");
    assert_eq!(num(&doc["feasibility"]["mixing_residual"]), 0.5);
}

#[test]
fn lebesgue_map_is_the_identity() {
    let (code, doc) = sot_json(&["lyapunov-map", &problem("lebesgue.json")]);
    assert_eq!(code, 0);
    assert_eq!(matrix(&doc["map"]["table"]), [[0.0, 0.0], [1.0, 1.0]]);
}

#[test]
fn free_target_with_audit() {
    let (code, doc) = sot_json(&["solve-free", "--audit", &problem("canonical_free.json")]);
    assert_eq!(code, 0);
    assert_eq!(matrix(&doc["target"]["points"]), [[0.5]]);
    assert_eq!(doc["audit"]["agrees"], true);
}

#[test]
fn other_subcommands_succeed() {
    for (cmd, file) in [
        ("solve-1d", "mixed_line.json"),
        ("oracle", "mixed_line.json"),
        ("oracle", "canonical_free.json"),
        ("monge-approx", "interleaved_monge.json"),
        ("lyapunov-map", "half_interval.json"),
    ] {
        let (code, doc) = sot_json(&[cmd, &problem(file)]);
        assert_eq!(code, 0, "{cmd} {file}: {doc}");
    }
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let malformed = dir.path().join("malformed.json");
    fs::write(&malformed, "{ \"points\": [[0], ").unwrap();
    let unknown = write_json(dir.path(), "unknown.json", &json!({ "points": [[0]], "measure": [[1]] }));
    let not_probability = write_json(
        dir.path(),
        "mass.json",
        &json!({ "points": [[0], [1]], "measures": [[0.5, 0.4]], "target": { "points": [[0]], "weights": [1] } }),
    );
    for args in [
        vec!["solve-fixed", malformed.to_str().unwrap()],
        vec!["solve-fixed", &unknown],
        vec!["solve-fixed", &not_probability],
        vec!["solve-free", "--tol", "nonsense=1", &problem("canonical_free.json")],
        vec!["solve-free", "--exact", &problem("canonical_free.json")],
        vec!["no-such-command"],
    ] {
        let (code, out) = sot(&args);
        assert_eq!(code, 2, "{args:?}: {out}");
    }
    let (_, doc) = sot_json(&["solve-fixed", &not_probability]);
    assert_eq!(doc["error"]["kind"], "NonProbability");
}

#[test]
fn plot_tables_have_two_columns() {
    let dir = TempDir::new().unwrap();
    let plots = dir.path().join("plots");
    let (code, doc) = sot_json(&["monge-approx", &problem("interleaved_monge.json"), "--plot-dir", plots.to_str().unwrap()]);
    assert_eq!(code, 0);
    let files = doc["plots"].as_array().unwrap();
    assert!(files.len() >= 4);
    for f in files {
        let text = fs::read_to_string(plots.join(f.as_str().unwrap())).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("coordinate,value"));
        for line in lines {
            let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(cols.len(), 2);
        }
    }
}

/// Random family with one point carrying no mass, so a row gets dropped.
fn random_problem(seed: u64, with_target: bool) -> Value {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.gen_range(1..=2);
    let m = rng.gen_range(2..=6);
    let n = rng.gen_range(1..=3);
    let point = |rng: &mut ChaCha8Rng| (0..d).map(|_| rng.gen::<f64>()).collect::<Vec<f64>>();
    let mut points: Vec<Vec<f64>> = (0..m).map(|_| point(&mut rng)).collect();
    points.push(point(&mut rng));
    let measures: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut w: Vec<f64> = raw.iter().map(|v| v / total).collect();
            w.push(0.0);
            w
        })
        .collect();
    let mut doc = json!({ "dimension": d, "points": points, "measures": measures });
    if with_target {
        let l = rng.gen_range(1..=4);
        let target: Vec<Vec<f64>> = (0..l).map(|_| point(&mut rng)).collect();
        doc["target"] = json!({ "points": target, "weights": vec![1.0 / l as f64; l] });
    }
    doc
}

fn residuals(report: &Value) -> [f64; 3] {
    let col = &report["column_error"];
    [
        num(&report["row_error"]),
        if col.is_null() { 0.0 } else { num(col) },
        num(&report["mixing_residual"]),
    ]
}

#[test]
fn written_plans_reread_with_identical_residuals() {
    let dir = TempDir::new().unwrap();
    let tol = Tolerances::default();
    for seed in 0..12u64 {
        let fixed = seed % 2 == 0;
        let mut input = random_problem(seed, fixed);
        let file = write_json(dir.path(), &format!("p{seed}.json"), &input);
        let cmd = if fixed { "solve-fixed" } else { "solve-free" };
        let (code, result) = sot_json(&[cmd, &file]);
        assert_eq!(code, 0, "{result}");
        assert_eq!(result["dropped"], json!([input["points"].as_array().unwrap().len() - 1]));

        // through the binary
        input["plan"] = result["plan"].clone();
        let with_plan = write_json(dir.path(), &format!("v{seed}.json"), &input);
        let (code, verified) = sot_json(&["verify", &with_plan]);
        assert_eq!(code, 0, "{verified}");
        let before = residuals(&result["feasibility"]);
        let after = residuals(&verified["feasibility"]);
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() <= 1e-12, "{before:?} vs {after:?}");
        }

        // and in process, from the written numbers
        let plan = TransportPlan::new(
            matrix(&result["plan"]["source"]),
            matrix(&result["plan"]["target"]),
            matrix(&result["plan"]["matrix"]),
        )
        .unwrap();
        let all_points = matrix(&input["points"]);
        let measures = matrix(&input["measures"]);
        let family = build_family(all_points, measures, &tol).unwrap();
        let target = if fixed {
            let t = &input["target"];
            Some(DiscreteMeasure::probability(matrix(&t["points"]), t["weights"].as_array().unwrap().iter().map(num).collect(), &tol).unwrap())
        } else {
            None
        };
        let spec = target.as_ref().map_or(Target::Free, Target::Fixed);
        let report = check_plan(&plan, &family, spec, &tol).unwrap();
        let direct = [report.row_error, report.column_error.unwrap_or(0.0), report.mixing_residual];
        for (a, b) in before.iter().zip(&direct) {
            assert!((a - b).abs() <= 1e-12, "{before:?} vs {direct:?}");
        }
    }
}

#[test]
fn outputs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let random = write_json(dir.path(), "random.json", &random_problem(99, true));
    let cases: Vec<Vec<&str>> = vec![
        vec!["solve-fixed", &random],
        vec!["solve-free", "--audit", &random],
        vec!["oracle", "--seed", "7", &random],
        vec!["monge-approx", "--grid", "16"],
        vec!["solve-1d"],
    ];
    let monge = problem("interleaved_monge.json");
    let line = problem("mixed_line.json");
    for (i, mut args) in cases.into_iter().enumerate() {
        match i {
            3 => args.push(&monge),
            4 => args.push(&line),
            _ => {}
        }
        let outputs: Vec<Vec<u8>> = [None, Some("1"), Some("3"), None]
            .iter()
            .enumerate()
            .map(|(run, threads)| {
                let out = dir.path().join(format!("out{i}_{run}.json"));
                let mut full = args.clone();
                full.extend(["--output", out.to_str().unwrap()]);
                if let Some(t) = threads {
                    full.extend(["--threads", t]);
                }
                let (code, _) = sot(&full);
                assert!(code <= 1, "{full:?}");
                fs::read(&out).unwrap()
            })
            .collect();
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{args:?}");
    }
}

#[test]
fn numbers_keep_seventeen_digits() {
    let (_, out) = sot(&["solve-1d", &problem("mixed_line.json")]);
    let doc: Value = serde_json::from_str(&out).unwrap();
    let cost = doc["cost"].to_string();
    let digits = cost.split(['e', 'E']).next().unwrap().chars().filter(char::is_ascii_digit).count();
    assert_eq!(digits, 17, "{cost}");
}
