//! Problem files, result documents and plot tables.
//!
//! Problems and results are JSON. Every non-integer number in a result is
//! written with 17 significant digits, so re-reading it gives the same `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{Number, Value};
use sot_core::line1d::PiecewiseConstantDensity;
use sot_core::measure::{
    build_family, CostSpec, DiscreteMeasure, FeasibilityReport, MeasureFamily, Point, TransportPlan,
};
use sot_core::Tolerances;
use sot_lp::{parse_decimal, Rational};

use crate::error::{CliError, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    /// Checked against every point when present.
    pub dimension: Option<usize>,
    #[serde(default)]
    pub points: Vec<Vec<Number>>,
    /// One weight vector per source measure, indexed like `points`.
    #[serde(default)]
    pub measures: Vec<Vec<Number>>,
    pub target: Option<MeasureDoc>,
    /// Explicit `points × target` cost matrix; squared Euclidean otherwise.
    pub cost: Option<Vec<Vec<Number>>>,
    pub plan: Option<PlanDoc>,
    /// Source densities for monge-approx.
    pub densities: Option<Vec<DensityDoc>>,
    /// Target density for lyapunov-map and monge-approx.
    pub target_density: Option<DensityDoc>,
    #[serde(default)]
    pub options: FileOptions,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureDoc {
    pub points: Vec<Vec<Number>>,
    pub weights: Vec<Number>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDoc {
    /// Original indices of the rows into `points`; all points in order when omitted.
    pub rows: Option<Vec<usize>>,
    /// Source points of the rows; checked against `points` when present.
    pub source: Option<Vec<Vec<f64>>>,
    /// Target points of the columns; the problem's target when omitted.
    pub target: Option<Vec<Vec<f64>>>,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityDoc {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileOptions {
    #[serde(default)]
    pub tolerances: Tolerances,
    pub exact: Option<bool>,
    pub grid: Option<usize>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub max_subset_size: Option<usize>,
    pub audit: Option<bool>,
    /// Competitor samples for the oracle.
    pub samples: Option<usize>,
    pub support_size: Option<usize>,
    pub max_cycle: Option<usize>,
    /// CDF samples for pushforward checks.
    pub resolution: Option<usize>,
}

pub fn read_problem(path: &Path) -> Result<ProblemFile> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn parse_error(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn float(n: &Number) -> f64 {
    n.as_f64().unwrap_or(f64::NAN)
}

pub fn floats(v: &[Number]) -> Vec<f64> {
    v.iter().map(float).collect()
}

pub fn exact(n: &Number, path: &Path) -> Result<Rational> {
    let text = n.to_string();
    parse_decimal(&text).ok_or_else(|| parse_error(path, format!("{text} is not a decimal number")))
}

pub fn exact_vec(v: &[Number], path: &Path) -> Result<Vec<Rational>> {
    v.iter().map(|n| exact(n, path)).collect()
}

impl ProblemFile {
    /// Support points, checked against `dimension`.
    pub fn support(&self, path: &Path) -> Result<Vec<Point>> {
        if self.points.is_empty() {
            return Err(parse_error(path, "`points` is missing or empty"));
        }
        let points: Vec<Point> = self.points.iter().map(|p| floats(p)).collect();
        let d = self.dimension.unwrap_or(points[0].len());
        if let Some(bad) = points.iter().position(|p| p.len() != d) {
            return Err(parse_error(path, format!("point {bad} does not have dimension {d}")));
        }
        Ok(points)
    }

    pub fn family(&self, path: &Path, tol: &Tolerances) -> Result<MeasureFamily> {
        if self.measures.is_empty() {
            return Err(parse_error(path, "`measures` is missing or empty"));
        }
        let weights = self.measures.iter().map(|w| floats(w)).collect();
        Ok(build_family(self.support(path)?, weights, tol)?)
    }

    pub fn target(&self, tol: &Tolerances) -> Result<Option<DiscreteMeasure>> {
        let Some(t) = &self.target else { return Ok(None) };
        let points = t.points.iter().map(|p| floats(p)).collect();
        Ok(Some(DiscreteMeasure::probability(points, floats(&t.weights), tol)?))
    }

    /// Cost rows restricted to the retained support points.
    pub fn cost(&self, family: &MeasureFamily, cols: usize) -> Result<CostSpec> {
        let Some(rows) = &self.cost else { return Ok(CostSpec::SquaredEuclidean) };
        let m = self.points.len();
        if rows.len() != m || rows.iter().any(|r| r.len() != cols) {
            return Err(CliError::Usage(format!("cost matrix must be {m} × {cols}")));
        }
        let kept = family.original_index().iter().map(|&k| floats(&rows[k])).collect();
        Ok(CostSpec::Matrix(kept))
    }

    pub fn density(doc: &DensityDoc) -> Result<PiecewiseConstantDensity> {
        Ok(PiecewiseConstantDensity::new(doc.breakpoints.clone(), doc.values.clone())?)
    }
}

/// A plan read against a family: rows on the retained support, plus the
/// largest mass found on rows whose points were dropped.
pub struct LoadedPlan {
    pub plan: TransportPlan,
    pub dropped_mass: f64,
}

impl PlanDoc {
    pub fn load(
        &self,
        problem: &ProblemFile,
        family: &MeasureFamily,
        path: &Path,
    ) -> Result<LoadedPlan> {
        let m = problem.points.len();
        let rows: Vec<usize> = self.rows.clone().unwrap_or_else(|| (0..m).collect());
        if rows.len() != self.matrix.len() {
            return Err(parse_error(path, "plan `rows` and `matrix` differ in length"));
        }
        if let Some(bad) = rows.iter().find(|&&k| k >= m) {
            return Err(parse_error(path, format!("plan row index {bad} is out of range")));
        }
        if let Some(source) = &self.source {
            let points = problem.support(path)?;
            let matches = source.len() == rows.len()
                && source.iter().zip(&rows).all(|(x, &k)| {
                    x.len() == points[k].len() && x.iter().zip(&points[k]).all(|(a, b)| (a - b).abs() <= 1e-12)
                });
            if !matches {
                return Err(parse_error(path, "plan `source` does not match `points`"));
            }
        }
        let target: Vec<Point> = match (&self.target, &problem.target) {
            (Some(t), _) => t.clone(),
            (None, Some(t)) => t.points.iter().map(|p| floats(p)).collect(),
            (None, None) => return Err(parse_error(path, "plan has no target points")),
        };
        let l = target.len();
        if let Some(bad) = self.matrix.iter().position(|r| r.len() != l) {
            return Err(parse_error(path, format!("plan row {bad} does not have {l} entries")));
        }
        let mut by_original = vec![None; m];
        for (r, &k) in rows.iter().enumerate() {
            if by_original[k].replace(r).is_some() {
                return Err(parse_error(path, format!("plan row index {k} appears twice")));
            }
        }
        let kept = family.original_index();
        let matrix = kept
            .iter()
            .map(|&k| by_original[k].map_or_else(|| vec![0.0; l], |r| self.matrix[r].clone()))
            .collect();
        let dropped_mass = rows
            .iter()
            .zip(&self.matrix)
            .filter(|(k, _)| !kept.contains(k))
            .map(|(_, row)| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let plan = TransportPlan::new(family.support().to_vec(), target, matrix)?;
        Ok(LoadedPlan { plan, dropped_mass })
    }
}

/// Applies `name=value` overrides through the serde representation.
pub fn override_tolerances(tol: &mut Tolerances, overrides: &[String]) -> Result<()> {
    let mut value = serde_json::to_value(*tol).expect("tolerances serialize");
    for item in overrides {
        let (name, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--tol expects NAME=VALUE, got `{item}`")))?;
        let number: f64 = raw
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("--tol {name}: `{raw}` is not a number")))?;
        let slot = value
            .get_mut(name.trim())
            .ok_or_else(|| CliError::Usage(format!("unknown tolerance `{name}`")))?;
        *slot = Value::from(number);
    }
    *tol = serde_json::from_value(value).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(())
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Rewrites every non-integer number with 17 significant digits.
pub fn normalize(value: &mut Value) {
    match value {
        Value::Number(n) => {
            let text = n.to_string();
            if text.contains(['.', 'e', 'E']) {
                if let Some(x) = n.as_f64() {
                    *n = fmt_f64(x).parse().expect("formatted f64 is a JSON number");
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(normalize),
        Value::Object(map) => map.values_mut().for_each(normalize),
        _ => {}
    }
}

pub fn render(mut doc: Value) -> String {
    normalize(&mut doc);
    let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
    text.push('\n');
    text
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Two-column CSV tables written under a plot directory.
pub struct PlotSink {
    dir: Option<PathBuf>,
    pub written: Vec<String>,
}

impl PlotSink {
    pub fn new(dir: Option<PathBuf>) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|source| CliError::Io {
                path: d.clone(),
                source,
            })?;
        }
        Ok(Self {
            dir,
            written: Vec::new(),
        })
    }

    pub fn enabled(&self) -> bool {
        self.dir.is_some()
    }

    pub fn table(&mut self, name: &str, rows: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let mut text = String::from("coordinate,value\n");
        for (x, y) in rows {
            text.push_str(&fmt_f64(x));
            text.push(',');
            text.push_str(&fmt_f64(y));
            text.push('\n');
        }
        let file = format!("{name}.csv");
        write_text(&dir.join(&file), &text)?;
        self.written.push(file);
        Ok(())
    }
}

pub fn measure_doc(m: &DiscreteMeasure) -> Value {
    serde_json::json!({ "points": m.points(), "weights": m.weights() })
}

/// Plan rows carry the original indices of their support points.
pub fn plan_doc(plan: &TransportPlan, family: &MeasureFamily) -> Value {
    serde_json::json!({
        "rows": family.original_index(),
        "source": plan.source(),
        "target": plan.target(),
        "matrix": plan.matrix_rows(),
    })
}

pub fn feasibility_doc(report: &FeasibilityReport) -> Value {
    let mut doc = serde_json::json!({
        "feasible": report.feasible,
        "row_error": report.row_error,
        "column_error": report.column_error,
        "mixing_residual": report.mixing_residual,
        "min_entry": report.min_entry,
    });
    if let Some(t) = &report.induced_target {
        doc["induced_target"] = measure_doc(t);
    }
    doc
}
