//! Discrete measures, measure families over a shared support, and transport
//! plans together with the feasibility and cost primitives every solver uses.

use log::warn;
use serde::Serialize;

use crate::error::{Result, SotError};
use crate::tolerances::Tolerances;

/// A point in ℝ^d.
pub type Point = Vec<f64>;

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check_points(points: &[Point], tol: &Tolerances) -> Result<usize> {
    let dim = points.first().map_or(0, Vec::len);
    for (k, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(SotError::DimensionMismatch(format!(
                "point {k} has dimension {}, expected {dim}",
                p.len()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(SotError::InvalidInput(format!("point {k} is not finite")));
        }
    }
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            if max_dist(&points[a], &points[b]) <= tol.geom {
                return Err(SotError::InvalidInput(format!(
                    "points {a} and {b} coincide"
                )));
            }
        }
    }
    Ok(dim)
}

/// Finitely supported nonnegative measure on ℝ^d with distinct atoms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Point>, weights: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(SotError::DimensionMismatch(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        check_points(&points, tol)?;
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(SotError::NonProbability {
                index: 0,
                reason: format!("weight {w} is negative or not finite"),
            });
        }
        Ok(Self { points, weights })
    }

    /// Like [`DiscreteMeasure::new`] but also requires total mass 1 within `tol.mass`.
    pub fn probability(points: Vec<Point>, weights: Vec<f64>, tol: &Tolerances) -> Result<Self> {
        let measure = Self::new(points, weights, tol)?;
        let mass = measure.total_mass();
        if (mass - 1.0).abs() > tol.mass {
            return Err(SotError::NonProbability {
                index: 0,
                reason: format!("total mass {mass}"),
            });
        }
        Ok(measure)
    }

    pub fn dirac(point: Point) -> Self {
        Self {
            points: vec![point],
            weights: vec![1.0],
        }
    }

    pub fn uniform(points: Vec<Point>, tol: &Tolerances) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        let weights = vec![w; points.len()];
        Self::new(points, weights, tol)
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_parts(points: Vec<Point>, weights: Vec<f64>) -> Self {
        Self { points, weights }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `n` probability measures on a shared finite support, with the mean
/// measure `μ = (μ_1 + … + μ_n)/n` and the density ratios `r_i = μ_i/μ`.
///
/// Support points where `μ` vanishes are dropped at construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureFamily {
    support: Vec<Point>,
    measures: Vec<Vec<f64>>,
    mean: Vec<f64>,
    ratios: Vec<Vec<f64>>,
    /// Original indices of dropped support points.
    dropped: Vec<usize>,
    /// Original index of each retained support point.
    original_index: Vec<usize>,
}

/// Validates the inputs and builds the family.
pub fn build_family(
    points: Vec<Point>,
    weight_vectors: Vec<Vec<f64>>,
    tol: &Tolerances,
) -> Result<MeasureFamily> {
    let m = points.len();
    if m == 0 {
        return Err(SotError::EmptySupport);
    }
    if weight_vectors.is_empty() {
        return Err(SotError::InvalidInput("no measures given".into()));
    }
    check_points(&points, tol)?;
    for (i, w) in weight_vectors.iter().enumerate() {
        if w.len() != m {
            return Err(SotError::DimensionMismatch(format!(
                "measure {i} has {} weights for {m} support points",
                w.len()
            )));
        }
        if let Some(v) = w.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(SotError::NonProbability {
                index: i,
                reason: format!("weight {v} is negative or not finite"),
            });
        }
        let mass: f64 = w.iter().sum();
        if (mass - 1.0).abs() > tol.mass {
            return Err(SotError::NonProbability {
                index: i,
                reason: format!("total mass {mass}"),
            });
        }
    }
    let n = weight_vectors.len();
    let mut keep = Vec::with_capacity(m);
    let mut dropped = Vec::new();
    for k in 0..m {
        let mean = weight_vectors.iter().map(|w| w[k]).sum::<f64>() / n as f64;
        if mean > 0.0 {
            keep.push(k);
        } else {
            dropped.push(k);
        }
    }
    if keep.is_empty() {
        return Err(SotError::EmptySupport);
    }
    if !dropped.is_empty() {
        warn!("dropped {} support point(s) with zero mean mass: {dropped:?}", dropped.len());
    }
    let support: Vec<Point> = keep.iter().map(|&k| points[k].clone()).collect();
    let measures: Vec<Vec<f64>> = weight_vectors
        .iter()
        .map(|w| keep.iter().map(|&k| w[k]).collect())
        .collect();
    let mean: Vec<f64> = (0..keep.len())
        .map(|k| measures.iter().map(|w| w[k]).sum::<f64>() / n as f64)
        .collect();
    let ratios = measures
        .iter()
        .map(|w| w.iter().zip(&mean).map(|(a, b)| a / b).collect())
        .collect();
    Ok(MeasureFamily {
        support,
        measures,
        mean,
        ratios,
        dropped,
        original_index: keep,
    })
}

impl MeasureFamily {
    /// Number of measures.
    pub fn n(&self) -> usize {
        self.measures.len()
    }

    /// Number of retained support points.
    pub fn m(&self) -> usize {
        self.support.len()
    }

    pub fn dim(&self) -> usize {
        self.support[0].len()
    }

    pub fn support(&self) -> &[Point] {
        &self.support
    }

    pub fn measures(&self) -> &[Vec<f64>] {
        &self.measures
    }

    pub fn mean_weights(&self) -> &[f64] {
        &self.mean
    }

    /// `ratios()[i][k] = μ_i^k / μ^k`.
    pub fn ratios(&self) -> &[Vec<f64>] {
        &self.ratios
    }

    pub fn dropped(&self) -> &[usize] {
        &self.dropped
    }

    pub fn original_index(&self) -> &[usize] {
        &self.original_index
    }

    pub fn mean_measure(&self) -> DiscreteMeasure {
        DiscreteMeasure::from_parts(self.support.clone(), self.mean.clone())
    }

    /// Ratio vector `(r_1^k, …, r_n^k)` of support point `k`.
    pub fn ratio_vector(&self, k: usize) -> Vec<f64> {
        self.ratios.iter().map(|r| r[k]).collect()
    }

    /// Keeps only the measures at `indices` (in that order).
    pub fn subfamily(&self, indices: &[usize], tol: &Tolerances) -> Result<MeasureFamily> {
        let weights = indices
            .iter()
            .map(|&i| {
                self.measures.get(i).cloned().ok_or_else(|| {
                    SotError::InvalidInput(format!("measure index {i} out of range"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        build_family(self.support.clone(), weights, tol)
    }

    /// Partition of the support into maximal groups whose ratio vectors agree
    /// within `tol.geom`, ordered by first member.
    pub fn constancy_regions(&self, tol: &Tolerances) -> Vec<Vec<usize>> {
        let mut regions: Vec<Vec<usize>> = Vec::new();
        'points: for k in 0..self.m() {
            let rk = self.ratio_vector(k);
            for region in regions.iter_mut() {
                if max_dist(&self.ratio_vector(region[0]), &rk) <= tol.geom {
                    region.push(k);
                    continue 'points;
                }
            }
            regions.push(vec![k]);
        }
        regions
    }
}

/// Nonnegative source × target mass matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportPlan {
    source: Vec<Point>,
    target: Vec<Point>,
    /// Row-major `source.len() × target.len()`.
    matrix: Vec<f64>,
    cost: Option<f64>,
}

impl TransportPlan {
    pub fn new(source: Vec<Point>, target: Vec<Point>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        if matrix.len() != source.len() {
            return Err(SotError::DimensionMismatch(format!(
                "plan has {} rows for {} source points",
                matrix.len(),
                source.len()
            )));
        }
        let l = target.len();
        let mut flat = Vec::with_capacity(source.len() * l);
        for (k, row) in matrix.into_iter().enumerate() {
            if row.len() != l {
                return Err(SotError::DimensionMismatch(format!(
                    "plan row {k} has {} entries for {l} target points",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(SotError::InvalidInput(format!("plan row {k} is not finite")));
            }
            flat.extend(row);
        }
        Ok(Self::from_flat(source, target, flat))
    }

    pub(crate) fn from_flat(source: Vec<Point>, target: Vec<Point>, matrix: Vec<f64>) -> Self {
        debug_assert_eq!(matrix.len(), source.len() * target.len());
        Self {
            source,
            target,
            matrix,
            cost: None,
        }
    }

    /// The independent coupling `π_kj = μ^k ν^j`.
    pub fn product(source: &DiscreteMeasure, target: &DiscreteMeasure) -> Self {
        let matrix = source
            .weights()
            .iter()
            .flat_map(|a| target.weights().iter().map(move |b| a * b))
            .collect();
        Self::from_flat(source.points().to_vec(), target.points().to_vec(), matrix)
    }

    pub fn with_cost(mut self, cost: f64) -> Self {
        self.cost = Some(cost);
        self
    }

    pub fn cost(&self) -> Option<f64> {
        self.cost
    }

    pub fn source(&self) -> &[Point] {
        &self.source
    }

    pub fn target(&self) -> &[Point] {
        &self.target
    }

    pub fn rows(&self) -> usize {
        self.source.len()
    }

    pub fn cols(&self) -> usize {
        self.target.len()
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.matrix[k * self.cols() + j]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let l = self.cols();
        &self.matrix[k * l..(k + 1) * l]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows()).map(|k| self.get(k, j)).collect()
    }

    pub fn matrix_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows()).map(|k| self.row(k).to_vec()).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows()).map(|k| self.row(k).iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols()];
        for k in 0..self.rows() {
            for (s, v) in sums.iter_mut().zip(self.row(k)) {
                *s += v;
            }
        }
        sums
    }

    pub fn total_mass(&self) -> f64 {
        self.matrix.iter().sum()
    }

    /// Entries `(k, j, π_kj)` with `π_kj > threshold`, row-major.
    pub fn support_entries(&self, threshold: f64) -> Vec<(usize, usize, f64)> {
        let l = self.cols();
        self.matrix
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > threshold)
            .map(|(idx, v)| (idx / l, idx % l, *v))
            .collect()
    }

    /// `aπ_1 + (1−a)π_2` for plans on identical supports.
    pub fn blend(&self, other: &TransportPlan, a: f64) -> Result<TransportPlan> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(SotError::DimensionMismatch("plans of different shape".into()));
        }
        let matrix = self
            .matrix
            .iter()
            .zip(&other.matrix)
            .map(|(p, q)| a * p + (1.0 - a) * q)
            .collect();
        Ok(Self::from_flat(self.source.clone(), self.target.clone(), matrix))
    }
}

/// Target marginal for feasibility checks.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    Fixed(&'a DiscreteMeasure),
    /// The target marginal is a decision variable; only source marginals and
    /// mixing constraints are checked.
    Free,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub row_error: f64,
    /// `None` when the target is free.
    pub column_error: Option<f64>,
    /// `max_{i,j} |Σ_k π_kj (r_i^k − 1)|`, unnormalized by column mass.
    pub mixing_residual: f64,
    /// Smallest plan entry (negative entries make a plan infeasible).
    pub min_entry: f64,
    pub feasible: bool,
    /// Column sums, reported when the target is free.
    pub induced_target: Option<DiscreteMeasure>,
}

pub fn check_plan(
    plan: &TransportPlan,
    family: &MeasureFamily,
    target: Target<'_>,
    tol: &Tolerances,
) -> Result<FeasibilityReport> {
    if plan.rows() != family.m() {
        return Err(SotError::DimensionMismatch(format!(
            "plan has {} rows, family support has {} points",
            plan.rows(),
            family.m()
        )));
    }
    if plan.source().iter().any(|p| p.len() != family.dim()) {
        return Err(SotError::DimensionMismatch(
            "plan source points have the wrong dimension".into(),
        ));
    }
    if let Target::Fixed(nu) = target {
        if plan.cols() != nu.len() {
            return Err(SotError::DimensionMismatch(format!(
                "plan has {} columns, target has {} points",
                plan.cols(),
                nu.len()
            )));
        }
    }
    let row_error = plan
        .row_sums()
        .iter()
        .zip(family.mean_weights())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let col_sums = plan.column_sums();
    let column_error = match target {
        Target::Fixed(nu) => Some(
            col_sums
                .iter()
                .zip(nu.weights())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        ),
        Target::Free => None,
    };
    let mut mixing_residual: f64 = 0.0;
    for ratio in family.ratios() {
        for j in 0..plan.cols() {
            let r: f64 = (0..plan.rows())
                .map(|k| plan.get(k, j) * (ratio[k] - 1.0))
                .sum();
            mixing_residual = mixing_residual.max(r.abs());
        }
    }
    let min_entry = plan.matrix.iter().copied().fold(f64::INFINITY, f64::min);
    let feasible = row_error <= tol.feas
        && column_error.map_or(true, |e| e <= tol.feas)
        && mixing_residual <= tol.feas
        && min_entry >= -tol.feas;
    let induced_target = match target {
        Target::Free => Some(DiscreteMeasure::from_parts(plan.target().to_vec(), col_sums)),
        Target::Fixed(_) => None,
    };
    Ok(FeasibilityReport {
        row_error,
        column_error,
        mixing_residual,
        min_entry,
        feasible,
        induced_target,
    })
}

/// Transport cost `c(x, y)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub enum CostSpec {
    /// `‖x − y‖²`
    #[default]
    SquaredEuclidean,
    /// Explicit `source × target` matrix.
    Matrix(Vec<Vec<f64>>),
}

impl CostSpec {
    /// Row-major cost matrix for the given supports.
    pub fn matrix(&self, source: &[Point], target: &[Point]) -> Result<Vec<f64>> {
        match self {
            CostSpec::SquaredEuclidean => Ok(source
                .iter()
                .flat_map(|x| target.iter().map(move |y| sq_dist(x, y)))
                .collect()),
            CostSpec::Matrix(rows) => {
                if rows.len() != source.len() || rows.iter().any(|r| r.len() != target.len()) {
                    return Err(SotError::DimensionMismatch(format!(
                        "cost matrix must be {} × {}",
                        source.len(),
                        target.len()
                    )));
                }
                Ok(rows.iter().flatten().copied().collect())
            }
        }
    }

    pub fn is_squared_euclidean(&self) -> bool {
        matches!(self, CostSpec::SquaredEuclidean)
    }
}

/// `Σ_{k,j} π_kj c_kj`.
pub fn plan_cost(plan: &TransportPlan, cost: &CostSpec) -> Result<f64> {
    let c = cost.matrix(plan.source(), plan.target())?;
    Ok(plan.matrix.iter().zip(&c).map(|(p, c)| p * c).sum())
}

/// Column `j` normalized to a probability over the source points (`π^{y_j}`).
pub fn conditional_on_target(plan: &TransportPlan, j: usize) -> Result<DiscreteMeasure> {
    if j >= plan.cols() {
        return Err(SotError::DimensionMismatch(format!("no column {j}")));
    }
    let column = plan.column(j);
    let mass: f64 = column.iter().sum();
    if mass <= 0.0 {
        return Err(SotError::ZeroColumn(j));
    }
    Ok(DiscreteMeasure::from_parts(
        plan.source().to_vec(),
        column.iter().map(|v| v / mass).collect(),
    ))
}

/// `(y_j, g(y_j))` with `g(y) = ∫ x dπ^y`, over nonempty columns. Sorted by
/// target coordinate when the target is one-dimensional.
pub fn barycentric_function(plan: &TransportPlan) -> Vec<(Point, Point)> {
    let dim = plan.source().first().map_or(0, Vec::len);
    let mut out: Vec<(Point, Point)> = (0..plan.cols())
        .filter_map(|j| {
            let column = plan.column(j);
            let mass: f64 = column.iter().sum();
            if mass <= 0.0 {
                return None;
            }
            let mut g = vec![0.0; dim];
            for (x, w) in plan.source().iter().zip(&column) {
                for (gc, xc) in g.iter_mut().zip(x) {
                    *gc += w * xc;
                }
            }
            g.iter_mut().for_each(|v| *v /= mass);
            Some((plan.target()[j].clone(), g))
        })
        .collect();
    if plan.target().first().map_or(0, Vec::len) == 1 {
        out.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]));
    }
    out
}
