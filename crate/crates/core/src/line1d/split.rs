use serde::Serialize;

use super::density::{merge_breakpoints, PiecewiseConstantDensity};
use crate::error::{Result, SotError};

/// Piecewise constant function with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() + 1 || values.is_empty() {
            return Err(SotError::DimensionMismatch(format!(
                "{} breakpoints for {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SotError::InvalidInput(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(SotError::BadRange(*v));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn constant(lo: f64, hi: f64, value: f64) -> Result<Self> {
        Self::new(vec![lo, hi], vec![value])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `x`, zero outside the domain.
    pub fn value_at(&self, x: f64) -> f64 {
        if x < self.breakpoints[0] || x > *self.breakpoints.last().unwrap() {
            return 0.0;
        }
        let idx = self.breakpoints.partition_point(|b| *b <= x);
        self.values[idx.saturating_sub(1).min(self.values.len() - 1)]
    }

    /// `∫ g dρ`.
    pub fn integral(&self, density: &PiecewiseConstantDensity) -> f64 {
        let bp = merge_breakpoints(
            &[&self.breakpoints, density.breakpoints()],
            (
                self.breakpoints[0].min(density.domain().0),
                self.breakpoints.last().unwrap().max(density.domain().1),
            ),
        );
        bp.windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                self.value_at(mid) * density.value_at(mid) * (w[1] - w[0])
            })
            .sum()
    }
}

/// Finite union of disjoint closed intervals, sorted.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    /// Sorts, drops empty intervals, and merges touching ones.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Self {
        intervals.retain(|(a, b)| b > a);
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn lebesgue(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn measure(&self, density: &PiecewiseConstantDensity) -> f64 {
        self.intervals.iter().map(|(a, b)| density.mass_on(*a, *b)).sum()
    }
}

/// Set `E` with `μ_i(E) = ∫ g dμ_i` for every density.
///
/// On each cell of the common refinement of `g` and the densities all
/// integrands are constant, so the left part of the cell with relative length
/// `g` carries exactly the right mass for every measure at once.
pub fn lyapunov_split(densities: &[PiecewiseConstantDensity], g: &StepFunction) -> Result<IntervalSet> {
    if densities.is_empty() {
        return Err(SotError::InvalidInput("no densities given".into()));
    }
    let mut sets: Vec<&[f64]> = densities.iter().map(|d| d.breakpoints()).collect();
    sets.push(g.breakpoints());
    let lo = densities.iter().map(|d| d.domain().0).fold(f64::INFINITY, f64::min);
    let hi = densities.iter().map(|d| d.domain().1).fold(f64::NEG_INFINITY, f64::max);
    let bp = merge_breakpoints(&sets, (lo, hi));
    let intervals = bp
        .windows(2)
        .map(|w| {
            let v = g.value_at(0.5 * (w[0] + w[1]));
            (w[0], w[0] + v * (w[1] - w[0]))
        })
        .collect();
    Ok(IntervalSet::new(intervals))
}

/// Splits `[lo, hi]` into consecutive pieces with the given relative lengths.
/// Fractions are rescaled if their sum exceeds 1; the last piece ends at `hi`
/// when the fractions sum to 1 within rounding.
pub fn partition(lo: f64, hi: f64, fractions: &[f64]) -> Vec<(f64, f64)> {
    let total: f64 = fractions.iter().sum();
    let scale = if total > 1.0 { 1.0 / total } else { 1.0 };
    let len = hi - lo;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(fractions.len());
    for (idx, f) in fractions.iter().enumerate() {
        let start = lo + acc * len;
        acc += f * scale;
        let end = if idx + 1 == fractions.len() && (acc - 1.0).abs() < 1e-12 {
            hi
        } else {
            (lo + acc * len).min(hi)
        };
        out.push((start, end));
    }
    out
}
