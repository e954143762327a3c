use serde::{Deserialize, Serialize};

use crate::error::{Result, SotError};

/// Density on an interval, constant between consecutive breakpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstantDensity {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstantDensity {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() + 1 || values.is_empty() {
            return Err(SotError::DimensionMismatch(format!(
                "{} breakpoints for {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(SotError::InvalidInput("density data must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SotError::InvalidInput(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| *v < 0.0) {
            return Err(SotError::InvalidInput("density values must be nonnegative".into()));
        }
        Ok(Self { breakpoints, values })
    }

    /// Lebesgue measure on `[0, 1]`.
    pub fn lebesgue() -> Self {
        Self {
            breakpoints: vec![0.0, 1.0],
            values: vec![1.0],
        }
    }

    /// `value` times the indicator of `[a, b] ⊂ [0, 1]`, zero elsewhere on `[0, 1]`.
    pub fn indicator(a: f64, b: f64, value: f64) -> Result<Self> {
        let mut bp = vec![0.0];
        let mut vals = Vec::new();
        if a > 0.0 {
            bp.push(a);
            vals.push(0.0);
        }
        bp.push(b);
        vals.push(value);
        if b < 1.0 {
            bp.push(1.0);
            vals.push(0.0);
        }
        Self::new(bp, vals)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    /// `(left, right, value)` per cell.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| (w[0], w[1], *v))
    }

    pub fn mass(&self) -> f64 {
        self.cells().map(|(a, b, v)| v * (b - a)).sum()
    }

    /// Density at `x`; right-continuous, zero outside the domain.
    pub fn value_at(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        if x < lo || x > hi {
            return 0.0;
        }
        let idx = self.breakpoints.partition_point(|b| *b <= x);
        self.values[idx.saturating_sub(1).min(self.values.len() - 1)]
    }

    /// Mass of `[a, b]`.
    pub fn mass_on(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.cells()
            .map(|(l, r, v)| v * (r.min(b) - l.max(a)).max(0.0))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.mass_on(self.domain().0, x)
    }

    /// First and second moments `(∫ x dρ, ∫ x² dρ)` restricted to `[a, b]`.
    pub fn moments_on(&self, a: f64, b: f64) -> (f64, f64) {
        self.cells().fold((0.0, 0.0), |(m1, m2), (l, r, v)| {
            let (l, r) = (l.max(a), r.min(b));
            if r <= l {
                return (m1, m2);
            }
            (
                m1 + v * (r * r - l * l) / 2.0,
                m2 + v * (r * r * r - l * l * l) / 3.0,
            )
        })
    }

    /// Same density scaled to total mass 1.
    pub fn normalized(&self) -> Result<Self> {
        let mass = self.mass();
        if mass <= 0.0 {
            return Err(SotError::ZeroMass);
        }
        Ok(Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v / mass).collect(),
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Same density with breakpoints added at `points` inside the domain.
    pub fn refined(&self, points: &[f64]) -> Self {
        let bp = merge_breakpoints(&[&self.breakpoints, points], self.domain());
        let values = bp
            .windows(2)
            .map(|w| self.value_at(0.5 * (w[0] + w[1])))
            .collect();
        Self { breakpoints: bp, values }
    }

    /// Same density on `[lo, hi]`: cut off outside, zero where undefined.
    pub fn on_domain(&self, lo: f64, hi: f64) -> Result<Self> {
        let bp = merge_breakpoints(&[&self.breakpoints], (lo, hi));
        let values = bp.windows(2).map(|w| self.value_at(0.5 * (w[0] + w[1]))).collect();
        Self::new(bp, values)
    }

    /// Drops breakpoints between equal neighbouring values.
    pub fn simplified(&self) -> Self {
        let mut bp = vec![self.breakpoints[0]];
        let mut values: Vec<f64> = Vec::new();
        for (_, r, v) in self.cells() {
            if values.last() == Some(&v) {
                *bp.last_mut().unwrap() = r;
            } else {
                values.push(v);
                bp.push(r);
            }
        }
        Self { breakpoints: bp, values }
    }

    /// `(breakpoints, [values per density])` on the common refinement.
    pub fn common_refinement(densities: &[&PiecewiseConstantDensity]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let lo = densities.iter().map(|d| d.domain().0).fold(f64::INFINITY, f64::min);
        let hi = densities.iter().map(|d| d.domain().1).fold(f64::NEG_INFINITY, f64::max);
        let sets: Vec<&[f64]> = densities.iter().map(|d| d.breakpoints()).collect();
        let bp = merge_breakpoints(&sets, (lo, hi));
        let values = densities
            .iter()
            .map(|d| {
                bp.windows(2)
                    .map(|w| d.value_at(0.5 * (w[0] + w[1])))
                    .collect()
            })
            .collect();
        (bp, values)
    }
}

/// Sorted union of breakpoint sets clipped to `domain`, with near-duplicates removed.
pub(crate) fn merge_breakpoints(sets: &[&[f64]], domain: (f64, f64)) -> Vec<f64> {
    let mut all: Vec<f64> = sets
        .iter()
        .flat_map(|s| s.iter().copied())
        .filter(|x| *x > domain.0 && *x < domain.1)
        .collect();
    all.push(domain.0);
    all.push(domain.1);
    all.sort_by(f64::total_cmp);
    let scale = (domain.1 - domain.0).abs().max(1.0);
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for x in all {
        match out.last() {
            Some(last) if x - last <= 1e-14 * scale => {}
            _ => out.push(x),
        }
    }
    // keep the exact right end
    if let Some(last) = out.last_mut() {
        *last = domain.1;
    }
    out
}
