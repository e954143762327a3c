use serde::Serialize;

use super::density::PiecewiseConstantDensity;
use super::map::PiecewiseMap;
use crate::error::{Result, SotError};

pub const MIN_RESOLUTION: usize = 100;
pub const DEFAULT_RESOLUTION: usize = 10_000;

/// CDF samples `(t_s, F(t_s))` on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdfTable {
    pub points: Vec<f64>,
    pub values: Vec<f64>,
}

impl CdfTable {
    /// `max_s |F(t_s) − G(t_s)|`.
    pub fn kolmogorov_distance(&self, reference: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.values)
            .map(|(t, v)| (v - reference(*t)).abs())
            .fold(0.0, f64::max)
    }
}

/// Affine segments `(x0, x1, slope, intercept, density)` where both the map
/// and the density are simple.
fn segments(map: &PiecewiseMap, density: &PiecewiseConstantDensity) -> Vec<(f64, f64, f64, f64, f64)> {
    let mut out = Vec::new();
    for p in map.pieces() {
        for (a, b, v) in density.cells() {
            let (l, r) = (a.max(p.lo), b.min(p.hi));
            if r > l && v > 0.0 {
                out.push((l, r, p.slope, p.intercept, v));
            }
        }
    }
    out
}

/// CDF of `density ∘ map⁻¹` over the hull of the map's range.
pub fn pushforward_cdf(
    map: &PiecewiseMap,
    density: &PiecewiseConstantDensity,
    resolution: usize,
) -> Result<CdfTable> {
    pushforward_cdf_on(map, density, map.range(), resolution)
}

/// CDF of `density ∘ map⁻¹` sampled at `resolution` uniform points of `[lo, hi]`.
///
/// Each simple segment contributes a linear ramp between the endpoints of its
/// image (or a jump if the map is constant there); ramps are swept in order.
pub fn pushforward_cdf_on(
    map: &PiecewiseMap,
    density: &PiecewiseConstantDensity,
    (lo, hi): (f64, f64),
    resolution: usize,
) -> Result<CdfTable> {
    if resolution < MIN_RESOLUTION {
        return Err(SotError::InvalidInput(format!(
            "resolution {resolution} is below {MIN_RESOLUTION}"
        )));
    }
    let points: Vec<f64> = (0..resolution)
        .map(|s| lo + (hi - lo) * s as f64 / (resolution - 1) as f64)
        .collect();
    // (position, jump, slope change)
    let mut events: Vec<(f64, f64, f64)> = Vec::new();
    for (x0, x1, s, c, v) in segments(map, density) {
        let mass = v * (x1 - x0);
        let (y0, y1) = {
            let (a, b) = (s * x0 + c, s * x1 + c);
            (a.min(b), a.max(b))
        };
        if y1 > y0 {
            let rate = mass / (y1 - y0);
            events.push((y0, 0.0, rate));
            events.push((y1, 0.0, -rate));
        } else {
            events.push((y0, mass, 0.0));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut values = Vec::with_capacity(resolution);
    let (mut acc, mut rate, mut pos) = (0.0, 0.0, f64::NEG_INFINITY);
    let mut e = 0;
    for &t in &points {
        while e < events.len() && events[e].0 <= t {
            let (y, jump, dr) = events[e];
            if pos.is_finite() {
                acc += rate * (y - pos);
            }
            pos = y;
            acc += jump;
            rate += dr;
            e += 1;
        }
        let value = if pos.is_finite() { acc + rate * (t - pos) } else { 0.0 };
        values.push(value);
    }
    Ok(CdfTable { points, values })
}

/// Density of `density ∘ map⁻¹` for maps without flat pieces carrying mass.
pub fn pushforward_density(
    map: &PiecewiseMap,
    density: &PiecewiseConstantDensity,
) -> Result<PiecewiseConstantDensity> {
    let segs = segments(map, density);
    let total: f64 = segs.iter().map(|(x0, x1, _, _, v)| v * (x1 - x0)).sum();
    let mut events: Vec<(f64, f64)> = Vec::new();
    for (x0, x1, s, c, v) in segs {
        if s == 0.0 {
            // ulp-wide pieces lose their slope to rounding
            if v * (x1 - x0) <= 1e-14 * total {
                continue;
            }
            return Err(SotError::InvalidInput(
                "map is constant on a set of positive mass".into(),
            ));
        }
        let (a, b) = (s * x0 + c, s * x1 + c);
        let (y0, y1) = (a.min(b), a.max(b));
        let value = v / s.abs();
        events.push((y0, value));
        events.push((y1, -value));
    }
    if events.is_empty() {
        let (lo, hi) = map.range();
        let hi = if hi > lo { hi } else { lo + 1.0 };
        return PiecewiseConstantDensity::new(vec![lo, hi], vec![0.0]);
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let peak = events.iter().map(|e| e.1.abs()).fold(0.0, f64::max);
    let span = events[events.len() - 1].0 - events[0].0;
    // image endpoints of adjacent pieces agree only up to rounding
    let merge = 1e-12 * span.max(f64::MIN_POSITIVE);
    let mut breakpoints = vec![events[0].0];
    let mut values = Vec::new();
    let mut level: f64 = 0.0;
    for (y, dv) in events {
        if y > *breakpoints.last().unwrap() + merge {
            values.push(if level.abs() <= 1e-13 * peak { 0.0 } else { level.max(0.0) });
            breakpoints.push(y);
        }
        level += dv;
    }
    if values.is_empty() {
        let y = breakpoints[0];
        return PiecewiseConstantDensity::new(vec![y, y + 1.0], vec![0.0]);
    }
    PiecewiseConstantDensity::new(breakpoints, values)
}
