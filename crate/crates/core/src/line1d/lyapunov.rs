use super::density::PiecewiseConstantDensity;
use super::map::{AffinePiece, PiecewiseMap};
use crate::error::{Result, SotError};

const LEVEL_TOL: f64 = 1e-12;

/// Lebesgue-preserving map of `[0, 1]` taking `ν` to `ν([0, 1])·λ`.
pub fn lyapunov_transform(nu: &PiecewiseConstantDensity) -> Result<PiecewiseMap> {
    let (lo, hi) = nu.domain();
    if lo.abs() > 1e-12 || (hi - 1.0).abs() > 1e-12 {
        return Err(SotError::NotOnUnitInterval { lo, hi });
    }
    flatten(nu)
}

/// Map of the density's domain onto itself that preserves Lebesgue measure and
/// sends `ρ` to a constant multiple of Lebesgue measure.
///
/// With `η = ρ̂ − 1` for `ρ̂` normalized to average 1, the positive and
/// negative parts of `η` are swept left to right. Each η-mass increment `dt`
/// pairs `dt/(a − 1)` of a cell with density `a > 1` and `dt/(1 − b)` of a
/// cell with density `b < 1`; both pieces map affinely onto the next interval
/// of length `dt/(a − 1) + dt/(1 − b)`. Cells with `ρ̂ = 1` follow with slope 1.
pub fn flatten(rho: &PiecewiseConstantDensity) -> Result<PiecewiseMap> {
    let (lo, hi) = rho.domain();
    let mass = rho.mass();
    if mass <= 0.0 {
        return Err(SotError::ZeroMass);
    }
    let scale = (hi - lo) / mass;
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut level = Vec::new();
    for (a, b, v) in rho.cells() {
        let e = v * scale - 1.0;
        if e > LEVEL_TOL {
            plus.push((a, b, e));
        } else if e < -LEVEL_TOL {
            minus.push((a, b, -e));
        } else {
            level.push((a, b));
        }
    }
    let mut pieces = Vec::with_capacity(2 * (plus.len() + minus.len()) + level.len());
    let mut r = lo;
    let (mut i, mut j) = (0, 0);
    let mut pos_p = plus.first().map_or(0.0, |c| c.0);
    let mut pos_n = minus.first().map_or(0.0, |c| c.0);
    while i < plus.len() && j < minus.len() {
        let (_, bp, ep) = plus[i];
        let (_, bn, en) = minus[j];
        let rem_p = (bp - pos_p) * ep;
        let rem_n = (bn - pos_n) * en;
        let (end_p, end_n, next_i, next_j) = if rem_p < rem_n {
            (bp, pos_n + rem_p / en, i + 1, j)
        } else if rem_n < rem_p {
            (pos_p + rem_n / ep, bn, i, j + 1)
        } else {
            (bp, bn, i + 1, j + 1)
        };
        let end_n = end_n.min(bn);
        let end_p = end_p.min(bp);
        let dr = (end_p - pos_p) + (end_n - pos_n);
        pieces.push(AffinePiece::onto(pos_p, end_p, r, r + dr));
        pieces.push(AffinePiece::onto(pos_n, end_n, r, r + dr));
        r += dr;
        pos_p = end_p;
        pos_n = end_n;
        if next_i != i {
            i = next_i;
            if let Some(c) = plus.get(i) {
                pos_p = c.0;
            }
        }
        if next_j != j {
            j = next_j;
            if let Some(c) = minus.get(j) {
                pos_n = c.0;
            }
        }
    }
    // rounding leftovers of one side keep slope 1
    let mut leftovers = Vec::new();
    if let Some(c) = plus.get(i) {
        leftovers.push((pos_p, c.1));
        leftovers.extend(plus[i + 1..].iter().map(|c| (c.0, c.1)));
    }
    if let Some(c) = minus.get(j) {
        leftovers.push((pos_n, c.1));
        leftovers.extend(minus[j + 1..].iter().map(|c| (c.0, c.1)));
    }
    for (a, b) in leftovers.into_iter().chain(level) {
        if b > a {
            pieces.push(AffinePiece::onto(a, b, r, r + (b - a)));
            r += b - a;
        }
    }
    Ok(PiecewiseMap::new(pieces))
}
