use serde::Serialize;

use super::density::PiecewiseConstantDensity;

/// `x ↦ slope·x + intercept` on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AffinePiece {
    pub lo: f64,
    pub hi: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl AffinePiece {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    /// Image interval, ordered.
    pub fn image(&self) -> (f64, f64) {
        let (a, b) = (self.eval(self.lo), self.eval(self.hi));
        (a.min(b), a.max(b))
    }

    /// The piece mapping `[lo, hi]` onto `[a, b]` increasingly.
    pub fn onto(lo: f64, hi: f64, a: f64, b: f64) -> Self {
        let slope = if hi > lo { (b - a) / (hi - lo) } else { 0.0 };
        Self {
            lo,
            hi,
            slope,
            intercept: a - slope * lo,
        }
    }
}

/// Piecewise affine map with pieces sorted by `lo` and non-overlapping.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PiecewiseMap {
    pieces: Vec<AffinePiece>,
}

impl PiecewiseMap {
    /// Sorts the pieces and drops empty ones.
    pub fn new(mut pieces: Vec<AffinePiece>) -> Self {
        pieces.retain(|p| p.hi > p.lo);
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        Self { pieces }
    }

    pub fn identity(lo: f64, hi: f64) -> Self {
        Self::new(vec![AffinePiece {
            lo,
            hi,
            slope: 1.0,
            intercept: 0.0,
        }])
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn domain(&self) -> (f64, f64) {
        (
            self.pieces.first().map_or(0.0, |p| p.lo),
            self.pieces.last().map_or(0.0, |p| p.hi),
        )
    }

    /// Hull of the images of all pieces.
    pub fn range(&self) -> (f64, f64) {
        self.pieces.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            let (u, v) = p.image();
            (a.min(u), b.max(v))
        })
    }

    /// Value at `x`, using the last piece whose `lo ≤ x`; `None` outside the pieces.
    pub fn eval(&self, x: f64) -> Option<f64> {
        let idx = self.pieces.partition_point(|p| p.lo <= x);
        let piece = self.pieces.get(idx.checked_sub(1)?)?;
        (x <= piece.hi).then(|| piece.eval(x))
    }

    /// Total length of the domain not covered by pieces.
    pub fn coverage_gap(&self, lo: f64, hi: f64) -> f64 {
        let covered: f64 = self
            .pieces
            .iter()
            .map(|p| (p.hi.min(hi) - p.lo.max(lo)).max(0.0))
            .sum();
        (hi - lo) - covered
    }

    /// `self ∘ inner`. Parts of `inner` landing outside `self` are dropped.
    pub fn compose(&self, inner: &PiecewiseMap) -> PiecewiseMap {
        let mut out = Vec::new();
        for p in &inner.pieces {
            if p.slope == 0.0 {
                let y = p.intercept + p.slope * p.lo;
                if let Some(v) = self.eval(y) {
                    out.push(AffinePiece {
                        lo: p.lo,
                        hi: p.hi,
                        slope: 0.0,
                        intercept: v,
                    });
                }
                continue;
            }
            let (ya, yb) = p.image();
            let start = self.pieces.partition_point(|q| q.hi <= ya);
            for q in &self.pieces[start..] {
                if q.lo >= yb {
                    break;
                }
                let (u, v) = (q.lo.max(ya), q.hi.min(yb));
                if v <= u {
                    continue;
                }
                let (x0, x1) = {
                    let a = (u - p.intercept) / p.slope;
                    let b = (v - p.intercept) / p.slope;
                    (a.min(b).max(p.lo), a.max(b).min(p.hi))
                };
                if x1 <= x0 {
                    continue;
                }
                out.push(AffinePiece {
                    lo: x0,
                    hi: x1,
                    slope: q.slope * p.slope,
                    intercept: q.slope * p.intercept + q.intercept,
                });
            }
        }
        PiecewiseMap::new(out)
    }

    /// `x ↦ self(x − shift_in) + shift_out` restricted to `[lo, hi]` (in the shifted coordinates).
    pub(crate) fn shifted_restriction(&self, lo: f64, hi: f64, shift_in: f64) -> Vec<AffinePiece> {
        let (a, b) = (lo - shift_in, hi - shift_in);
        let start = self.pieces.partition_point(|q| q.hi <= a);
        let mut out = Vec::new();
        for q in &self.pieces[start..] {
            if q.lo >= b {
                break;
            }
            let (u, v) = (q.lo.max(a), q.hi.min(b));
            if v <= u {
                continue;
            }
            out.push(AffinePiece {
                lo: u + shift_in,
                hi: v + shift_in,
                slope: q.slope,
                intercept: q.intercept - q.slope * shift_in,
            });
        }
        out
    }

    /// `∫ (x − T(x))² dρ`, exact for piecewise constant `ρ`.
    pub fn squared_displacement(&self, density: &PiecewiseConstantDensity) -> f64 {
        let mut total = 0.0;
        for p in &self.pieces {
            for (a, b, v) in density.cells() {
                let (l, r) = (a.max(p.lo), b.min(p.hi));
                if r <= l || v == 0.0 {
                    continue;
                }
                let f = |x: f64| {
                    let d = x - p.eval(x);
                    d * d
                };
                // Simpson's rule is exact for quadratics
                total += v * (r - l) / 6.0 * (f(l) + 4.0 * f(0.5 * (l + r)) + f(r));
            }
        }
        total
    }
}
