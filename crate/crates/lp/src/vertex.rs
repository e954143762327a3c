//! Brute-force enumeration of basic feasible solutions for tiny programs.

use crate::dense;
use crate::problem::LinearProgram;
use crate::LpError;

pub const MAX_VERTEX_COLS: usize = 24;
pub const MAX_VERTEX_ROWS: usize = 16;

/// All vertices of `{x ≥ 0 : Ax = b}`, deduplicated within `tol_geom`
/// (max-norm), in lexicographic order of their basis index sets.
///
/// Stops after `max_vertices` distinct points. Used as an optimality oracle:
/// a bounded LP attains its minimum at one of these points.
pub fn vertex_enumerate(
    lp: &LinearProgram<f64>,
    max_vertices: usize,
    tol_geom: f64,
) -> Result<Vec<Vec<f64>>, LpError> {
    let (rows, cols) = (lp.num_rows(), lp.num_cols());
    if cols > MAX_VERTEX_COLS || rows > MAX_VERTEX_ROWS {
        return Err(LpError::TooLarge { rows, cols });
    }
    let feas_tol = 1e-9;
    let rank_tol = 1e-10;

    let mut all = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        all.extend_from_slice(lp.row(i));
    }
    let independent = dense::independent_rows(&all, rows, cols, &rank_tol);
    let rank = independent.len();
    if rank == 0 {
        // Ax = b is vacuous or inconsistent; the origin is the only candidate.
        let origin = vec![0.0; cols];
        return Ok(if residual(lp, &origin) <= feas_tol {
            vec![origin]
        } else {
            Vec::new()
        });
    }

    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..rank).collect();
    loop {
        if let Some(x) = basic_point(lp, &independent, &subset, feas_tol) {
            let dup = found.iter().any(|v| {
                v.iter().zip(&x).all(|(a, b)| (a - b).abs() <= tol_geom.max(1e-12))
            });
            if !dup {
                found.push(x);
                if found.len() >= max_vertices {
                    break;
                }
            }
        }
        if !next_combination(&mut subset, cols) {
            break;
        }
    }
    Ok(found)
}

fn basic_point(
    lp: &LinearProgram<f64>,
    rows: &[usize],
    cols: &[usize],
    feas_tol: f64,
) -> Option<Vec<f64>> {
    let k = rows.len();
    let mut sub = vec![0.0; k * k];
    for (r, &i) in rows.iter().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            sub[r * k + c] = *lp.coeff(i, j);
        }
    }
    let lu = dense::factor(sub, k, &1e-11).ok()?;
    let rhs: Vec<f64> = rows.iter().map(|&i| lp.rhs()[i]).collect();
    let xs = lu.solve(&rhs);
    if xs.iter().any(|v| *v < -feas_tol) {
        return None;
    }
    let mut x = vec![0.0; lp.num_cols()];
    for (&j, v) in cols.iter().zip(xs) {
        x[j] = v.max(0.0);
    }
    // dependent rows must hold too
    (residual(lp, &x) <= feas_tol * 10.0).then_some(x)
}

fn residual(lp: &LinearProgram<f64>, x: &[f64]) -> f64 {
    lp.apply(x)
        .iter()
        .zip(lp.rhs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
