//! Small dense linear-algebra helpers (Gaussian elimination with partial pivoting).

use crate::scalar::Scalar;

/// LU factors of a square matrix, `P A = L U`, stored compactly.
pub(crate) struct Lu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

/// Factors the row-major `n × n` matrix. Returns the offending pivot magnitude
/// when a pivot falls to `pivot_tol` or below.
pub(crate) fn factor<T: Scalar>(mut a: Vec<T>, n: usize, pivot_tol: &T) -> Result<Lu<T>, f64> {
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut best = k;
        let mut best_abs = a[k * n + k].abs();
        for i in k + 1..n {
            let v = a[i * n + k].abs();
            if v > best_abs {
                best = i;
                best_abs = v;
            }
        }
        if best_abs <= *pivot_tol {
            return Err(best_abs.to_f64());
        }
        if best != k {
            for j in 0..n {
                a.swap(k * n + j, best * n + j);
            }
            perm.swap(k, best);
        }
        let pivot = a[k * n + k].clone();
        for i in k + 1..n {
            if a[i * n + k].is_zero() {
                continue;
            }
            let f = a[i * n + k].clone() / pivot.clone();
            for j in k + 1..n {
                if !a[k * n + j].is_zero() {
                    a[i * n + j] = a[i * n + j].clone() - f.clone() * a[k * n + j].clone();
                }
            }
            a[i * n + k] = f;
        }
    }
    Ok(Lu { n, lu: a, perm })
}

impl<T: Scalar> Lu<T> {
    /// Solves `A x = b`.
    pub(crate) fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            let mut s = x[i].clone();
            for j in 0..i {
                if !self.lu[i * n + j].is_zero() {
                    s = s - self.lu[i * n + j].clone() * x[j].clone();
                }
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i].clone();
            for j in i + 1..n {
                if !self.lu[i * n + j].is_zero() {
                    s = s - self.lu[i * n + j].clone() * x[j].clone();
                }
            }
            x[i] = s / self.lu[i * n + i].clone();
        }
        x
    }

    /// Solves `Aᵀ y = c`.
    pub(crate) fn solve_transpose(&self, c: &[T]) -> Vec<T> {
        let n = self.n;
        // Uᵀ z = c
        let mut z: Vec<T> = c.to_vec();
        for i in 0..n {
            let mut s = z[i].clone();
            for j in 0..i {
                if !self.lu[j * n + i].is_zero() {
                    s = s - self.lu[j * n + i].clone() * z[j].clone();
                }
            }
            z[i] = s / self.lu[i * n + i].clone();
        }
        // Lᵀ w = z
        for i in (0..n).rev() {
            let mut s = z[i].clone();
            for j in i + 1..n {
                if !self.lu[j * n + i].is_zero() {
                    s = s - self.lu[j * n + i].clone() * z[j].clone();
                }
            }
            z[i] = s;
        }
        // y = Pᵀ w
        let mut y = vec![T::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            y[p] = z[k].clone();
        }
        y
    }
}

/// Indices of a maximal linearly independent subset of the rows of the
/// row-major `rows × cols` matrix, chosen greedily in row order.
pub(crate) fn independent_rows<T: Scalar>(a: &[T], rows: usize, cols: usize, tol: &T) -> Vec<usize> {
    let mut basis: Vec<(usize, Vec<T>)> = Vec::new(); // (pivot column, reduced row)
    let mut kept = Vec::new();
    for i in 0..rows {
        let mut row: Vec<T> = a[i * cols..(i + 1) * cols].to_vec();
        for (pc, b) in &basis {
            if row[*pc].is_zero() {
                continue;
            }
            let f = row[*pc].clone() / b[*pc].clone();
            for j in 0..cols {
                if !b[j].is_zero() {
                    row[j] = row[j].clone() - f.clone() * b[j].clone();
                }
            }
        }
        let mut best: Option<usize> = None;
        for j in 0..cols {
            if row[j].abs() > *tol && best.map_or(true, |b| row[j].abs() > row[b].abs()) {
                best = Some(j);
            }
        }
        if let Some(pc) = best {
            basis.push((pc, row));
            kept.push(i);
        }
    }
    kept
}
