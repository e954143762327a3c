use crate::scalar::{Rational, Scalar};
use crate::LpError;

/// `min cᵀx  s.t.  Ax = b,  x ≥ 0` with dense row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<T = f64> {
    objective: Vec<T>,
    matrix: Vec<T>,
    rhs: Vec<T>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(objective: Vec<T>, rows: Vec<Vec<T>>, rhs: Vec<T>) -> Result<Self, LpError> {
        let cols = objective.len();
        if cols == 0 || rows.is_empty() {
            return Err(LpError::Empty);
        }
        if rows.len() != rhs.len() {
            return Err(LpError::DimensionMismatch(format!(
                "{} constraint rows but {} right-hand sides",
                rows.len(),
                rhs.len()
            )));
        }
        let mut matrix = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(LpError::DimensionMismatch(format!(
                    "row {i} has {} coefficients, expected {cols}",
                    row.len()
                )));
            }
            matrix.extend(row);
        }
        let lp = Self { objective, matrix, rhs };
        lp.check_finite()?;
        Ok(lp)
    }

    /// Builds from sparse rows given as `(column, coefficient)` lists.
    /// Repeated columns within a row are summed.
    pub fn from_sparse_rows(
        objective: Vec<T>,
        rows: Vec<Vec<(usize, T)>>,
        rhs: Vec<T>,
    ) -> Result<Self, LpError> {
        let cols = objective.len();
        let dense = rows
            .into_iter()
            .map(|entries| {
                let mut row = vec![T::zero(); cols];
                for (j, v) in entries {
                    if j >= cols {
                        return Err(LpError::DimensionMismatch(format!(
                            "column {j} out of range for {cols} variables"
                        )));
                    }
                    row[j] = row[j].clone() + v;
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(objective, dense, rhs)
    }

    fn check_finite(&self) -> Result<(), LpError> {
        if T::EXACT {
            return Ok(());
        }
        let finite = |v: &T| v.to_f64().is_finite();
        if self.objective.iter().all(finite)
            && self.matrix.iter().all(finite)
            && self.rhs.iter().all(finite)
        {
            Ok(())
        } else {
            Err(LpError::NonFinite)
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    pub fn rhs(&self) -> &[T] {
        &self.rhs
    }

    pub fn row(&self, i: usize) -> &[T] {
        let n = self.num_cols();
        &self.matrix[i * n..(i + 1) * n]
    }

    pub fn coeff(&self, i: usize, j: usize) -> &T {
        &self.matrix[i * self.num_cols() + j]
    }

    /// `Ax` for an arbitrary vector.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        (0..self.num_rows())
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// `Aᵀy` for an arbitrary row-space vector.
    pub fn apply_transpose(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.num_cols()];
        for (i, yi) in y.iter().enumerate() {
            if yi.is_zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                if !a.is_zero() {
                    *o = o.clone() + a.clone() * yi.clone();
                }
            }
        }
        out
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> LinearProgram<U> {
        LinearProgram {
            objective: self.objective.iter().map(&f).collect(),
            matrix: self.matrix.iter().map(&f).collect(),
            rhs: self.rhs.iter().map(&f).collect(),
        }
    }
}

impl LinearProgram<f64> {
    /// Exact rational copy; every finite `f64` is a dyadic rational.
    pub fn to_exact(&self) -> LinearProgram<Rational> {
        self.map(|v| Rational::from_f64(*v))
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| {
        if x.is_zero() || y.is_zero() {
            acc
        } else {
            acc + x.clone() * y.clone()
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a simplex run.
///
/// For `Optimal`, `primal`/`dual` form a certified pair. For `Infeasible`,
/// `farkas` holds `y` with `Aᵀy ≤ 0` and `bᵀy > 0`. For `Unbounded`, `ray`
/// holds `d ≥ 0` with `Ad = 0` and `cᵀd < 0`.
#[derive(Clone, Debug)]
pub struct LpSolution<T = f64> {
    pub status: LpStatus,
    pub primal: Vec<T>,
    pub dual: Vec<T>,
    pub objective: T,
    pub basis: Vec<usize>,
    pub farkas: Option<Vec<T>>,
    pub ray: Option<Vec<T>>,
    /// Rows found to be zero, duplicate, or linearly dependent. Their duals are 0.
    pub redundant_rows: Vec<usize>,
    pub iterations: usize,
}

/// Residuals of a solution measured against the original program, in `f64`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    pub primal_residual: f64,
    pub min_primal: f64,
    pub dual_infeasibility: f64,
    pub complementarity: f64,
    pub duality_gap: f64,
}

impl Certificate {
    pub fn within(&self, feas_tol: f64, gap_tol: f64) -> bool {
        self.primal_residual <= feas_tol
            && self.min_primal >= -feas_tol
            && self.dual_infeasibility <= feas_tol
            && self.complementarity <= feas_tol
            && self.duality_gap <= gap_tol
    }
}

impl<T: Scalar> LpSolution<T> {
    pub fn dual_objective(&self, lp: &LinearProgram<T>) -> T {
        dot(lp.rhs(), &self.dual)
    }

    /// Recomputes all optimality residuals from scratch.
    pub fn certificate(&self, lp: &LinearProgram<T>) -> Certificate {
        let ax = lp.apply(&self.primal);
        let primal_residual = ax
            .iter()
            .zip(lp.rhs())
            .map(|(a, b)| (a.clone() - b.clone()).to_f64().abs())
            .fold(0.0, f64::max);
        let min_primal = self
            .primal
            .iter()
            .map(|x| x.to_f64())
            .fold(f64::INFINITY, f64::min);
        let aty = lp.apply_transpose(&self.dual);
        let reduced: Vec<f64> = lp
            .objective()
            .iter()
            .zip(&aty)
            .map(|(c, a)| (c.clone() - a.clone()).to_f64())
            .collect();
        let dual_infeasibility = reduced.iter().map(|d| (-d).max(0.0)).fold(0.0, f64::max);
        let complementarity = reduced
            .iter()
            .zip(&self.primal)
            .map(|(d, x)| (d * x.to_f64()).abs())
            .fold(0.0, f64::max);
        let primal_obj = dot(lp.objective(), &self.primal);
        let duality_gap = (primal_obj - self.dual_objective(lp)).to_f64().abs();
        Certificate {
            primal_residual,
            min_primal,
            dual_infeasibility,
            complementarity,
            duality_gap,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}
