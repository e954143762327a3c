//! Two-phase primal simplex on a dense tableau.
//!
//! Phase 1 drives a full set of artificial variables out of the basis; rows
//! whose artificial cannot be pivoted out are linearly dependent and are left
//! inert (artificial basic at level zero, dual zero). Phase 2 optimizes the
//! real objective with artificial columns barred from entering.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use log::{debug, trace};

use crate::dense;
use crate::problem::{dot, LinearProgram, LpSolution, LpStatus};
use crate::scalar::{Rational, Scalar};
use crate::LpError;

/// Entering-variable selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotRule {
    /// Smallest-index entering and leaving variables. Never cycles.
    Bland,
    /// Most negative reduced cost; switches to Bland after a run of
    /// degenerate pivots and back after the first non-degenerate one.
    DantzigWithBlandFallback,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub rule: PivotRule,
    /// Primal feasibility tolerance (phase-1 objective, rhs clamping).
    pub feas_tol: f64,
    /// Reduced-cost tolerance for optimality.
    pub opt_tol: f64,
    /// Smallest admissible pivot element in the ratio test.
    pub pivot_tol: f64,
    /// Coefficients at or below this magnitude count as zero in presolve,
    /// and a basis pivot at or below it is a numerical breakdown.
    pub breakdown_tol: f64,
    /// Degenerate pivots tolerated before falling back to Bland's rule.
    pub degenerate_switch: usize,
    pub max_iterations: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rule: PivotRule::DantzigWithBlandFallback,
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            pivot_tol: 1e-9,
            breakdown_tol: 1e-13,
            degenerate_switch: 50,
            max_iterations: None,
        }
    }
}

impl SolverOptions {
    pub fn bland() -> Self {
        Self {
            rule: PivotRule::Bland,
            ..Self::default()
        }
    }
}

/// Floating-point solve with default options.
pub fn solve(lp: &LinearProgram<f64>) -> Result<LpSolution<f64>, LpError> {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &LinearProgram<f64>, options: &SolverOptions) -> Result<LpSolution<f64>, LpError> {
    let tol = Tolerances {
        feas: options.feas_tol,
        opt: options.opt_tol,
        pivot: options.pivot_tol,
        zero: options.breakdown_tol,
        tie: 1e-12,
    };
    run(lp, &tol, options.rule, options.degenerate_switch, options.max_iterations)
}

/// Exact rational simplex with Bland's rule. Residuals are zero by construction.
pub fn solve_exact(lp: &LinearProgram<Rational>) -> Result<LpSolution<Rational>, LpError> {
    let z = <Rational as Scalar>::zero();
    let tol = Tolerances {
        feas: z.clone(),
        opt: z.clone(),
        pivot: z.clone(),
        zero: z.clone(),
        tie: z,
    };
    run(lp, &tol, PivotRule::Bland, usize::MAX, None)
}

struct Tolerances<T> {
    feas: T,
    opt: T,
    pivot: T,
    zero: T,
    tie: T,
}

impl<T: Scalar> Tolerances<T> {
    fn is_negligible(&self, v: &T) -> bool {
        v.abs() <= self.zero
    }
}

struct Presolve<T> {
    kept: Vec<usize>,
    dropped: Vec<usize>,
    farkas: Option<Vec<T>>,
}

fn row_hash<T: Scalar>(row: &[T]) -> u64 {
    let mut h = DefaultHasher::new();
    for v in row {
        v.bucket_key().hash(&mut h);
    }
    h.finish()
}

fn presolve<T: Scalar>(lp: &LinearProgram<T>, tol: &Tolerances<T>) -> Presolve<T> {
    let rows = lp.num_rows();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::new();
    let unit = |i: usize, v: T| {
        let mut y = vec![T::zero(); rows];
        y[i] = v;
        y
    };
    for i in 0..rows {
        let row = lp.row(i);
        let b = &lp.rhs()[i];
        if row.iter().all(|a| tol.is_negligible(a)) {
            if b.abs() > tol.feas {
                let sign = if *b > T::zero() { T::one() } else { -T::one() };
                return Presolve {
                    kept,
                    dropped,
                    farkas: Some(unit(i, sign)),
                };
            }
            dropped.push(i);
            continue;
        }
        let key = row_hash(row);
        let twin = buckets
            .get(&key)
            .and_then(|cands| cands.iter().copied().find(|&k| lp.row(k) == row));
        match twin {
            Some(k) => {
                let diff = lp.rhs()[k].clone() - b.clone();
                if diff.abs() > tol.feas {
                    // y = ±(e_k − e_i): Aᵀy = 0, bᵀy = |b_k − b_i|
                    let mut y = vec![T::zero(); rows];
                    let s = if diff > T::zero() { T::one() } else { -T::one() };
                    y[k] = s.clone();
                    y[i] = -s;
                    return Presolve {
                        kept,
                        dropped,
                        farkas: Some(y),
                    };
                }
                dropped.push(i);
            }
            None => {
                buckets.entry(key).or_default().push(i);
                kept.push(i);
            }
        }
    }
    Presolve {
        kept,
        dropped,
        farkas: None,
    }
}

enum Outcome {
    Optimal,
    Unbounded(usize),
}

struct Tableau<T> {
    data: Vec<T>,
    rows: usize,
    cols: usize,
    width: usize,
    basis: Vec<usize>,
    iterations: usize,
}

impl<T: Scalar> Tableau<T> {
    fn at(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> &T {
        self.at(i, self.width - 1)
    }

    fn pivot(&mut self, p: usize, q: usize, tol: &Tolerances<T>) -> Result<(), LpError> {
        let w = self.width;
        let piv = self.data[p * w + q].clone();
        if !T::EXACT && piv.abs() <= tol.zero {
            return Err(LpError::NumericalBreakdown { pivot: piv.to_f64() });
        }
        let mut prow: Vec<(usize, T)> = Vec::new();
        for j in 0..w {
            let v = &self.data[p * w + j];
            if !v.is_zero() {
                let scaled = if j == q { T::one() } else { v.clone() / piv.clone() };
                prow.push((j, scaled));
            }
        }
        for j in 0..w {
            self.data[p * w + j] = T::zero();
        }
        for (j, v) in &prow {
            self.data[p * w + *j] = v.clone();
        }
        for i in 0..=self.rows {
            if i == p {
                continue;
            }
            let f = self.data[i * w + q].clone();
            if f.is_zero() {
                continue;
            }
            let base = i * w;
            for (j, v) in &prow {
                let cell = &mut self.data[base + *j];
                *cell = cell.clone() - f.clone() * v.clone();
            }
            self.data[base + q] = T::zero();
        }
        self.basis[p] = q;
        self.iterations += 1;
        Ok(())
    }

    fn entering(&self, rule: PivotRule, tol: &Tolerances<T>) -> Option<usize> {
        let obj = self.rows;
        let threshold = -tol.opt.clone();
        match rule {
            PivotRule::Bland => (0..self.cols).find(|&j| *self.at(obj, j) < threshold),
            PivotRule::DantzigWithBlandFallback => {
                let mut best: Option<usize> = None;
                for j in 0..self.cols {
                    let d = self.at(obj, j);
                    if *d < threshold && best.map_or(true, |b| d < self.at(obj, b)) {
                        best = Some(j);
                    }
                }
                best
            }
        }
    }

    /// Returns the leaving row and whether the step is degenerate.
    fn leaving(&self, q: usize, bland: bool, tol: &Tolerances<T>) -> Option<(usize, bool)> {
        let mut best: Option<(usize, T)> = None;
        for i in 0..self.rows {
            let a = self.at(i, q);
            if *a <= tol.pivot {
                continue;
            }
            let mut b = self.rhs(i).clone();
            if b < T::zero() {
                b = T::zero();
            }
            let ratio = b / a.clone();
            best = match best {
                None => Some((i, ratio)),
                Some((k, r)) => {
                    let slack = tol.tie.clone() * (T::one() + r.abs());
                    if ratio < r.clone() - slack.clone() {
                        Some((i, ratio))
                    } else if ratio <= r.clone() + slack {
                        let take = if bland {
                            self.basis[i] < self.basis[k]
                        } else {
                            let (ai, ak) = (a.abs(), self.at(k, q).abs());
                            ai > ak || (ai == ak && self.basis[i] < self.basis[k])
                        };
                        if take {
                            Some((i, ratio))
                        } else {
                            Some((k, r))
                        }
                    } else {
                        Some((k, r))
                    }
                }
            };
        }
        best.map(|(i, r)| (i, r <= tol.tie))
    }

    fn iterate(
        &mut self,
        rule: PivotRule,
        degenerate_switch: usize,
        limit: usize,
        tol: &Tolerances<T>,
    ) -> Result<Outcome, LpError> {
        let mut degenerate_run = 0usize;
        loop {
            let active = if rule == PivotRule::Bland || degenerate_run >= degenerate_switch {
                PivotRule::Bland
            } else {
                rule
            };
            let Some(q) = self.entering(active, tol) else {
                return Ok(Outcome::Optimal);
            };
            let Some((p, degenerate)) = self.leaving(q, active == PivotRule::Bland, tol) else {
                return Ok(Outcome::Unbounded(q));
            };
            if self.iterations >= limit {
                return Err(LpError::IterationLimit(limit));
            }
            trace!("pivot row {p} col {q} degenerate={degenerate}");
            self.pivot(p, q, tol)?;
            degenerate_run = if degenerate { degenerate_run + 1 } else { 0 };
        }
    }
}

fn run<T: Scalar>(
    lp: &LinearProgram<T>,
    tol: &Tolerances<T>,
    rule: PivotRule,
    degenerate_switch: usize,
    max_iterations: Option<usize>,
) -> Result<LpSolution<T>, LpError> {
    let n = lp.num_cols();
    let m_all = lp.num_rows();
    let pre = presolve(lp, tol);
    if let Some(y) = pre.farkas {
        return Ok(infeasible(n, y, pre.dropped, 0));
    }
    let kept = pre.kept;
    let r = kept.len();
    if r == 0 {
        return Ok(trivial(lp, tol, pre.dropped));
    }

    let width = n + r + 1;
    let mut data = vec![T::zero(); (r + 1) * width];
    let mut sign = Vec::with_capacity(r);
    for (row, &i) in kept.iter().enumerate() {
        let s = lp.rhs()[i] < T::zero();
        sign.push(s);
        let flip = |v: &T| if s { -v.clone() } else { v.clone() };
        for (j, a) in lp.row(i).iter().enumerate() {
            data[row * width + j] = flip(a);
        }
        data[row * width + n + row] = T::one();
        data[row * width + width - 1] = flip(&lp.rhs()[i]);
    }
    for j in (0..n).chain(std::iter::once(width - 1)) {
        let mut s = T::zero();
        for row in 0..r {
            let v = &data[row * width + j];
            if !v.is_zero() {
                s = s + v.clone();
            }
        }
        data[r * width + j] = -s;
    }
    let mut tab = Tableau {
        data,
        rows: r,
        cols: n,
        width,
        basis: (n..n + r).collect(),
        iterations: 0,
    };
    let limit = max_iterations.unwrap_or_else(|| 100_000.max(50 * (r + n)));

    // Phase 1.
    match tab.iterate(rule, degenerate_switch, limit, tol)? {
        Outcome::Optimal => {}
        Outcome::Unbounded(_) => unreachable!("phase-1 objective is bounded below by zero"),
    }
    let infeasibility = (0..r)
        .filter(|&i| tab.basis[i] >= n)
        .fold(T::zero(), |acc, i| acc + tab.rhs(i).abs());
    let b_scale = lp
        .rhs()
        .iter()
        .fold(T::one(), |acc, b| if b.abs() > acc { b.abs() } else { acc });
    if infeasibility > tol.feas.clone() * b_scale {
        debug!("phase 1 ended with infeasibility {:?}", infeasibility.to_f64());
        // phase-1 reduced cost of artificial i is 1 − y_i
        let mut y = vec![T::zero(); m_all];
        for (row, &i) in kept.iter().enumerate() {
            let yi = T::one() - tab.at(r, n + row).clone();
            y[i] = if sign[row] { -yi } else { yi };
        }
        return Ok(infeasible(n, y, pre.dropped, tab.iterations));
    }

    // Drive remaining artificials out; rows where that fails are dependent.
    let mut redundant = pre.dropped;
    for row in 0..r {
        if tab.basis[row] < n {
            continue;
        }
        let mut best: Option<usize> = None;
        for j in 0..n {
            let a = tab.at(row, j).abs();
            if a > tol.pivot && best.map_or(true, |b| a > tab.at(row, b).abs()) {
                best = Some(j);
            }
        }
        match best {
            Some(j) => tab.pivot(row, j, tol)?,
            None => redundant.push(kept[row]),
        }
    }
    redundant.sort_unstable();

    // Phase 2 objective row; the rhs cell ends up holding −z.
    let cost_of = |j: usize| if j < n { lp.objective()[j].clone() } else { T::zero() };
    for j in 0..width {
        let mut d = if j < n { lp.objective()[j].clone() } else { T::zero() };
        for row in 0..r {
            let cb = cost_of(tab.basis[row]);
            let a = tab.at(row, j);
            if !cb.is_zero() && !a.is_zero() {
                d = d - cb * a.clone();
            }
        }
        tab.data[r * width + j] = d;
    }

    let outcome = tab.iterate(rule, degenerate_switch, limit, tol)?;
    if let Outcome::Unbounded(q) = outcome {
        let mut ray = vec![T::zero(); n];
        ray[q] = T::one();
        for row in 0..r {
            let bj = tab.basis[row];
            if bj < n {
                ray[bj] = -tab.at(row, q).clone();
            }
        }
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            primal: vec![T::zero(); n],
            dual: vec![T::zero(); m_all],
            objective: T::zero(),
            basis: tab.basis.iter().copied().filter(|&j| j < n).collect(),
            farkas: None,
            ray: Some(ray),
            redundant_rows: redundant,
            iterations: tab.iterations,
        });
    }

    // Tableau values, then (floating mode) a polish from the original data.
    let mut x_basic: Vec<T> = (0..r).map(|row| tab.rhs(row).clone()).collect();
    let mut y_rows: Vec<T> = (0..r).map(|row| -tab.at(r, n + row).clone()).collect();
    if !T::EXACT {
        let mut bmat = vec![T::zero(); r * r];
        for (col, &bj) in tab.basis.iter().enumerate() {
            for (row, &i) in kept.iter().enumerate() {
                let v = if bj < n {
                    let a = lp.coeff(i, bj).clone();
                    if sign[row] {
                        -a
                    } else {
                        a
                    }
                } else if bj - n == row {
                    T::one()
                } else {
                    T::zero()
                };
                bmat[row * r + col] = v;
            }
        }
        match dense::factor(bmat, r, &tol.zero) {
            Ok(lu) => {
                let rhs: Vec<T> = kept
                    .iter()
                    .enumerate()
                    .map(|(row, &i)| {
                        let b = lp.rhs()[i].clone();
                        if sign[row] {
                            -b
                        } else {
                            b
                        }
                    })
                    .collect();
                x_basic = lu.solve(&rhs);
                let cb: Vec<T> = tab.basis.iter().map(|&bj| cost_of(bj)).collect();
                y_rows = lu.solve_transpose(&cb);
            }
            Err(p) => {
                debug!("basis refactorization failed (pivot {p:e}); keeping tableau values");
            }
        }
    }

    let mut primal = vec![T::zero(); n];
    for (row, &bj) in tab.basis.iter().enumerate() {
        if bj < n {
            let mut v = x_basic[row].clone();
            if v < T::zero() && -v.clone() <= tol.feas {
                v = T::zero();
            }
            primal[bj] = v;
        }
    }
    let mut dual = vec![T::zero(); m_all];
    for (row, &i) in kept.iter().enumerate() {
        if redundant.binary_search(&i).is_ok() {
            continue;
        }
        let yi = y_rows[row].clone();
        dual[i] = if sign[row] { -yi } else { yi };
    }
    let objective = dot(lp.objective(), &primal);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal,
        dual,
        objective,
        basis: tab.basis.iter().copied().filter(|&j| j < n).collect(),
        farkas: None,
        ray: None,
        redundant_rows: redundant,
        iterations: tab.iterations,
    })
}

fn infeasible<T: Scalar>(n: usize, y: Vec<T>, dropped: Vec<usize>, iterations: usize) -> LpSolution<T> {
    LpSolution {
        status: LpStatus::Infeasible,
        primal: vec![T::zero(); n],
        dual: vec![T::zero(); y.len()],
        objective: T::zero(),
        basis: Vec::new(),
        farkas: Some(y),
        ray: None,
        redundant_rows: dropped,
        iterations,
    }
}

/// Every row was dropped in presolve: the feasible set is the whole orthant.
fn trivial<T: Scalar>(lp: &LinearProgram<T>, tol: &Tolerances<T>, dropped: Vec<usize>) -> LpSolution<T> {
    let n = lp.num_cols();
    let m = lp.num_rows();
    let neg = (0..n).find(|&j| lp.objective()[j] < -tol.opt.clone());
    match neg {
        Some(j) => {
            let mut ray = vec![T::zero(); n];
            ray[j] = T::one();
            LpSolution {
                status: LpStatus::Unbounded,
                primal: vec![T::zero(); n],
                dual: vec![T::zero(); m],
                objective: T::zero(),
                basis: Vec::new(),
                farkas: None,
                ray: Some(ray),
                redundant_rows: dropped,
                iterations: 0,
            }
        }
        None => LpSolution {
            status: LpStatus::Optimal,
            primal: vec![T::zero(); n],
            dual: vec![T::zero(); m],
            objective: T::zero(),
            basis: Vec::new(),
            farkas: None,
            ray: None,
            redundant_rows: dropped,
            iterations: 0,
        },
    }
}
