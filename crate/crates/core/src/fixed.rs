//! Fixed-target simultaneous transport as a linear program, with dual
//! potentials and an exact rational variant.

use serde::Serialize;
use sot_lp::{solve, solve_exact, Certificate, LinearProgram, LpStatus, Rational, Scalar};

use crate::error::{Result, SotError};
use crate::measure::{
    build_family, check_plan, CostSpec, DiscreteMeasure, FeasibilityReport, MeasureFamily, Point,
    Target, TransportPlan,
};
use crate::tolerances::{clean_primal, Tolerances};

/// A measure family, a probability target, and a nonnegative cost.
#[derive(Clone, Debug)]
pub struct SotInstance {
    family: MeasureFamily,
    target: DiscreteMeasure,
    cost: CostSpec,
    cost_matrix: Vec<f64>,
}

impl SotInstance {
    pub fn new(
        family: MeasureFamily,
        target: DiscreteMeasure,
        cost: CostSpec,
        tol: &Tolerances,
    ) -> Result<Self> {
        if target.is_empty() {
            return Err(SotError::InvalidInput("target has no atoms".into()));
        }
        let mass = target.total_mass();
        if (mass - 1.0).abs() > tol.mass {
            return Err(SotError::NonProbability {
                index: 0,
                reason: format!("target has total mass {mass}"),
            });
        }
        if target.dim() != family.dim() && cost.is_squared_euclidean() {
            return Err(SotError::DimensionMismatch(format!(
                "target dimension {} differs from source dimension {}",
                target.dim(),
                family.dim()
            )));
        }
        let cost_matrix = cost.matrix(family.support(), target.points())?;
        if cost_matrix.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(SotError::InvalidInput(
                "cost entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            family,
            target,
            cost,
            cost_matrix,
        })
    }

    pub fn family(&self) -> &MeasureFamily {
        &self.family
    }

    pub fn target(&self) -> &DiscreteMeasure {
        &self.target
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    /// Row-major `m × l` cost matrix.
    pub fn cost_matrix(&self) -> &[f64] {
        &self.cost_matrix
    }
}

/// Assembles the transport program over any scalar field.
///
/// Variables are `π_kj` at index `k·l + j`. Rows are the `m` source
/// marginals, then the `l` target marginals when `target` is given, then
/// `Σ_k π_kj (r_i^k − 1) = 0` for `i < n − 1` and every column `j`.
pub(crate) fn assemble<T: Scalar>(
    mean: &[T],
    ratios: &[Vec<T>],
    target: Option<&[T]>,
    cols: usize,
    cost: &[T],
) -> Result<LinearProgram<T>> {
    let m = mean.len();
    let n = ratios.len();
    let vars = m * cols;
    let mut rows: Vec<Vec<(usize, T)>> = Vec::new();
    let mut rhs = Vec::new();
    for (k, mu) in mean.iter().enumerate() {
        rows.push((0..cols).map(|j| (k * cols + j, T::one())).collect());
        rhs.push(mu.clone());
    }
    if let Some(nu) = target {
        for (j, w) in nu.iter().enumerate() {
            rows.push((0..m).map(|k| (k * cols + j, T::one())).collect());
            rhs.push(w.clone());
        }
    }
    for ratio in ratios.iter().take(n.saturating_sub(1)) {
        for j in 0..cols {
            rows.push(
                (0..m)
                    .map(|k| (k * cols + j, ratio[k].clone() - T::one()))
                    .filter(|(_, v)| !v.is_zero())
                    .collect(),
            );
            rhs.push(T::zero());
        }
    }
    Ok(LinearProgram::from_sparse_rows(
        cost[..vars].to_vec(),
        rows,
        rhs,
    )?)
}

/// The program `min Σ π_kj c_kj` over plans with the instance's marginals and
/// mixing constraints.
pub fn build_sot_lp(instance: &SotInstance) -> Result<LinearProgram<f64>> {
    let family = instance.family();
    assemble(
        family.mean_weights(),
        family.ratios(),
        Some(instance.target().weights()),
        instance.target().len(),
        instance.cost_matrix(),
    )
}

/// `φ` over source points and `ψ_i` over target points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualPotentials {
    pub phi: Vec<f64>,
    /// `psi[i][j] = ψ_i(y_j)`.
    pub psi: Vec<Vec<f64>>,
    /// `Σ_k φ_k μ^k + Σ_j (Σ_i ψ_ij) ν^j`.
    pub objective: f64,
}

impl DualPotentials {
    /// Largest `φ(x_k) + Σ_i r_i^k ψ_i(y_j) − c_kj`; feasible potentials give ≤ 0.
    pub fn max_violation(&self, instance: &SotInstance) -> f64 {
        let family = instance.family();
        let l = instance.target().len();
        let mut worst = f64::NEG_INFINITY;
        for k in 0..family.m() {
            for j in 0..l {
                let mixed: f64 = family
                    .ratios()
                    .iter()
                    .zip(&self.psi)
                    .map(|(r, psi)| r[k] * psi[j])
                    .sum();
                let v = self.phi[k] + mixed - instance.cost_matrix()[k * l + j];
                worst = worst.max(v);
            }
        }
        worst
    }
}

#[derive(Clone, Debug)]
pub struct FixedSolution {
    pub plan: TransportPlan,
    pub cost: f64,
    pub potentials: DualPotentials,
    pub feasibility: FeasibilityReport,
    pub certificate: Certificate,
}

/// Splits the LP dual `(φ, β, γ)` into potentials.
///
/// With `γ_n ≡ 0` for the omitted mixing row, `ψ_ij = β_j/n + γ_ij − Σ_i' γ_i'j / n`
/// reproduces the dual constraint `φ_k + β_j + Σ_i γ_ij (r_i^k − 1) ≤ c_kj`
/// as `φ_k + Σ_i r_i^k ψ_ij ≤ c_kj`, and `Σ_i ψ_ij = β_j`.
fn potentials_from_dual(dual: &[f64], m: usize, l: usize, n: usize, objective: f64) -> DualPotentials {
    let phi = dual[..m].to_vec();
    let beta = &dual[m..m + l];
    let gamma = |i: usize, j: usize| -> f64 {
        if i + 1 < n {
            dual[m + l + i * l + j]
        } else {
            0.0
        }
    };
    let psi = (0..n)
        .map(|i| {
            (0..l)
                .map(|j| {
                    let total: f64 = (0..n).map(|i2| gamma(i2, j)).sum();
                    beta[j] / n as f64 + gamma(i, j) - total / n as f64
                })
                .collect()
        })
        .collect();
    DualPotentials {
        phi,
        psi,
        objective,
    }
}

pub fn solve_fixed(instance: &SotInstance, tol: &Tolerances) -> Result<FixedSolution> {
    let lp = build_sot_lp(instance)?;
    let solution = solve(&lp)?;
    match solution.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(SotError::InternalInfeasible),
        LpStatus::Unbounded => {
            return Err(SotError::InvalidInput(
                "transport program reported unbounded".into(),
            ))
        }
    }
    let family = instance.family();
    let (m, l, n) = (family.m(), instance.target().len(), family.n());
    let certificate = solution.certificate(&lp);
    let matrix: Vec<f64> = solution.primal.iter().map(|v| clean_primal(*v)).collect();
    let cost = solution.objective;
    let plan = TransportPlan::from_flat(
        family.support().to_vec(),
        instance.target().points().to_vec(),
        matrix,
    )
    .with_cost(cost);
    let feasibility = check_plan(&plan, family, Target::Fixed(instance.target()), tol)?;
    let potentials = potentials_from_dual(&solution.dual, m, l, n, solution.dual_objective(&lp));
    Ok(FixedSolution {
        plan,
        cost,
        potentials,
        feasibility,
        certificate,
    })
}

/// Dual potentials of the instance's optimal plan.
pub fn dual_potentials(instance: &SotInstance, tol: &Tolerances) -> Result<DualPotentials> {
    Ok(solve_fixed(instance, tol)?.potentials)
}

/// Ordinary optimal transport between two probability measures.
pub fn solve_classical(
    source: &DiscreteMeasure,
    target: &DiscreteMeasure,
    cost: &CostSpec,
    tol: &Tolerances,
) -> Result<FixedSolution> {
    let family = build_family(source.points().to_vec(), vec![source.weights().to_vec()], tol)?;
    let cost = match cost {
        CostSpec::Matrix(rows) if family.m() != source.len() => CostSpec::Matrix(
            family.original_index().iter().map(|&k| rows[k].clone()).collect(),
        ),
        other => other.clone(),
    };
    let instance = SotInstance::new(family, target.clone(), cost, tol)?;
    solve_fixed(&instance, tol)
}

/// Fixed-target instance with rational data.
#[derive(Clone, Debug)]
pub struct ExactInstance {
    support: Vec<Vec<Rational>>,
    mean: Vec<Rational>,
    ratios: Vec<Vec<Rational>>,
    target_weights: Vec<Rational>,
    cost: Vec<Rational>,
    retained: Vec<usize>,
}

fn rat(v: f64) -> Rational {
    <Rational as Scalar>::from_f64(v)
}

fn rsum<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Rational {
    values
        .into_iter()
        .fold(<Rational as Scalar>::zero(), |acc, v| acc + v.clone())
}

impl ExactInstance {
    /// Measures must sum to exactly 1. `cost = None` means squared Euclidean.
    pub fn new(
        support: Vec<Vec<Rational>>,
        measures: Vec<Vec<Rational>>,
        target_points: Vec<Vec<Rational>>,
        target_weights: Vec<Rational>,
        cost: Option<Vec<Vec<Rational>>>,
    ) -> Result<Self> {
        let m = support.len();
        if m == 0 {
            return Err(SotError::EmptySupport);
        }
        if measures.is_empty() {
            return Err(SotError::InvalidInput("no measures given".into()));
        }
        let zero = <Rational as Scalar>::zero();
        let one = <Rational as Scalar>::one();
        let check = |w: &[Rational], index: usize| -> Result<()> {
            if w.iter().any(|v| *v < zero) {
                return Err(SotError::NonProbability {
                    index,
                    reason: "negative weight".into(),
                });
            }
            if rsum(w) != one {
                return Err(SotError::NonProbability {
                    index,
                    reason: "weights do not sum to exactly 1".into(),
                });
            }
            Ok(())
        };
        for (i, w) in measures.iter().enumerate() {
            if w.len() != m {
                return Err(SotError::DimensionMismatch(format!(
                    "measure {i} has {} weights for {m} support points",
                    w.len()
                )));
            }
            check(w, i)?;
        }
        if target_points.len() != target_weights.len() || target_points.is_empty() {
            return Err(SotError::DimensionMismatch(
                "target points and weights differ in length".into(),
            ));
        }
        check(&target_weights, 0)?;
        let n = measures.len();
        let nr = rat(n as f64);
        let retained: Vec<usize> = (0..m)
            .filter(|&k| measures.iter().any(|w| w[k] > zero))
            .collect();
        if retained.is_empty() {
            return Err(SotError::EmptySupport);
        }
        let mean: Vec<Rational> = retained
            .iter()
            .map(|&k| rsum(measures.iter().map(|w| &w[k])) / nr.clone())
            .collect();
        let ratios = measures
            .iter()
            .map(|w| {
                retained
                    .iter()
                    .zip(&mean)
                    .map(|(&k, mu)| w[k].clone() / mu.clone())
                    .collect()
            })
            .collect();
        let l = target_points.len();
        let cost = match cost {
            Some(rows) => {
                if rows.len() != m || rows.iter().any(|r| r.len() != l) {
                    return Err(SotError::DimensionMismatch(format!(
                        "cost matrix must be {m} × {l}"
                    )));
                }
                if rows.iter().flatten().any(|c| *c < zero) {
                    return Err(SotError::InvalidInput("cost entries must be nonnegative".into()));
                }
                retained.iter().flat_map(|&k| rows[k].clone()).collect()
            }
            None => {
                let mut out = Vec::with_capacity(retained.len() * l);
                for &k in &retained {
                    for y in &target_points {
                        if y.len() != support[k].len() {
                            return Err(SotError::DimensionMismatch(
                                "target and source dimensions differ".into(),
                            ));
                        }
                        let d = support[k]
                            .iter()
                            .zip(y)
                            .map(|(a, b)| {
                                let diff = a.clone() - b.clone();
                                diff.clone() * diff
                            })
                            .fold(zero.clone(), |acc, v| acc + v);
                        out.push(d);
                    }
                }
                out
            }
        };
        let support = retained.iter().map(|&k| support[k].clone()).collect();
        Ok(Self {
            support,
            mean,
            ratios,
            target_weights,
            cost,
            retained,
        })
    }

    /// Original indices of the support points with positive mean mass.
    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    pub fn support(&self) -> &[Vec<Rational>] {
        &self.support
    }
}

#[derive(Clone, Debug)]
pub struct ExactSolution {
    /// Rows follow [`ExactInstance::retained`].
    pub plan: Vec<Vec<Rational>>,
    pub cost: Rational,
    pub dual_objective: Rational,
}

/// Solves the fixed-target program in rational arithmetic.
pub fn solve_fixed_exact(instance: &ExactInstance) -> Result<ExactSolution> {
    let l = instance.target_weights.len();
    let lp = assemble(
        &instance.mean,
        &instance.ratios,
        Some(&instance.target_weights),
        l,
        &instance.cost,
    )?;
    let solution = solve_exact(&lp)?;
    if solution.status != LpStatus::Optimal {
        return Err(SotError::InternalInfeasible);
    }
    let plan = solution.primal.chunks(l).map(<[Rational]>::to_vec).collect();
    Ok(ExactSolution {
        plan,
        dual_objective: solution.dual_objective(&lp),
        cost: solution.objective,
    })
}

/// Squared-Euclidean cost matrix between point sets, row-major.
pub(crate) fn squared_costs(source: &[Point], target: &[Point]) -> Vec<f64> {
    CostSpec::SquaredEuclidean
        .matrix(source, target)
        .expect("squared Euclidean costs never fail")
}
