//! Worst-case correlation: the largest expected test count over every joint
//! distribution of the infection vector whose marginals all equal `p`.

pub mod simplex;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{expected_tests, EvalMode, StrategyKind, StrategySpec};
use crate::domain::{check_probability, InfectionVector, NoiseModel, PriorModel};
use crate::engine;
use crate::error::{Error, Result};
use simplex::{maximize, Scalar, SimplexError};

/// Largest population whose Γ vector we build (2^16 LP columns).
pub const MAX_N: usize = 16;
/// Feasibility tolerance for returned distributions.
pub const FEASIBILITY_TOL: f64 = 1e-9;

const MAX_PIVOTS: usize = 200_000;

/// `maximize Σ Γ_i π_i` over `π ≥ 0`, `Σ π_i = 1`, and `Σ_{i ∈ B_k} π_i = p`
/// for every person `k`, where `B_k` holds the encodings with bit `k` set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationLp {
    n: usize,
    p: f64,
    gamma: Vec<u32>,
}

impl CorrelationLp {
    pub fn new(gamma: Vec<u32>, p: f64) -> Result<Self> {
        check_probability("p", p)?;
        if gamma.len() < 2 || !gamma.len().is_power_of_two() {
            return Err(Error::input("cost vector length must be 2^n with n ≥ 1"));
        }
        let n = gamma.len().trailing_zeros() as usize;
        if n > MAX_N {
            return Err(Error::input(format!("n = {n} exceeds {MAX_N}")));
        }
        Ok(Self { n, p, gamma })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn gamma(&self) -> &[u32] {
        &self.gamma
    }

    /// Equality rows: total mass, then one marginal per person.
    fn constraints<S: Scalar>(&self, p: &S) -> (Vec<Vec<S>>, Vec<S>) {
        let vars = self.gamma.len();
        let mut rows = vec![vec![S::one(); vars]];
        let mut rhs = vec![S::one()];
        for k in 0..self.n {
            rows.push(
                (0..vars)
                    .map(|i| if (i >> k) & 1 == 1 { S::one() } else { S::zero() })
                    .collect(),
            );
            rhs.push(p.clone());
        }
        (rows, rhs)
    }

    /// Largest violation of the constraints by `pi`, including negativity.
    pub fn violation(&self, pi: &[f64]) -> f64 {
        let (rows, rhs) = self.constraints::<f64>(&self.p);
        let residual = rows
            .iter()
            .zip(&rhs)
            .map(|(row, b)| (row.iter().zip(pi).map(|(a, x)| a * x).sum::<f64>() - b).abs())
            .fold(0.0, f64::max);
        let negativity = pi.iter().map(|&x| (-x).max(0.0)).fold(0.0, f64::max);
        residual.max(negativity)
    }

    pub fn objective(&self, pi: &[f64]) -> f64 {
        self.gamma.iter().zip(pi).map(|(&g, &x)| g as f64 * x).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    /// Unique feasible point at p ∈ {0, 1}; no pivoting.
    Direct,
    Float,
    Rational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolveStrategy {
    /// Floating point, falling back to rationals when the result fails verification.
    #[default]
    Auto,
    FloatOnly,
    ExactOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    /// Worst-case E[Γ].
    pub value: f64,
    pub pi: Vec<f64>,
    /// Basic variables (encodings) of the optimal vertex.
    pub basis: Vec<usize>,
    pub arithmetic: Arithmetic,
}

/// Γ_i for every encoding `i`: the noiseless test count of `strategy` on that vector.
pub fn build_gamma(strategy: &StrategySpec) -> Result<Vec<u32>> {
    let n = strategy.n();
    if n > MAX_N {
        return Err(Error::input(format!("build_gamma supports n ≤ {MAX_N}, got {n}")));
    }
    (0..1u64 << n)
        .into_par_iter()
        .map(|i| {
            let truth = InfectionVector::from_index(i, n)?;
            let trace = engine::run_noiseless(&mut strategy.stepper()?, &truth)?;
            Ok(trace.test_count() as u32)
        })
        .collect()
}

pub fn solve_worstcase(lp: &CorrelationLp) -> Result<LpSolution> {
    solve_worstcase_with(lp, SolveStrategy::Auto)
}

pub fn solve_worstcase_with(lp: &CorrelationLp, strategy: SolveStrategy) -> Result<LpSolution> {
    if lp.p == 0.0 || lp.p == 1.0 {
        let index = if lp.p == 0.0 { 0 } else { lp.gamma.len() - 1 };
        let mut pi = vec![0.0; lp.gamma.len()];
        pi[index] = 1.0;
        return Ok(LpSolution {
            value: lp.gamma[index] as f64,
            pi,
            basis: vec![index],
            arithmetic: Arithmetic::Direct,
        });
    }
    match strategy {
        SolveStrategy::ExactOnly => solve_rational(lp),
        SolveStrategy::FloatOnly => solve_float(lp),
        SolveStrategy::Auto => solve_float(lp)
            .and_then(|s| verified(lp, s))
            .or_else(|_| solve_rational(lp)),
    }
}

fn verified(lp: &CorrelationLp, solution: LpSolution) -> Result<LpSolution> {
    let violation = lp.violation(&solution.pi);
    if violation > FEASIBILITY_TOL {
        return Err(Error::Numerical(format!(
            "float solution violates constraints by {violation:e}"
        )));
    }
    if (lp.objective(&solution.pi) - solution.value).abs() > FEASIBILITY_TOL {
        return Err(Error::Numerical("objective does not match Γ·π".into()));
    }
    Ok(solution)
}

fn simplex_error(e: SimplexError) -> Error {
    Error::Numerical(format!("simplex failed: {e:?}"))
}

fn solve_float(lp: &CorrelationLp) -> Result<LpSolution> {
    let c: Vec<f64> = lp.gamma.iter().map(|&g| g as f64).collect();
    let (a, b) = lp.constraints(&lp.p);
    let sol = maximize(&c, &a, &b, MAX_PIVOTS).map_err(simplex_error)?;
    let pi: Vec<f64> = sol
        .x
        .iter()
        .map(|&v| if v.abs() < simplex::FLOAT_EPS { 0.0 } else { v })
        .collect();
    Ok(LpSolution {
        value: lp.objective(&pi),
        pi,
        basis: sol.basis,
        arithmetic: Arithmetic::Float,
    })
}

fn solve_rational(lp: &CorrelationLp) -> Result<LpSolution> {
    let p = BigRational::from_float(lp.p).ok_or_else(|| Error::input("p is not finite"))?;
    let c: Vec<BigRational> = lp
        .gamma
        .iter()
        .map(|&g| BigRational::from_integer(BigInt::from(g)))
        .collect();
    let (a, b) = lp.constraints(&p);
    let sol = maximize(&c, &a, &b, MAX_PIVOTS).map_err(simplex_error)?;
    Ok(LpSolution {
        value: Scalar::to_f64(&sol.value),
        pi: sol.x.iter().map(Scalar::to_f64).collect(),
        basis: sol.basis,
        arithmetic: Arithmetic::Rational,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstcaseRow {
    pub strategy: StrategyKind,
    pub n: usize,
    pub p: f64,
    pub iid_tests_per_person: f64,
    pub worstcase_tests_per_person: f64,
    pub solution: LpSolution,
}

/// One LP per grid point, alongside the exact IID value. SOFA uses the grid
/// `p` as its design prevalence, so Γ is rebuilt per point.
pub fn worstcase_sweep(kind: StrategyKind, n: usize, ps: &[f64]) -> Result<Vec<WorstcaseRow>> {
    if ps.is_empty() {
        return Err(Error::input("p grid must be nonempty"));
    }
    ps.par_iter()
        .map(|&p| {
            let spec = kind.build(n, p)?;
            let lp = CorrelationLp::new(build_gamma(&spec)?, p)?;
            let solution = solve_worstcase(&lp)?;
            let iid = expected_tests(&spec, &PriorModel::iid(p)?, NoiseModel::NOISELESS, EvalMode::Exact)?;
            Ok(WorstcaseRow {
                strategy: kind,
                n,
                p,
                iid_tests_per_person: iid.tests_per_person,
                worstcase_tests_per_person: solution.value / n as f64,
                solution,
            })
        })
        .collect()
}
