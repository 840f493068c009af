use serde::{Deserialize, Serialize};

use super::{StrategyKind, StrategySpec};
use crate::domain::{InfectionVector, NoiseModel, PriorModel};
use crate::engine::{self, Protocol};
use crate::error::{Error, Result};
use crate::montecarlo::{self, Moments, WeightedSum};

/// Largest population evaluated by exhaustive enumeration.
pub const EXACT_MAX_N: usize = 20;
/// Smallest accepted Monte Carlo trial count.
pub const MIN_TRIALS: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EvalMode {
    Exact,
    MonteCarlo {
        trials: u64,
        seed: u64,
    },
    /// Exact when the instance allows it, Monte Carlo otherwise.
    Auto {
        trials: u64,
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvalMethod {
    ExactEnumeration,
    MonteCarlo { trials: u64, seed: u64, std_error: f64 },
}

impl EvalMethod {
    pub fn label(&self) -> &'static str {
        match self {
            EvalMethod::ExactEnumeration => "exact",
            EvalMethod::MonteCarlo { .. } => "monte_carlo",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub expected_tests: f64,
    pub tests_per_person: f64,
    pub method: EvalMethod,
}

impl EvalReport {
    fn new(n: usize, expected_tests: f64, method: EvalMethod) -> Self {
        Self {
            n,
            expected_tests,
            tests_per_person: expected_tests / n as f64,
            method,
        }
    }

    /// Standard error of `expected_tests`; zero for exact results.
    pub fn std_error(&self) -> f64 {
        match self.method {
            EvalMethod::ExactEnumeration => 0.0,
            EvalMethod::MonteCarlo { std_error, .. } => std_error,
        }
    }
}

/// E[Γ] of `strategy` when the infection vector follows `prior`.
pub fn expected_tests(
    strategy: &StrategySpec,
    prior: &PriorModel,
    noise: NoiseModel,
    mode: EvalMode,
) -> Result<EvalReport> {
    strategy.validate()?;
    let n = strategy.n();
    prior.validate(Some(n))?;
    match mode {
        EvalMode::Exact => exact(strategy, prior, noise),
        EvalMode::MonteCarlo { trials, seed } => monte_carlo(strategy, prior, noise, trials, seed),
        EvalMode::Auto { trials, seed } => {
            if n <= EXACT_MAX_N && noise.is_noiseless() {
                exact(strategy, prior, noise)
            } else {
                monte_carlo(strategy, prior, noise, trials, seed)
            }
        }
    }
}

fn exact(strategy: &StrategySpec, prior: &PriorModel, noise: NoiseModel) -> Result<EvalReport> {
    let n = strategy.n();
    if n > EXACT_MAX_N {
        return Err(Error::ModeMismatch(format!(
            "exact enumeration is limited to n ≤ {EXACT_MAX_N}, got n = {n}"
        )));
    }
    if !noise.is_noiseless() {
        return Err(Error::ModeMismatch("exact enumeration requires sensitivity 1".into()));
    }
    let total: WeightedSum = montecarlo::enumerate(1u64 << n, |index, tally: &mut WeightedSum| {
        let weight = prior.probability(index, n);
        if weight > 0.0 {
            let truth = InfectionVector::from_index(index, n)?;
            let trace = engine::run_noiseless(&mut strategy.stepper()?, &truth)?;
            tally.add(weight, trace.test_count() as f64);
        }
        Ok(())
    })?;
    Ok(EvalReport::new(n, total.mean(), EvalMethod::ExactEnumeration))
}

fn monte_carlo(
    strategy: &StrategySpec,
    prior: &PriorModel,
    noise: NoiseModel,
    trials: u64,
    seed: u64,
) -> Result<EvalReport> {
    if trials < MIN_TRIALS {
        return Err(Error::ModeMismatch(format!(
            "Monte Carlo needs at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    let n = strategy.n();
    let moments: Moments = montecarlo::run_batched(trials, seed, 0, |rng, tally: &mut Moments| {
        let truth = prior.sample(n, rng);
        let mut stepper = strategy.stepper()?;
        let trace = engine::run_protocol(&mut stepper, &truth, noise, rng)?;
        debug_assert!(trace.test_count() <= stepper.test_budget());
        tally.push(trace.test_count() as f64);
        Ok(())
    })?;
    Ok(EvalReport::new(
        n,
        moments.mean(),
        EvalMethod::MonteCarlo {
            trials,
            seed,
            std_error: moments.std_error(),
        },
    ))
}

/// One point of a tests-per-person sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub strategy: StrategyKind,
    pub n: usize,
    pub p: f64,
    pub report: EvalReport,
}

/// Evaluates `kind` at every `(n, p)` of the grid under an IID prior; SOFA
/// uses the grid `p` as its design prevalence.
pub fn sweep_tests_per_person(
    kind: StrategyKind,
    ns: &[usize],
    ps: &[f64],
    noise: NoiseModel,
    mode: EvalMode,
) -> Result<Vec<SweepRow>> {
    if ns.is_empty() || ps.is_empty() {
        return Err(Error::input("sweep grids must be nonempty"));
    }
    let mut rows = Vec::with_capacity(ns.len() * ps.len());
    for &n in ns {
        for &p in ps {
            let spec = kind.build(n, p)?;
            let report = expected_tests(&spec, &PriorModel::iid(p)?, noise, mode)?;
            rows.push(SweepRow {
                strategy: kind,
                n,
                p,
                report,
            });
        }
    }
    Ok(rows)
}
