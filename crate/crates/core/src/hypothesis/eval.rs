use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::classifier::SplittingClassifier;
use super::rates::{ErrorRates, HypothesisPair};
use super::tree::SplitTree;
use super::{ClassifierConfig, NoiseSemantics};
use crate::adaptive::{EvalMode, MIN_TRIALS};
use crate::domain::Hypothesis;
use crate::error::{Error, Result};
use crate::montecarlo::{self, Moments, Tally};
use crate::rng::SimRng;

/// Largest L evaluated by enumerating every subpool vector.
pub const EXACT_MAX_L: usize = 20;

/// Exact P_F/P_D must reproduce the binomial tails to this precision.
const CLOSED_FORM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierStdErrors {
    pub pf: f64,
    pub pd: f64,
    pub expected_tests: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierMethod {
    ExactEnumeration,
    MonteCarlo {
        /// Trials per hypothesis.
        trials: u64,
        seed: u64,
        std_errors: ClassifierStdErrors,
    },
}

impl ClassifierMethod {
    pub fn label(&self) -> &'static str {
        match self {
            ClassifierMethod::ExactEnumeration => "exact",
            ClassifierMethod::MonteCarlo { .. } => "monte_carlo",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ClassifierMethod::ExactEnumeration => None,
            ClassifierMethod::MonteCarlo { seed, .. } => Some(*seed),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub pair: HypothesisPair,
    pub config: ClassifierConfig,
    pub pf: f64,
    pub pd: f64,
    /// π0·E[Γ | H0] + π1·E[Γ | H1].
    pub expected_tests: f64,
    pub expected_tests_h0: f64,
    pub expected_tests_h1: f64,
    pub method: ClassifierMethod,
    /// Binomial-tail P_F/P_D, whenever the protocol's decision is a function
    /// of the (observed) infected-subpool count.
    pub closed_form: Option<ErrorRates>,
}

pub fn evaluate(config: &ClassifierConfig, pair: &HypothesisPair, mode: EvalMode) -> Result<ClassifierReport> {
    config.validate()?;
    pair.validate()?;
    match mode {
        EvalMode::Exact => exact(config, pair),
        EvalMode::MonteCarlo { trials, seed } => monte_carlo(config, pair, trials, seed),
        EvalMode::Auto { trials, seed } => {
            if config.subpools <= EXACT_MAX_L && config.is_noiseless() {
                exact(config, pair)
            } else {
                monte_carlo(config, pair, trials, seed)
            }
        }
    }
}

fn prefix_sums(bits: impl Iterator<Item = bool>, out: &mut Vec<u32>) {
    out.clear();
    out.push(0);
    let mut total = 0;
    for b in bits {
        total += b as u32;
        out.push(total);
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct ExactTally {
    pf: f64,
    pd: f64,
    tests_h0: f64,
    tests_h1: f64,
    /// Total probability mass visited under each hypothesis; dividing by it
    /// keeps certain events at exactly 1 despite rounding in the weights.
    mass0: f64,
    mass1: f64,
}

impl Tally for ExactTally {
    fn merge(&mut self, other: Self) {
        self.pf += other.pf;
        self.pd += other.pd;
        self.tests_h0 += other.tests_h0;
        self.tests_h1 += other.tests_h1;
        self.mass0 += other.mass0;
        self.mass1 += other.mass1;
    }
}

fn exact(config: &ClassifierConfig, pair: &HypothesisPair) -> Result<ClassifierReport> {
    let l = config.subpools;
    if l > EXACT_MAX_L {
        return Err(Error::ModeMismatch(format!(
            "exact enumeration is limited to L ≤ {EXACT_MAX_L}, got L = {l}"
        )));
    }
    if !config.is_noiseless() {
        return Err(Error::ModeMismatch("exact enumeration requires rho = 1".into()));
    }
    let (q0, q1) = pair.subpool_qs(config.pool_size, l)?;
    // P(x) under each hypothesis depends only on the weight of x.
    let weights = |q: f64| -> Vec<f64> {
        (0..=l)
            .map(|n| q.powi(n as i32) * (1.0 - q).powi((l - n) as i32))
            .collect()
    };
    let (w0, w1) = (weights(q0), weights(q1));
    let tree = Arc::new(SplitTree::new(l));
    let tally: ExactTally = montecarlo::enumerate(1u64 << l, |index, tally: &mut ExactTally| {
        let mut prefix = Vec::with_capacity(l + 1);
        prefix_sums((0..l).map(|k| (index >> k) & 1 == 1), &mut prefix);
        let mut classifier = SplittingClassifier::with_tree(Arc::clone(&tree), config);
        let (decision, tests) = classifier.run_on_prefix(&prefix, || true);
        let n = index.count_ones() as usize;
        if decision == Hypothesis::H1 {
            tally.pf += w0[n];
            tally.pd += w1[n];
        }
        tally.tests_h0 += w0[n] * tests as f64;
        tally.tests_h1 += w1[n] * tests as f64;
        tally.mass0 += w0[n];
        tally.mass1 += w1[n];
        Ok(())
    })?;
    let tally = ExactTally {
        pf: tally.pf / tally.mass0,
        pd: tally.pd / tally.mass1,
        tests_h0: tally.tests_h0 / tally.mass0,
        tests_h1: tally.tests_h1 / tally.mass1,
        ..tally
    };
    let closed = config.closed_form_rates(pair)?.expect("noiseless has a closed form");
    if (closed.pf - tally.pf).abs() > CLOSED_FORM_TOL || (closed.pd - tally.pd).abs() > CLOSED_FORM_TOL {
        return Err(Error::Numerical(format!(
            "enumerated error rates ({}, {}) disagree with the binomial tails ({}, {})",
            tally.pf, tally.pd, closed.pf, closed.pd
        )));
    }
    Ok(ClassifierReport {
        pair: *pair,
        config: *config,
        pf: tally.pf,
        pd: tally.pd,
        expected_tests: pair.pi0 * tally.tests_h0 + pair.pi1 * tally.tests_h1,
        expected_tests_h0: tally.tests_h0,
        expected_tests_h1: tally.tests_h1,
        method: ClassifierMethod::ExactEnumeration,
        closed_form: Some(closed),
    })
}

#[derive(Clone, Copy, Debug, Default)]
struct ArmTally {
    decided_h1: u64,
    tests: Moments,
}

impl Tally for ArmTally {
    fn merge(&mut self, other: Self) {
        self.decided_h1 += other.decided_h1;
        self.tests.merge(other.tests);
    }
}

impl ArmTally {
    fn rate(&self) -> f64 {
        self.decided_h1 as f64 / self.tests.count as f64
    }

    fn rate_std_error(&self) -> f64 {
        let r = self.rate();
        (r * (1.0 - r) / self.tests.count as f64).sqrt()
    }
}

/// Infects each of `people` persons independently with probability `p` and
/// marks the subpools (consecutive blocks of `size`) that receive one. Uses
/// geometric gaps, and skips the rest of a block once it is marked.
fn sample_subpools(rng: &mut SimRng, p: f64, size: usize, marks: &mut [bool]) {
    marks.fill(false);
    if p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        marks.fill(true);
        return;
    }
    let people = size * marks.len();
    let log_healthy = (-p).ln_1p();
    let mut position = 0usize;
    loop {
        let u: f64 = rng.random();
        let gap = ((-u).ln_1p() / log_healthy).floor();
        if gap >= (people - position) as f64 {
            return;
        }
        position += gap as usize;
        let block = position / size;
        marks[block] = true;
        position = (block + 1) * size;
        if position >= people {
            return;
        }
    }
}

fn run_arm(
    config: &ClassifierConfig,
    tree: &Arc<SplitTree>,
    p: f64,
    trials: u64,
    seed: u64,
    arm: u64,
) -> Result<ArmTally> {
    let l = config.subpools;
    let size = config.subpool_size();
    let rho = config.sensitivity;
    let noiseless = config.is_noiseless();
    montecarlo::run_batched(trials, seed, arm, |rng, tally: &mut ArmTally| {
        let mut marks = vec![false; l];
        sample_subpools(rng, p, size, &mut marks);
        if !noiseless && config.noise == NoiseSemantics::PerSubpool {
            for m in marks.iter_mut().filter(|m| **m) {
                *m = rng.random::<f64>() < rho;
            }
        }
        let mut prefix = Vec::with_capacity(l + 1);
        prefix_sums(marks.iter().copied(), &mut prefix);
        let mut classifier = SplittingClassifier::with_tree(Arc::clone(tree), config);
        let (decision, tests) = if noiseless || config.noise == NoiseSemantics::PerSubpool {
            classifier.run_on_prefix(&prefix, || true)
        } else {
            classifier.run_on_prefix(&prefix, || rng.random::<f64>() < rho)
        };
        tally.decided_h1 += (decision == Hypothesis::H1) as u64;
        tally.tests.push(tests as f64);
        Ok(())
    })
}

fn monte_carlo(config: &ClassifierConfig, pair: &HypothesisPair, trials: u64, seed: u64) -> Result<ClassifierReport> {
    if trials < MIN_TRIALS {
        return Err(Error::ModeMismatch(format!(
            "Monte Carlo needs at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    let tree = Arc::new(SplitTree::new(config.subpools));
    let h0 = run_arm(config, &tree, pair.p0, trials, seed, 0)?;
    let h1 = run_arm(config, &tree, pair.p1, trials, seed, 1)?;
    let (pi0, pi1) = (pair.pi0, pair.pi1);
    let tests_se = ((pi0 * h0.tests.std_error()).powi(2) + (pi1 * h1.tests.std_error()).powi(2)).sqrt();
    Ok(ClassifierReport {
        pair: *pair,
        config: *config,
        pf: h0.rate(),
        pd: h1.rate(),
        expected_tests: pi0 * h0.tests.mean() + pi1 * h1.tests.mean(),
        expected_tests_h0: h0.tests.mean(),
        expected_tests_h1: h1.tests.mean(),
        method: ClassifierMethod::MonteCarlo {
            trials,
            seed,
            std_errors: ClassifierStdErrors {
                pf: h0.rate_std_error(),
                pd: h1.rate_std_error(),
                expected_tests: tests_se,
            },
        },
        closed_form: config.closed_form_rates(pair)?,
    })
}

/// One evaluated operating point of an ROC sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocRow {
    pub report: ClassifierReport,
}

/// Evaluates `base` at every pool size in `pool_sizes` (an ROC curve over N).
pub fn roc_sweep(
    pair: &HypothesisPair,
    base: &ClassifierConfig,
    pool_sizes: &[usize],
    mode: EvalMode,
) -> Result<Vec<RocRow>> {
    if pool_sizes.is_empty() {
        return Err(Error::input("pool-size grid must be nonempty"));
    }
    pool_sizes
        .iter()
        .map(|&n| {
            let config = ClassifierConfig { pool_size: n, ..*base };
            Ok(RocRow {
                report: evaluate(&config, pair, mode)?,
            })
        })
        .collect()
}
