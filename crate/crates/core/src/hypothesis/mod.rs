//! Classifying a region's infection rate as low (H0) or high (H1) from one
//! pooled sample of `N` people split into `L` subpools.

mod classifier;
mod eval;
mod rates;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::check_probability;
use crate::error::{Error, Result};

pub use classifier::{classify, CountBounds, SplittingClassifier};
pub use eval::{evaluate, roc_sweep, ClassifierMethod, ClassifierReport, ClassifierStdErrors, RocRow, EXACT_MAX_L};
pub use rates::{binomial_upper_tail, closed_form_pf_pd, llr, subpool_q, threshold_v, ErrorRates, HypothesisPair};
pub use tree::{tree_depth, Node, NodeId, SplitTree};

/// Subpool status vector: bit `k` is set iff subpool `k` holds an infected person.
pub type SubpoolVector = crate::domain::InfectionVector;

/// How imperfect sensitivity acts on the classifier's tests.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSemantics {
    /// Every administered test on a contaminated pool is positive independently
    /// with probability ρ.
    #[default]
    PerTest,
    /// Each infected subpool is detectable with probability ρ, once; all tests
    /// then agree with the detectable subpools.
    PerSubpool,
}

impl fmt::Display for NoiseSemantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseSemantics::PerTest => "per-test",
            NoiseSemantics::PerSubpool => "per-subpool",
        })
    }
}

impl FromStr for NoiseSemantics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "per-test" | "test" => Ok(NoiseSemantics::PerTest),
            "per-subpool" | "subpool" => Ok(NoiseSemantics::PerSubpool),
            _ => Err(Error::input(format!(
                "unknown noise semantics {s:?} (per-test, per-subpool)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// People in the pooled sample.
    #[serde(rename = "N")]
    pub pool_size: usize,
    #[serde(rename = "L")]
    pub subpools: usize,
    /// Decide H0 iff at most this many subpools are infected.
    #[serde(rename = "V")]
    pub threshold: i64,
    /// Tree level of the first tests; 0 tests the whole sample first.
    #[serde(rename = "tau")]
    pub start_level: usize,
    #[serde(rename = "rho")]
    pub sensitivity: f64,
    #[serde(default)]
    pub noise: NoiseSemantics,
}

impl ClassifierConfig {
    pub fn noiseless(pool_size: usize, subpools: usize, threshold: i64, start_level: usize) -> Self {
        Self {
            pool_size,
            subpools,
            threshold,
            start_level,
            sensitivity: 1.0,
            noise: NoiseSemantics::PerTest,
        }
    }

    pub fn with_sensitivity(mut self, sensitivity: f64) -> Self {
        self.sensitivity = sensitivity;
        self
    }

    pub fn subpool_size(&self) -> usize {
        self.pool_size / self.subpools.max(1)
    }

    pub fn is_noiseless(&self) -> bool {
        self.sensitivity >= 1.0
    }

    /// Binomial-tail P_F/P_D of this configuration, available whenever the
    /// decision depends only on the observed infected-subpool count: always
    /// when noiseless, and under per-subpool noise (with `q·ρ`).
    pub fn closed_form_rates(&self, pair: &HypothesisPair) -> Result<Option<ErrorRates>> {
        self.validate()?;
        let (q0, q1) = pair.subpool_qs(self.pool_size, self.subpools)?;
        let rho = match self.noise {
            _ if self.is_noiseless() => 1.0,
            NoiseSemantics::PerSubpool => self.sensitivity,
            NoiseSemantics::PerTest => return Ok(None),
        };
        closed_form_pf_pd(q0 * rho, q1 * rho, self.subpools, self.threshold).map(Some)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, l) = (self.pool_size, self.subpools);
        if l < 2 {
            return Err(Error::input(format!("L must be at least 2, got {l}")));
        }
        if n == 0 || n % l != 0 {
            return Err(Error::input(format!("L = {l} must divide N = {n}")));
        }
        let depth = tree_depth(l);
        if self.start_level > depth {
            return Err(Error::input(format!(
                "tau = {} exceeds the tree depth {depth} for L = {l}",
                self.start_level
            )));
        }
        if self.threshold < -1 || self.threshold >= l as i64 {
            return Err(Error::input(format!(
                "V = {} must satisfy -1 ≤ V < L = {l}",
                self.threshold
            )));
        }
        check_probability("rho", self.sensitivity)
    }
}
