//! Pooled testing: identifying infected individuals with fewer tests than
//! testing everyone, and classifying a population's infection rate from a
//! single pooled sample.

pub mod adaptive;
pub mod domain;
pub mod engine;
pub mod error;
pub mod hypothesis;
pub mod montecarlo;
pub mod nonadaptive;
pub mod report;
pub mod rng;
pub mod worstcase;

pub use adaptive::{expected_tests, run_strategy, EvalMode, EvalReport, StrategyKind, StrategySpec, StrategyStepper};
pub use domain::{
    AdministeredTest, Hypothesis, InfectionVector, NoiseModel, Pool, PriorModel, StrategyTrace, TestOutcome, Verdict,
};
pub use engine::{Protocol, Stage};
pub use error::{Error, Result};
pub use hypothesis::{ClassifierConfig, ClassifierReport, HypothesisPair, NoiseSemantics, SplittingClassifier};
pub use nonadaptive::TestingMatrix;
pub use worstcase::{CorrelationLp, LpSolution};

/// Engine version recorded alongside generated tables.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
