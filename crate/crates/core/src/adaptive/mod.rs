//! Adaptive identification strategies and their expected test counts.

mod eval;
mod halving;
mod sofa;
mod soms;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{check_probability, InfectionVector, NoiseModel, Pool, StrategyTrace, TestOutcome, Verdict};
use crate::engine::{self, expect_outcomes, Protocol, Stage};
use crate::error::{Error, Result};
use crate::rng;

pub use eval::{
    expected_tests, sweep_tests_per_person, EvalMethod, EvalMode, EvalReport, SweepRow, EXACT_MAX_N, MIN_TRIALS,
};
pub use halving::halving4_next;
pub use sofa::{sofa_next, SofaAction, SofaState, SofaStep};
pub use soms::soms4_next;

/// Largest population SOFA accepts.
pub const SOFA_MAX_N: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Individual,
    Halving4,
    Soms4,
    Sofa,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Individual,
        StrategyKind::Halving4,
        StrategyKind::Soms4,
        StrategyKind::Sofa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Individual => "individual",
            StrategyKind::Halving4 => "halving4",
            StrategyKind::Soms4 => "soms4",
            StrategyKind::Sofa => "sofa",
        }
    }

    /// The member of this family for population `n`; `p` is SOFA's design prevalence.
    pub fn build(self, n: usize, p: f64) -> Result<StrategySpec> {
        let spec = match self {
            StrategyKind::Individual => StrategySpec::Individual { n },
            StrategyKind::Halving4 => StrategySpec::Halving4,
            StrategyKind::Soms4 => StrategySpec::Soms4,
            StrategyKind::Sofa => StrategySpec::Sofa { n, p },
        };
        if spec.n() != n {
            return Err(Error::input(format!(
                "{} is only defined for n = {}",
                self.name(),
                spec.n()
            )));
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::input(format!("unknown strategy {s:?} (individual, halving4, soms4, sofa)")))
    }
}

/// A fully specified identification strategy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StrategySpec {
    Individual {
        n: usize,
    },
    Halving4,
    Soms4,
    /// `p` is the design prevalence the policy compares against.
    Sofa {
        n: usize,
        p: f64,
    },
}

impl StrategySpec {
    pub fn kind(&self) -> StrategyKind {
        match self {
            StrategySpec::Individual { .. } => StrategyKind::Individual,
            StrategySpec::Halving4 => StrategyKind::Halving4,
            StrategySpec::Soms4 => StrategyKind::Soms4,
            StrategySpec::Sofa { .. } => StrategyKind::Sofa,
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            StrategySpec::Individual { n } | StrategySpec::Sofa { n, .. } => n,
            StrategySpec::Halving4 | StrategySpec::Soms4 => 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StrategySpec::Individual { n: 0 } => Err(Error::input("n must be at least 1")),
            StrategySpec::Sofa { n, p } => {
                if !(1..=SOFA_MAX_N).contains(&n) {
                    return Err(Error::input(format!("SOFA requires 1 ≤ n ≤ {SOFA_MAX_N}, got {n}")));
                }
                check_probability("p", p)
            }
            _ => Ok(()),
        }
    }

    pub fn stepper(&self) -> Result<StrategyStepper> {
        self.validate()?;
        Ok(match *self {
            StrategySpec::Individual { n } => StrategyStepper::Individual { n, done: None },
            StrategySpec::Halving4 => StrategyStepper::Replay {
                next: halving4_next,
                history: Vec::new(),
            },
            StrategySpec::Soms4 => StrategyStepper::Replay {
                next: soms4_next,
                history: Vec::new(),
            },
            StrategySpec::Sofa { n, p } => StrategyStepper::Sofa(SofaState::new(n, p)?),
        })
    }
}

/// Live state of one run of a [`StrategySpec`].
#[derive(Clone, Debug)]
pub enum StrategyStepper {
    /// One parallel stage of singleton tests.
    Individual {
        n: usize,
        done: Option<Verdict>,
    },
    /// Flowchart strategies that are pure functions of the outcome history.
    Replay {
        next: fn(&[TestOutcome]) -> Result<Stage>,
        history: Vec<TestOutcome>,
    },
    Sofa(SofaState),
}

impl Protocol for StrategyStepper {
    fn population(&self) -> usize {
        match self {
            StrategyStepper::Individual { n, .. } => *n,
            StrategyStepper::Replay { .. } => 4,
            StrategyStepper::Sofa(s) => s.population(),
        }
    }

    fn stage(&self) -> Stage {
        match self {
            StrategyStepper::Individual { n, done } => match done {
                Some(v) => Stage::Concluded(v.clone()),
                None => Stage::Pending((0..*n).map(Pool::singleton).collect()),
            },
            StrategyStepper::Replay { next, history } => next(history).expect("history was validated on submission"),
            StrategyStepper::Sofa(s) => s.stage(),
        }
    }

    fn submit(&mut self, outcomes: &[TestOutcome]) -> Result<()> {
        match self {
            StrategyStepper::Individual { n, done } => {
                if done.is_some() {
                    return Err(Error::input("individual testing already concluded"));
                }
                expect_outcomes(*n, outcomes)?;
                let infected = (0..*n).filter(|&k| outcomes[k].is_positive()).collect();
                *done = Some(Verdict::IdentifiedSet(infected));
                Ok(())
            }
            StrategyStepper::Replay { next, history } => {
                let Stage::Pending(pools) = next(history)? else {
                    return Err(Error::input("strategy already concluded"));
                };
                expect_outcomes(pools.len(), outcomes)?;
                let mut extended = history.clone();
                extended.extend_from_slice(outcomes);
                next(&extended)?;
                *history = extended;
                Ok(())
            }
            StrategyStepper::Sofa(s) => s.submit(outcomes),
        }
    }

    fn test_budget(&self) -> usize {
        match self {
            StrategyStepper::Sofa(s) => s.test_budget(),
            other => 4 * other.population(),
        }
    }
}

/// Runs `strategy` against `truth`; noise draws come from stream `(seed, 0)`.
pub fn run_strategy(
    strategy: &StrategySpec,
    truth: &InfectionVector,
    noise: NoiseModel,
    seed: u64,
) -> Result<StrategyTrace> {
    if strategy.n() != truth.len() {
        return Err(Error::input(format!(
            "strategy is for {} people, truth vector has {}",
            strategy.n(),
            truth.len()
        )));
    }
    let mut stepper = strategy.stepper()?;
    if noise.is_noiseless() {
        engine::run_noiseless(&mut stepper, truth)
    } else {
        engine::run_protocol(&mut stepper, truth, noise, &mut rng::stream(seed, 0))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    fn run(spec: StrategySpec, truth: &str) -> StrategyTrace {
        run_strategy(&spec, &truth.parse().unwrap(), NoiseModel::NOISELESS, 0).unwrap()
    }

    #[test]
    fn soms4_traces() {
        let t = run(StrategySpec::Soms4, "0000");
        assert_eq!(t.test_count(), 1);
        assert_eq!(t.verdict, Verdict::IdentifiedSet(BTreeSet::new()));

        let t = run(StrategySpec::Soms4, "0100");
        assert_eq!(t.test_count(), 4);
        assert_eq!(t.verdict, Verdict::IdentifiedSet(BTreeSet::from([1])));
        assert_eq!(t.stages(), 2);
    }

    #[test]
    fn individual_costs_n() {
        let t = run(StrategySpec::Individual { n: 6 }, "010011");
        assert_eq!(t.test_count(), 6);
        assert_eq!(t.verdict, Verdict::IdentifiedSet(BTreeSet::from([1, 4, 5])));
    }

    #[test]
    fn sofa_example_traces() {
        let sofa = StrategySpec::Sofa { n: 4, p: 0.05 };
        assert_eq!(run(sofa, "0000").test_count(), 1);
        let t = run(sofa, "0001");
        assert_eq!(t.test_count(), 3);
        let pools: Vec<Vec<usize>> = t.tests.iter().map(|a| a.pool.members().to_vec()).collect();
        assert_eq!(pools, vec![vec![0, 1, 2, 3], vec![0, 1], vec![2]]);
        assert_eq!(run(sofa, "1000").test_count(), 4);
    }

    #[test]
    fn build_rejects_wrong_population() {
        assert!(StrategyKind::Soms4.build(8, 0.1).is_err());
        assert!(StrategyKind::Sofa.build(0, 0.1).is_err());
        assert!(StrategyKind::Sofa.build(4, 1.5).is_err());
        assert!("SOFA".parse::<StrategyKind>().is_ok());
        assert!("dorfman".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn mismatched_truth_length_is_input_error() {
        let err = run_strategy(&StrategySpec::Soms4, &"000".parse().unwrap(), NoiseModel::NOISELESS, 0).unwrap_err();
        assert!(err.is_input());
    }

    #[test]
    fn replay_stepper_rejects_partial_stage() {
        let mut s = StrategySpec::Soms4.stepper().unwrap();
        s.submit(&[TestOutcome::Positive]).unwrap();
        assert!(s.submit(&[TestOutcome::Positive]).is_err());
        assert!(matches!(s.stage(), Stage::Pending(p) if p.len() == 3));
    }

    #[test]
    fn spec_serializes_with_kind_tag() {
        let json = serde_json::to_string(&StrategySpec::Sofa { n: 4, p: 0.05 }).unwrap();
        assert_eq!(json, r#"{"kind":"sofa","n":4,"p":0.05}"#);
        let back: StrategySpec = serde_json::from_str(r#"{"kind":"soms4"}"#).unwrap();
        assert_eq!(back, StrategySpec::Soms4);
    }
}
