//! The execution contract shared by every strategy: a protocol prescribes a
//! batch of pools, receives their outcomes, and eventually concludes.

use rand::Rng;

use crate::domain::{AdministeredTest, InfectionVector, NoiseModel, Pool, StrategyTrace, TestOutcome, Verdict};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Pools to be tested in parallel before the protocol can advance.
    Pending(Vec<Pool>),
    Concluded(Verdict),
}

/// A deterministic, stage-wise adaptive testing policy.
pub trait Protocol {
    /// Number of units (people or subpools) the protocol covers.
    fn population(&self) -> usize;

    fn stage(&self) -> Stage;

    /// Feeds the outcomes of every pending pool, in prescription order.
    fn submit(&mut self, outcomes: &[TestOutcome]) -> Result<()>;

    /// Upper bound on administered tests for any outcome sequence.
    fn test_budget(&self) -> usize {
        4 * self.population()
    }
}

/// Outcome of testing `pool` against `truth`: negative if nobody in the pool
/// is infected, otherwise positive iff `draw < sensitivity`.
pub fn oracle_test(pool: &Pool, truth: &InfectionVector, noise: NoiseModel, draw: f64) -> Result<TestOutcome> {
    pool.check_against(truth.len())?;
    let contaminated = pool.members().iter().any(|&k| truth.is_infected(k));
    Ok(TestOutcome::from_bool(
        contaminated && (noise.is_noiseless() || draw < noise.sensitivity),
    ))
}

/// Drives `protocol` to conclusion against `truth`, drawing one noise variate
/// per administered test.
pub fn run_protocol<P, R>(
    protocol: &mut P,
    truth: &InfectionVector,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<StrategyTrace>
where
    P: Protocol + ?Sized,
    R: Rng + ?Sized,
{
    drive(protocol, truth, noise, &mut || rng.random())
}

/// Noiseless run; consumes no randomness.
pub fn run_noiseless<P: Protocol + ?Sized>(protocol: &mut P, truth: &InfectionVector) -> Result<StrategyTrace> {
    drive(protocol, truth, NoiseModel::NOISELESS, &mut || 0.0)
}

fn drive<P: Protocol + ?Sized>(
    protocol: &mut P,
    truth: &InfectionVector,
    noise: NoiseModel,
    draw: &mut dyn FnMut() -> f64,
) -> Result<StrategyTrace> {
    if protocol.population() != truth.len() {
        return Err(Error::input(format!(
            "protocol covers {} units but the truth vector has {}",
            protocol.population(),
            truth.len()
        )));
    }
    let limit = protocol.test_budget();
    let mut tests = Vec::new();
    for stage in 0.. {
        match protocol.stage() {
            Stage::Concluded(verdict) => return Ok(StrategyTrace { tests, verdict }),
            Stage::Pending(pools) => {
                if tests.len() + pools.len() > limit {
                    return Err(Error::NonTermination { limit });
                }
                let mut outcomes = Vec::with_capacity(pools.len());
                for pool in pools {
                    let outcome = oracle_test(&pool, truth, noise, draw())?;
                    outcomes.push(outcome);
                    tests.push(AdministeredTest { stage, pool, outcome });
                }
                protocol.submit(&outcomes)?;
            }
        }
    }
    unreachable!("stage counter is unbounded")
}

pub(crate) fn expect_outcomes(expected: usize, outcomes: &[TestOutcome]) -> Result<()> {
    if outcomes.len() == expected {
        Ok(())
    } else {
        Err(Error::input(format!(
            "stage has {expected} pending test(s) but {} outcome(s) were submitted",
            outcomes.len()
        )))
    }
}
