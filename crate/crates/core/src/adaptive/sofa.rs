//! Sparsity-oblivious fully-adaptive strategy.
//!
//! Each round starts with one test on every unresolved person. A negative
//! clears them all. A positive starts a left-first binary search that extracts
//! exactly one infected person; when a left half tests negative the right half
//! is known to be positive and is not tested. After each extraction the
//! policy compares the number found against `n·p` to pick the next round's
//! action.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::domain::{Pool, TestOutcome, Verdict};
use crate::engine::{expect_outcomes, Protocol, Stage};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SofaAction {
    /// Found count exceeds `n·p`: test all unidentified people at once.
    WholePool,
    /// Otherwise: binary search the unidentified people for one infected.
    BinarySearch,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Phase {
    /// Pending: the whole unresolved set.
    Root,
    /// `current` is known to hold an infected person; pending: its left half.
    Narrowing {
        current: Vec<usize>,
    },
    Done,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SofaStep {
    Test(Pool),
    Done(BTreeSet<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SofaState {
    n: usize,
    expected_infected: f64,
    unresolved: Vec<usize>,
    found: BTreeSet<usize>,
    action: SofaAction,
    phase: Phase,
}

impl SofaState {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("SOFA needs at least one person"));
        }
        crate::domain::check_probability("p", p)?;
        let mut state = Self {
            n,
            expected_infected: n as f64 * p,
            unresolved: (0..n).collect(),
            found: BTreeSet::new(),
            action: SofaAction::BinarySearch,
            phase: Phase::Done,
        };
        state.begin_round();
        Ok(state)
    }

    pub fn found(&self) -> &BTreeSet<usize> {
        &self.found
    }

    pub fn unresolved(&self) -> &[usize] {
        &self.unresolved
    }

    /// Action chosen for the current round.
    pub fn action(&self) -> SofaAction {
        self.action
    }

    fn begin_round(&mut self) {
        if self.unresolved.is_empty() {
            self.phase = Phase::Done;
            return;
        }
        self.action = if self.found.len() as f64 > self.expected_infected {
            SofaAction::WholePool
        } else {
            SofaAction::BinarySearch
        };
        self.phase = Phase::Root;
    }

    fn narrow(&mut self, current: Vec<usize>) {
        if let [only] = current[..] {
            self.found.insert(only);
            self.unresolved.retain(|&k| k != only);
            self.begin_round();
        } else {
            self.phase = Phase::Narrowing { current };
        }
    }

    /// The next pool to test, or the identified set once every person is resolved.
    pub fn next(&self) -> SofaStep {
        match &self.phase {
            Phase::Root => SofaStep::Test(Pool::new(self.unresolved.iter().copied()).expect("nonempty")),
            Phase::Narrowing { current } => {
                let left = &current[..current.len().div_ceil(2)];
                SofaStep::Test(Pool::new(left.iter().copied()).expect("nonempty"))
            }
            Phase::Done => SofaStep::Done(self.found.clone()),
        }
    }

    pub fn apply(&mut self, outcome: TestOutcome) -> Result<()> {
        match std::mem::replace(&mut self.phase, Phase::Done) {
            Phase::Done => Err(Error::input("SOFA already concluded")),
            Phase::Root => {
                if outcome.is_positive() {
                    let current = self.unresolved.clone();
                    self.narrow(current);
                } else {
                    self.unresolved.clear();
                }
                Ok(())
            }
            Phase::Narrowing { mut current } => {
                let right = current.split_off(current.len().div_ceil(2));
                if outcome.is_positive() {
                    self.narrow(current);
                } else {
                    self.unresolved.retain(|k| !current.contains(k));
                    self.narrow(right);
                }
                Ok(())
            }
        }
    }
}

pub fn sofa_next(state: &SofaState) -> SofaStep {
    state.next()
}

impl Protocol for SofaState {
    fn population(&self) -> usize {
        self.n
    }

    fn stage(&self) -> Stage {
        match self.next() {
            SofaStep::Test(pool) => Stage::Pending(vec![pool]),
            SofaStep::Done(set) => Stage::Concluded(Verdict::IdentifiedSet(set)),
        }
    }

    fn submit(&mut self, outcomes: &[TestOutcome]) -> Result<()> {
        if self.phase == Phase::Done {
            return Err(Error::input("SOFA already concluded"));
        }
        expect_outcomes(1, outcomes)?;
        self.apply(outcomes[0])
    }

    fn test_budget(&self) -> usize {
        let depth = usize::BITS - (self.n - 1).leading_zeros();
        self.n * (1 + depth as usize) + 1
    }
}
