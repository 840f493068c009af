//! Session state and the pure transition function driving it. The store and
//! the HTTP layer only persist and expose what happens here.

use std::collections::HashSet;

use chrono::{DateTime, Utc};
use poolscreen_core::hypothesis::ErrorRates;
use poolscreen_core::{
    ClassifierConfig, HypothesisPair, Pool, Protocol, SplittingClassifier, Stage, StrategySpec, StrategyStepper,
    TestOutcome, Verdict,
};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::error::{Result, SessionError};

/// What a session runs: an identification strategy over individual people, or
/// the pooled classifier over subpools.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProtocolSpec {
    Identify {
        strategy: StrategySpec,
    },
    Classify {
        config: ClassifierConfig,
        pair: HypothesisPair,
    },
}

impl ProtocolSpec {
    pub fn validate(&self) -> Result<()> {
        let checked = match self {
            ProtocolSpec::Identify { strategy } => strategy.validate(),
            ProtocolSpec::Classify { config, pair } => config.validate().and(pair.validate()),
        };
        checked.map_err(|e| SessionError::InvalidSpec(e.to_string()))
    }

    /// What pool members index.
    pub fn units(&self) -> Units {
        match self {
            ProtocolSpec::Identify { .. } => Units::People,
            ProtocolSpec::Classify { .. } => Units::Subpools,
        }
    }

    fn machine(&self) -> Result<Machine> {
        self.validate()?;
        Ok(match self {
            ProtocolSpec::Identify { strategy } => Machine::Strategy(
                strategy
                    .stepper()
                    .map_err(|e| SessionError::InvalidSpec(e.to_string()))?,
            ),
            ProtocolSpec::Classify { config, .. } => Machine::Classifier(
                SplittingClassifier::new(config).map_err(|e| SessionError::InvalidSpec(e.to_string()))?,
            ),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    People,
    Subpools,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    AwaitingResults,
    Concluded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingTest {
    pub test_id: u64,
    pub stage: usize,
    /// 0-based member indices.
    pub pool: Pool,
    /// 1-based lab label such as `{1,2,3,4}`.
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedTest {
    pub test_id: u64,
    pub stage: usize,
    pub pool: Pool,
    pub outcome: TestOutcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_id: u64,
    pub outcome: TestOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionVerdict {
    pub verdict: Verdict,
    /// `{2,4}` (1-based) for identification, `H0`/`H1` for classification.
    pub label: String,
    pub tests: usize,
    /// Operating point of the classifier that produced the decision, when it
    /// has a closed form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_rates: Option<ErrorRates>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: Uuid,
    pub protocol: ProtocolSpec,
    pub units: Units,
    pub status: SessionStatus,
    pub pending: Vec<PendingTest>,
    pub history: Vec<RecordedTest>,
    pub verdict: Option<SessionVerdict>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

/// One line of a session's log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created {
        id: Uuid,
        protocol: ProtocolSpec,
        at: DateTime<Utc>,
    },
    Submitted {
        results: Vec<TestResult>,
        at: DateTime<Utc>,
    },
    Deleted {
        at: DateTime<Utc>,
    },
}

#[derive(Clone, Debug)]
enum Machine {
    Strategy(StrategyStepper),
    Classifier(SplittingClassifier),
}

impl Machine {
    fn protocol(&mut self) -> &mut dyn Protocol {
        match self {
            Machine::Strategy(s) => s,
            Machine::Classifier(c) => c,
        }
    }
}

/// A session together with the state machine behind it.
#[derive(Clone, Debug)]
pub struct Engine {
    session: Session,
    machine: Machine,
}

impl Engine {
    pub fn create(id: Uuid, protocol: ProtocolSpec, at: DateTime<Utc>) -> Result<Self> {
        let machine = protocol.machine()?;
        let mut engine = Self {
            session: Session {
                id,
                protocol,
                units: protocol.units(),
                status: SessionStatus::AwaitingResults,
                pending: Vec::new(),
                history: Vec::new(),
                verdict: None,
                created_at: at,
                updated_at: at,
            },
            machine,
        };
        engine.refresh(0)?;
        Ok(engine)
    }

    /// Rebuilds a session from its log. `None` if the log ends with a deletion.
    pub fn replay(events: &[Event]) -> Result<Option<Self>> {
        let mut events = events.iter();
        let Some(Event::Created { id, protocol, at }) = events.next() else {
            return Err(SessionError::storage("log does not start with a creation event"));
        };
        let mut engine = Self::create(*id, *protocol, *at)?;
        for event in events {
            match event {
                Event::Created { .. } => return Err(SessionError::storage("duplicate creation event")),
                Event::Submitted { results, at } => engine = engine.submit(results, *at)?,
                Event::Deleted { .. } => return Ok(None),
            }
        }
        Ok(Some(engine))
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    /// Applies one full stage of results, returning the advanced engine; `self`
    /// is left untouched so a rejected submission changes nothing.
    pub fn submit(&self, results: &[TestResult], at: DateTime<Utc>) -> Result<Self> {
        let session = &self.session;
        if session.status == SessionStatus::Concluded {
            return Err(SessionError::Concluded(session.id));
        }
        let first = session.pending.first().map_or(0, |t| t.test_id);
        let next = first + session.pending.len() as u64;
        let mut seen = HashSet::with_capacity(results.len());
        for r in results {
            if !seen.insert(r.test_id) {
                return Err(SessionError::DuplicateTestId(r.test_id));
            }
            if r.test_id < first {
                return Err(SessionError::StaleTestId(r.test_id));
            }
            if r.test_id >= next {
                return Err(SessionError::UnknownTestId(r.test_id));
            }
        }
        if results.len() != session.pending.len() {
            return Err(SessionError::PartialStage {
                expected: session.pending.len(),
                submitted: results.len(),
            });
        }
        let mut outcomes = vec![TestOutcome::Negative; results.len()];
        for r in results {
            outcomes[(r.test_id - first) as usize] = r.outcome;
        }

        let mut advanced = self.clone();
        advanced
            .machine
            .protocol()
            .submit(&outcomes)
            .map_err(SessionError::Rejected)?;
        let stage = session.pending.first().map_or(0, |t| t.stage);
        let answered = std::mem::take(&mut advanced.session.pending);
        advanced
            .session
            .history
            .extend(answered.into_iter().zip(outcomes).map(|(t, outcome)| RecordedTest {
                test_id: t.test_id,
                stage: t.stage,
                pool: t.pool,
                outcome,
            }));
        advanced.session.updated_at = at;
        advanced.refresh(stage + 1)?;
        Ok(advanced)
    }

    /// Pulls the machine's current stage into the session view.
    fn refresh(&mut self, stage: usize) -> Result<()> {
        let next_id = self.session.history.len() as u64;
        match self.machine.protocol().stage() {
            Stage::Pending(pools) => {
                if pools.is_empty() {
                    return Err(SessionError::storage("protocol prescribed an empty stage"));
                }
                self.session.status = SessionStatus::AwaitingResults;
                self.session.pending = pools
                    .into_iter()
                    .enumerate()
                    .map(|(i, pool)| PendingTest {
                        test_id: next_id + i as u64,
                        stage,
                        label: pool.label(),
                        pool,
                    })
                    .collect();
            }
            Stage::Concluded(verdict) => {
                self.session.status = SessionStatus::Concluded;
                self.session.pending.clear();
                self.session.verdict = Some(self.describe(verdict)?);
            }
        }
        Ok(())
    }

    fn describe(&self, verdict: Verdict) -> Result<SessionVerdict> {
        let (label, error_rates) = match (&verdict, &self.session.protocol) {
            (Verdict::IdentifiedSet(set), _) => {
                let members: Vec<String> = set.iter().map(|k| (k + 1).to_string()).collect();
                (format!("{{{}}}", members.join(",")), None)
            }
            (Verdict::HypothesisDecision(h), ProtocolSpec::Classify { config, pair }) => {
                let rates = config
                    .closed_form_rates(pair)
                    .map_err(|e| SessionError::InvalidSpec(e.to_string()))?;
                (h.to_string(), rates)
            }
            (Verdict::HypothesisDecision(h), ProtocolSpec::Identify { .. }) => (h.to_string(), None),
        };
        Ok(SessionVerdict {
            verdict,
            label,
            tests: self.session.history.len(),
            error_rates,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn results(first: u64, outcomes: &str) -> Vec<TestResult> {
        outcomes
            .chars()
            .enumerate()
            .map(|(i, c)| TestResult {
                test_id: first + i as u64,
                outcome: TestOutcome::from_bool(c == 'P'),
            })
            .collect()
    }

    fn soms() -> Engine {
        Engine::create(
            Uuid::nil(),
            ProtocolSpec::Identify {
                strategy: StrategySpec::Soms4,
            },
            Utc::now(),
        )
        .unwrap()
    }

    #[test]
    fn rejected_submission_leaves_engine_untouched() {
        let engine = soms();
        let before = engine.session().clone();
        assert!(matches!(
            engine.submit(&results(5, "N"), Utc::now()),
            Err(SessionError::UnknownTestId(5))
        ));
        assert!(matches!(
            engine.submit(&[], Utc::now()),
            Err(SessionError::PartialStage { .. })
        ));
        assert_eq!(engine.session(), &before);
    }

    #[test]
    fn stage_ids_are_dense() {
        let engine = soms().submit(&results(0, "P"), Utc::now()).unwrap();
        let ids: Vec<u64> = engine.session().pending.iter().map(|t| t.test_id).collect();
        assert_eq!(ids, (1..=ids.len() as u64).collect::<Vec<_>>());
        assert!(ids.iter().all(|_| engine.session().pending[0].stage == 1));
        assert!(matches!(
            engine.submit(&results(0, "P"), Utc::now()),
            Err(SessionError::StaleTestId(0))
        ));
    }

    #[test]
    fn replay_stops_at_deletion() {
        let at = Utc::now();
        let created = Event::Created {
            id: Uuid::nil(),
            protocol: ProtocolSpec::Identify {
                strategy: StrategySpec::Soms4,
            },
            at,
        };
        assert!(Engine::replay(std::slice::from_ref(&created)).unwrap().is_some());
        assert!(Engine::replay(&[created, Event::Deleted { at }]).unwrap().is_none());
        assert!(Engine::replay(&[]).is_err());
    }
}
