//! Level-synchronous binary splitting that stops as soon as the count of
//! infected subpools is known to be above or at most the threshold.

use std::sync::Arc;

use rand::Rng;

use super::tree::{Node, NodeId, SplitTree};
use super::{ClassifierConfig, NoiseSemantics};
use crate::domain::{Hypothesis, InfectionVector, NoiseModel, Pool, StrategyTrace, TestOutcome, Verdict};
use crate::engine::{self, expect_outcomes, Protocol, Stage};
use crate::error::{Error, Result};
use crate::rng;

/// Bounds on the number of infected subpools implied by the outcomes so far.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CountBounds {
    pub lower: usize,
    pub upper: usize,
}

#[derive(Clone, Debug)]
pub struct SplittingClassifier {
    tree: Arc<SplitTree>,
    threshold: i64,
    start_level: usize,
    pending: Vec<NodeId>,
    positives: Vec<NodeId>,
    confirmed: usize,
    /// Subpools inside pools not yet tested (only before the first stage).
    untested: usize,
    decision: Option<Hypothesis>,
}

impl SplittingClassifier {
    pub fn new(config: &ClassifierConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self::with_tree(Arc::new(SplitTree::new(config.subpools)), config))
    }

    /// Shares a prebuilt tree; `config` must already be validated for it.
    pub(crate) fn with_tree(tree: Arc<SplitTree>, config: &ClassifierConfig) -> Self {
        let mut classifier = Self {
            tree,
            threshold: config.threshold,
            start_level: config.start_level,
            pending: Vec::new(),
            positives: Vec::new(),
            confirmed: 0,
            untested: 0,
            decision: None,
        };
        classifier.reset();
        classifier
    }

    /// Back to the first stage.
    pub fn reset(&mut self) {
        self.pending.clear();
        self.pending.extend_from_slice(self.tree.frontier(self.start_level));
        self.positives.clear();
        self.confirmed = 0;
        self.untested = self.tree.subpools();
        self.decision = None;
        self.decide();
    }

    pub fn tree(&self) -> &SplitTree {
        &self.tree
    }

    pub fn decision(&self) -> Option<Hypothesis> {
        self.decision
    }

    pub fn bounds(&self) -> CountBounds {
        let inside: usize = self.positives.iter().map(|&id| self.tree.node(id).len()).sum();
        CountBounds {
            lower: self.confirmed + self.positives.len(),
            upper: self.confirmed + inside + self.untested,
        }
    }

    /// Subpool ranges of the pending pools.
    pub fn pending_nodes(&self) -> impl Iterator<Item = &Node> + '_ {
        self.pending.iter().map(|&id| self.tree.node(id))
    }

    fn decide(&mut self) {
        let CountBounds { lower, upper } = self.bounds();
        if lower as i64 > self.threshold {
            self.decision = Some(Hypothesis::H1);
        } else if upper as i64 <= self.threshold {
            self.decision = Some(Hypothesis::H0);
        }
    }

    /// Resolves the pending stage with `outcome` per pool and returns the number
    /// of tests it took.
    pub(crate) fn apply_stage(&mut self, mut outcome: impl FnMut(&Node) -> bool) -> usize {
        let tested = self.pending.len();
        let tree = Arc::clone(&self.tree);
        self.positives.clear();
        for &id in &self.pending {
            let node = tree.node(id);
            if outcome(node) {
                if node.len() == 1 {
                    self.confirmed += 1;
                } else {
                    self.positives.push(id);
                }
            }
        }
        self.untested = 0;
        self.pending.clear();
        self.decide();
        if self.decision.is_none() {
            for &id in &self.positives {
                let (left, right) = tree.node(id).children.expect("multi-subpool pools have children");
                self.pending.push(left);
                self.pending.push(right);
            }
        }
        tested
    }

    /// Runs to a decision against subpool vector `prefix` (prefix sums of
    /// infected subpools), each positive pool test detected iff `detect()`.
    /// Returns the decision and the number of tests.
    pub(crate) fn run_on_prefix(&mut self, prefix: &[u32], mut detect: impl FnMut() -> bool) -> (Hypothesis, usize) {
        let mut tests = 0;
        loop {
            if let Some(decision) = self.decision {
                return (decision, tests);
            }
            tests += self.apply_stage(|node| prefix[node.end] > prefix[node.start] && detect());
        }
    }
}

impl Protocol for SplittingClassifier {
    fn population(&self) -> usize {
        self.tree.subpools()
    }

    fn stage(&self) -> Stage {
        match self.decision {
            Some(h) => Stage::Concluded(Verdict::HypothesisDecision(h)),
            None => Stage::Pending(
                self.pending_nodes()
                    .map(|node| Pool::range(node.start, node.end).expect("nonempty"))
                    .collect(),
            ),
        }
    }

    fn submit(&mut self, outcomes: &[TestOutcome]) -> Result<()> {
        if self.decision.is_some() {
            return Err(Error::input("classification already concluded"));
        }
        expect_outcomes(self.pending.len(), outcomes)?;
        let mut it = outcomes.iter();
        self.apply_stage(|_| it.next().expect("length checked").is_positive());
        Ok(())
    }

    fn test_budget(&self) -> usize {
        2 * self.tree.subpools() - 1 + self.tree.frontier(self.start_level).len()
    }
}

/// Classifies subpool vector `x`. Noise draws come from stream `(seed, 0)`:
/// per administered test, or once per infected subpool under
/// [`NoiseSemantics::PerSubpool`].
pub fn classify(x: &InfectionVector, config: &ClassifierConfig, seed: u64) -> Result<StrategyTrace> {
    config.validate()?;
    if x.len() != config.subpools {
        return Err(Error::input(format!(
            "subpool vector has length {}, configuration has L = {}",
            x.len(),
            config.subpools
        )));
    }
    let mut classifier = SplittingClassifier::new(config)?;
    let noise = NoiseModel::new(config.sensitivity)?;
    if noise.is_noiseless() {
        return engine::run_noiseless(&mut classifier, x);
    }
    let mut rng = rng::stream(seed, 0);
    match config.noise {
        NoiseSemantics::PerTest => engine::run_protocol(&mut classifier, x, noise, &mut rng),
        NoiseSemantics::PerSubpool => {
            let observed = x
                .bits()
                .iter()
                .map(|&infected| infected && rng.random::<f64>() < noise.sensitivity)
                .collect();
            engine::run_noiseless(&mut classifier, &InfectionVector::new(observed)?)
        }
    }
}
