//! Populations, pools, outcomes, priors and noise.
//!
//! Person (or subpool) indices are 0-based everywhere in the engine. The
//! integer encoding of an infection vector is little-endian by person: bit `k`
//! of the index is person `k`'s status.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Ground-truth infection status of `n` people (or `L` subpools).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct InfectionVector {
    bits: Vec<bool>,
}

impl InfectionVector {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::input("infection vector must cover at least one person"));
        }
        Ok(Self { bits })
    }

    pub fn healthy(n: usize) -> Result<Self> {
        Self::new(vec![false; n])
    }

    /// Decodes the little-endian integer encoding; `n` ≤ 64.
    pub fn from_index(index: u64, n: usize) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(Error::input(format!("population size {n} outside 1..=64")));
        }
        if n < 64 && index >> n != 0 {
            return Err(Error::input(format!("index {index} needs more than {n} bits")));
        }
        Ok(Self {
            bits: (0..n).map(|k| (index >> k) & 1 == 1).collect(),
        })
    }

    pub fn from_support(n: usize, infected: &BTreeSet<usize>) -> Result<Self> {
        if let Some(&k) = infected.iter().find(|&&k| k >= n) {
            return Err(Error::input(format!("person {k} out of range for n={n}")));
        }
        Self::new((0..n).map(|k| infected.contains(&k)).collect())
    }

    pub fn index(&self) -> Option<u64> {
        (self.bits.len() <= 64).then(|| {
            self.bits
                .iter()
                .enumerate()
                .fold(0u64, |acc, (k, &b)| acc | ((b as u64) << k))
        })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_infected(&self, k: usize) -> bool {
        self.bits[k]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of infected entries, |x|.
    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
            .collect()
    }
}

impl fmt::Display for InfectionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for InfectionVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::input(format!("invalid bit {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bits)
    }
}

impl Serialize for InfectionVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InfectionVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A nonempty set of person indices whose samples are combined into one assay.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
#[serde(transparent)]
pub struct Pool {
    members: Vec<usize>,
}

impl Pool {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        let len = members.len();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::input("pool must have at least one member"));
        }
        if members.len() != len {
            return Err(Error::input("pool members must be distinct"));
        }
        Ok(Self { members })
    }

    pub fn range(start: usize, end: usize) -> Result<Self> {
        Self::new(start..end)
    }

    pub fn singleton(member: usize) -> Self {
        Self { members: vec![member] }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: usize) -> bool {
        self.members.binary_search(&k).is_ok()
    }

    pub fn check_against(&self, n: usize) -> Result<()> {
        match self.members.last() {
            Some(&max) if max >= n => Err(Error::input(format!(
                "pool member {max} out of range for population of {n}"
            ))),
            _ => Ok(()),
        }
    }

    /// 1-based label as written on lab sheets, e.g. `{1,2,3,4}`.
    pub fn label(&self) -> String {
        let inner: Vec<String> = self.members.iter().map(|k| (k + 1).to_string()).collect();
        format!("{{{}}}", inner.join(","))
    }
}

impl<'de> Deserialize<'de> for Pool {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let members = Vec::<usize>::deserialize(deserializer)?;
        Pool::new(members).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Pool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestOutcome {
    Positive,
    Negative,
}

impl TestOutcome {
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            TestOutcome::Positive
        } else {
            TestOutcome::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == TestOutcome::Positive
    }
}

impl fmt::Display for TestOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestOutcome::Positive => "P",
            TestOutcome::Negative => "N",
        })
    }
}

impl FromStr for TestOutcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p" | "pos" | "positive" | "1" => Ok(TestOutcome::Positive),
            "n" | "neg" | "negative" | "0" => Ok(TestOutcome::Negative),
            _ => Err(Error::input(format!("unrecognized outcome {s:?}"))),
        }
    }
}

/// Distribution of the infection vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PriorModel {
    /// Each person independently infected with probability `p`.
    Iid { p: f64 },
    /// Arbitrary joint pmf indexed by the integer encoding of the vector.
    Explicit { pmf: Vec<f64> },
}

impl PriorModel {
    pub fn iid(p: f64) -> Result<Self> {
        let prior = PriorModel::Iid { p };
        prior.validate(None)?;
        Ok(prior)
    }

    pub fn explicit(pmf: Vec<f64>) -> Result<Self> {
        let prior = PriorModel::Explicit { pmf };
        prior.validate(None)?;
        Ok(prior)
    }

    /// Checks the invariants, and the population size when `n` is given.
    pub fn validate(&self, n: Option<usize>) -> Result<()> {
        match self {
            PriorModel::Iid { p } => check_probability("p", *p),
            PriorModel::Explicit { pmf } => {
                if !pmf.len().is_power_of_two() || pmf.len() < 2 {
                    return Err(Error::input("explicit pmf length must be 2^n with n ≥ 1"));
                }
                if let Some(n) = n {
                    if n >= usize::BITS as usize || pmf.len() != 1usize << n {
                        return Err(Error::input(format!(
                            "explicit pmf has {} entries, population of {n} needs 2^{n}",
                            pmf.len()
                        )));
                    }
                }
                if pmf.iter().any(|&v| !v.is_finite() || v < 0.0) {
                    return Err(Error::input("explicit pmf entries must be finite and ≥ 0"));
                }
                let total: f64 = pmf.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::input(format!("explicit pmf sums to {total}, not 1")));
                }
                Ok(())
            }
        }
    }

    /// P(x) for the vector with integer encoding `index` in a population of `n`.
    pub fn probability(&self, index: u64, n: usize) -> f64 {
        match self {
            PriorModel::Iid { p } => {
                let infected = index.count_ones() as i32;
                p.powi(infected) * (1.0 - p).powi(n as i32 - infected)
            }
            PriorModel::Explicit { pmf } => pmf[index as usize],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> InfectionVector {
        let bits = match self {
            PriorModel::Iid { p } => (0..n).map(|_| rng.random::<f64>() < *p).collect(),
            PriorModel::Explicit { pmf } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = pmf.len() - 1;
                for (i, &w) in pmf.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        chosen = i;
                        break;
                    }
                }
                (0..n).map(|k| (chosen >> k) & 1 == 1).collect()
            }
        };
        InfectionVector { bits }
    }
}

/// Assay sensitivity; specificity is fixed at 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sensitivity: f64,
}

impl NoiseModel {
    pub const NOISELESS: NoiseModel = NoiseModel { sensitivity: 1.0 };

    pub fn new(sensitivity: f64) -> Result<Self> {
        check_probability("sensitivity", sensitivity)?;
        Ok(Self { sensitivity })
    }

    pub fn is_noiseless(&self) -> bool {
        self.sensitivity >= 1.0
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::NOISELESS
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::H0 => "H0",
            Hypothesis::H1 => "H1",
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    IdentifiedSet(BTreeSet<usize>),
    HypothesisDecision(Hypothesis),
}

impl Verdict {
    pub fn identified(&self) -> Option<&BTreeSet<usize>> {
        match self {
            Verdict::IdentifiedSet(set) => Some(set),
            Verdict::HypothesisDecision(_) => None,
        }
    }

    pub fn hypothesis(&self) -> Option<Hypothesis> {
        match self {
            Verdict::HypothesisDecision(h) => Some(*h),
            Verdict::IdentifiedSet(_) => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct AdministeredTest {
    /// Stage (round) in which the pool was prescribed; pools of one stage run in parallel.
    pub stage: usize,
    pub pool: Pool,
    pub outcome: TestOutcome,
}

/// A terminated run of a protocol.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct StrategyTrace {
    pub tests: Vec<AdministeredTest>,
    pub verdict: Verdict,
}

impl StrategyTrace {
    /// Γ, the number of administered tests.
    pub fn test_count(&self) -> usize {
        self.tests.len()
    }

    pub fn stages(&self) -> usize {
        self.tests.last().map_or(0, |t| t.stage + 1)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::input(format!("malformed trace: {e}")))
    }
}

pub(crate) fn check_probability(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::input(format!("{name} = {value} outside [0, 1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bitstring_and_index_agree() {
        let x: InfectionVector = "0100".parse().unwrap();
        assert_eq!(x.index(), Some(2));
        assert_eq!(x.support(), BTreeSet::from([1]));
        assert_eq!(InfectionVector::from_index(8, 4).unwrap().to_string(), "0001");
    }

    #[test]
    fn rejects_bad_vectors_and_pools() {
        assert!("".parse::<InfectionVector>().is_err());
        assert!("01x".parse::<InfectionVector>().is_err());
        assert!(Pool::new(Vec::new()).is_err());
        assert!(Pool::new([1, 1]).is_err());
        assert!(Pool::new([0, 4]).unwrap().check_against(4).is_err());
    }

    #[test]
    fn pool_labels_are_one_based() {
        assert_eq!(Pool::range(0, 4).unwrap().label(), "{1,2,3,4}");
    }

    #[test]
    fn explicit_prior_must_sum_to_one() {
        assert!(PriorModel::explicit(vec![0.5, 0.25, 0.25, 0.0]).is_ok());
        assert!(PriorModel::explicit(vec![0.5, 0.25, 0.25, 0.1]).is_err());
        assert!(PriorModel::explicit(vec![1.0, -0.0, 0.0]).is_err());
        assert!(PriorModel::iid(1.5).is_err());
    }

    #[test]
    fn iid_probabilities_sum_to_one() {
        let prior = PriorModel::iid(0.3).unwrap();
        let total: f64 = (0..16).map(|i| prior.probability(i, 4)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_json_round_trip() {
        let trace = StrategyTrace {
            tests: vec![AdministeredTest {
                stage: 0,
                pool: Pool::range(0, 4).unwrap(),
                outcome: TestOutcome::Negative,
            }],
            verdict: Verdict::IdentifiedSet(BTreeSet::new()),
        };
        assert_eq!(StrategyTrace::from_json(&trace.to_json()).unwrap(), trace);
    }

    proptest! {
        #[test]
        fn bitstring_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..80)) {
            let x = InfectionVector::new(bits).unwrap();
            let text = x.to_string();
            prop_assert_eq!(text.parse::<InfectionVector>().unwrap(), x.clone());
            if let Some(index) = x.index() {
                prop_assert_eq!(InfectionVector::from_index(index, x.len()).unwrap(), x);
            }
        }
    }
}
