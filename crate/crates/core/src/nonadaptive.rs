//! Non-adaptive testing matrices, separability and Boolean-OR decoding.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::domain::{InfectionVector, TestOutcome};
use crate::error::{Error, Result};

/// `m × n` binary pool-membership matrix; row `i` is pool `i`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TestingMatrix {
    rows: usize,
    cols: usize,
    /// Column-major bitsets over rows, `words` u64 per column.
    columns: Vec<Vec<u64>>,
}

impl TestingMatrix {
    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::input("testing matrix needs at least one row"));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(Error::input("testing matrix needs at least one column"));
        }
        let words = m.div_ceil(64);
        let mut columns = vec![vec![0u64; words]; n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::input(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            if !row.iter().any(|&b| b) {
                return Err(Error::input(format!("row {} tests nobody", i + 1)));
            }
            for (j, &b) in row.iter().enumerate() {
                if b {
                    columns[j][i / 64] |= 1 << (i % 64);
                }
            }
        }
        Ok(Self {
            rows: m,
            cols: n,
            columns,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let rows: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        (self.columns[col][row / 64] >> (row % 64)) & 1 == 1
    }

    fn empty_sum(&self) -> Vec<u64> {
        vec![0; self.rows.div_ceil(64)]
    }

    fn boolean_sum(&self, cols: impl IntoIterator<Item = usize>) -> Vec<u64> {
        let mut acc = self.empty_sum();
        for c in cols {
            for (a, w) in acc.iter_mut().zip(&self.columns[c]) {
                *a |= w;
            }
        }
        acc
    }

    fn outcomes_of(&self, sum: &[u64]) -> Vec<TestOutcome> {
        (0..self.rows)
            .map(|i| TestOutcome::from_bool((sum[i / 64] >> (i % 64)) & 1 == 1))
            .collect()
    }

    fn pack(&self, outcomes: &[TestOutcome]) -> Vec<u64> {
        let mut packed = self.empty_sum();
        for (i, o) in outcomes.iter().enumerate() {
            if o.is_positive() {
                packed[i / 64] |= 1 << (i % 64);
            }
        }
        packed
    }

    /// Noiseless outcomes: row `i` is positive iff it shares a 1 with `x`.
    pub fn encode(&self, x: &InfectionVector) -> Result<Vec<TestOutcome>> {
        if x.len() != self.cols {
            return Err(Error::input(format!(
                "infection vector has {} entries, matrix has {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok(self.outcomes_of(&self.boolean_sum(x.support())))
    }

    /// Whether all Boolean sums over `k`-column subsets are distinct, or with
    /// `up_to_k` over every subset of size at most `k` (the empty set included).
    pub fn is_separable(&self, k: usize, up_to_k: bool) -> Result<bool> {
        if k == 0 || k > self.cols {
            return Err(Error::input(format!("k = {k} must be in 1..={}", self.cols)));
        }
        let sizes = if up_to_k { 0..=k } else { k..=k };
        let mut seen = HashSet::new();
        for size in sizes {
            let mut distinct = true;
            for_each_subset(self.cols, size, |subset| {
                distinct = seen.insert(self.boolean_sum(subset.iter().copied()));
                distinct
            });
            if !distinct {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The unique set of at most `k_max` people whose encoding equals `outcomes`.
    ///
    /// When no such set exists, or several do, returns [`Error::DecodeFailure`]
    /// listing every candidate at the minimum Hamming distance.
    pub fn decode(&self, outcomes: &[TestOutcome], k_max: usize) -> Result<BTreeSet<usize>> {
        if outcomes.len() != self.rows {
            return Err(Error::input(format!(
                "{} outcomes for a matrix with {} rows",
                outcomes.len(),
                self.rows
            )));
        }
        if k_max == 0 {
            return Err(Error::input("k_max must be positive"));
        }
        let target = self.pack(outcomes);
        let mut best = usize::MAX;
        let mut candidates: Vec<BTreeSet<usize>> = Vec::new();
        for size in 0..=k_max.min(self.cols) {
            for_each_subset(self.cols, size, |subset| {
                let sum = self.boolean_sum(subset.iter().copied());
                let distance: usize = sum
                    .iter()
                    .zip(&target)
                    .map(|(a, b)| (a ^ b).count_ones() as usize)
                    .sum();
                if distance < best {
                    best = distance;
                    candidates.clear();
                }
                if distance == best {
                    candidates.push(subset.iter().copied().collect());
                }
                true
            });
        }
        if best == 0 && candidates.len() == 1 {
            Ok(candidates.pop().expect("one candidate"))
        } else {
            Err(Error::DecodeFailure {
                k_max,
                distance: best,
                candidates,
            })
        }
    }
}

/// Visits every `size`-subset of `0..n` in lexicographic order until `visit`
/// returns false.
fn for_each_subset(n: usize, size: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    if size > n {
        return;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        if !visit(&idx) {
            return;
        }
        let Some(pos) = (0..size).rev().find(|&i| idx[i] != i + n - size) else {
            return;
        };
        idx[pos] += 1;
        for i in pos + 1..size {
            idx[i] = idx[i - 1] + 1;
        }
    }
}

impl fmt::Display for TestingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                f.write_str(if self.get(i, j) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Parses `m n` on the first line followed by `m` lines of `0`/`1` characters.
impl FromStr for TestingMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::input("empty matrix text"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::input(format!("bad dimension {t:?}"))))
            .collect::<Result<_>>()?;
        let [m, n] = dims[..] else {
            return Err(Error::input("header must be \"m n\""));
        };
        let rows: Vec<Vec<bool>> = lines
            .map(|line| {
                line.chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(Error::input(format!("invalid matrix entry {other:?}"))),
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        if rows.len() != m {
            return Err(Error::input(format!("header declares {m} rows, found {}", rows.len())));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::input(format!("every row must have {n} entries")));
        }
        Self::from_rows(&rows)
    }
}

pub fn outcomes_from_bits(text: &str) -> Result<Vec<TestOutcome>> {
    text.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(TestOutcome::Negative),
            '1' => Ok(TestOutcome::Positive),
            other => Err(Error::input(format!("invalid outcome bit {other:?}"))),
        })
        .collect()
}

pub fn outcomes_to_bits(outcomes: &[TestOutcome]) -> String {
    outcomes
        .iter()
        .map(|o| if o.is_positive() { '1' } else { '0' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example_matrix() -> TestingMatrix {
        "3 4\n1001\n0101\n0011\n".parse().unwrap()
    }

    fn bits(s: &str) -> Vec<TestOutcome> {
        outcomes_from_bits(s).unwrap()
    }

    #[test]
    fn encodes_example_vectors() {
        let m = example_matrix();
        assert_eq!(m.encode(&"1000".parse().unwrap()).unwrap(), bits("100"));
        assert_eq!(m.encode(&"0000".parse().unwrap()).unwrap(), bits("000"));
        assert_eq!(m.encode(&"0001".parse().unwrap()).unwrap(), bits("111"));
        assert!(m.encode(&"000".parse().unwrap()).is_err());
    }

    #[test]
    fn example_matrix_is_one_bar_separable() {
        let m = example_matrix();
        assert!(m.is_separable(1, true).unwrap());
        assert!(!m.is_separable(2, true).unwrap());
    }

    #[test]
    fn identity_is_separable_for_every_k() {
        let m = TestingMatrix::identity(5).unwrap();
        for k in 1..=5 {
            assert!(m.is_separable(k, true).unwrap());
            assert!(m.is_separable(k, false).unwrap());
        }
    }

    #[test]
    fn equal_columns_break_separability() {
        let m: TestingMatrix = "2 3\n110\n011\n".parse().unwrap();
        assert!(m.is_separable(1, false).unwrap());
        let dup: TestingMatrix = "2 3\n111\n011\n".parse().unwrap();
        assert!(!dup.is_separable(1, false).unwrap());
    }

    #[test]
    fn decodes_example_outcomes() {
        let m = example_matrix();
        assert_eq!(m.decode(&bits("100"), 1).unwrap(), BTreeSet::from([0]));
        assert_eq!(m.decode(&bits("000"), 1).unwrap(), BTreeSet::new());
        assert_eq!(m.decode(&bits("111"), 1).unwrap(), BTreeSet::from([3]));
    }

    #[test]
    fn inconsistent_outcomes_list_nearest_candidates() {
        let m = example_matrix();
        match m.decode(&bits("110"), 1) {
            Err(Error::DecodeFailure {
                distance, candidates, ..
            }) => {
                assert_eq!(distance, 1);
                let expected: Vec<BTreeSet<usize>> =
                    vec![BTreeSet::from([0]), BTreeSet::from([1]), BTreeSet::from([3])];
                assert_eq!(candidates, expected);
            }
            other => panic!("expected decode failure, got {other:?}"),
        }
    }

    #[test]
    fn rejects_all_zero_rows_and_bad_text() {
        assert!("2 2\n10\n00\n".parse::<TestingMatrix>().is_err());
        assert!("2 2\n10\n".parse::<TestingMatrix>().is_err());
        assert!("1 2\n1x\n".parse::<TestingMatrix>().is_err());
    }

    #[test]
    fn text_format_round_trips() {
        let m = example_matrix();
        assert_eq!(m.to_string().parse::<TestingMatrix>().unwrap(), m);
    }

    #[test]
    fn subset_enumeration_counts() {
        let mut count = 0;
        for_each_subset(6, 3, |_| {
            count += 1;
            true
        });
        assert_eq!(count, 20);
    }

    fn arb_matrix() -> impl Strategy<Value = TestingMatrix> {
        (1usize..=6, 1usize..=6).prop_flat_map(|(m, n)| {
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), n), m)
                .prop_filter_map("no all-zero rows", |rows| TestingMatrix::from_rows(&rows).ok())
        })
    }

    proptest! {
        #[test]
        fn separability_is_monotone_in_k(m in arb_matrix()) {
            for k in 2..=m.cols() {
                if m.is_separable(k, true).unwrap() {
                    prop_assert!(m.is_separable(k - 1, true).unwrap());
                }
            }
        }

        #[test]
        fn decode_never_exceeds_k_max(m in arb_matrix(), x in 0u64..64, k in 1usize..3) {
            let n = m.cols();
            let x = InfectionVector::from_index(x & ((1 << n) - 1), n).unwrap();
            if let Ok(found) = m.decode(&m.encode(&x).unwrap(), k) {
                prop_assert!(found.len() <= k);
            }
        }
    }
}
