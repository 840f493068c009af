//! Sparsity-oblivious multi-stage strategy for four people.
//!
//! Stage 1 tests everyone. If positive, stage 2 tests {1,2}, {3,4} and {1,3}
//! in parallel (1-based labels); stage 3, when needed, is a single pool or all
//! four individuals.

use std::collections::BTreeSet;

use crate::domain::{Pool, TestOutcome, Verdict};
use crate::engine::Stage;
use crate::error::{Error, Result};

use TestOutcome::{Negative as N, Positive as P};

fn pools(groups: &[&[usize]]) -> Vec<Pool> {
    groups
        .iter()
        .map(|g| Pool::new(g.iter().copied()).expect("static pools are valid"))
        .collect()
}

fn done(infected: impl IntoIterator<Item = usize>) -> Result<Stage> {
    Ok(Stage::Concluded(Verdict::IdentifiedSet(infected.into_iter().collect())))
}

/// Next prescription given every outcome observed so far, in test order.
pub fn soms4_next(outcomes: &[TestOutcome]) -> Result<Stage> {
    let Some((&t1, rest)) = outcomes.split_first() else {
        return Ok(Stage::Pending(pools(&[&[0, 1, 2, 3]])));
    };
    if t1 == N {
        return finish(rest, done([]));
    }
    if rest.len() < 3 {
        if !rest.is_empty() {
            return Err(Error::input("second stage outcomes must be submitted together"));
        }
        return Ok(Stage::Pending(pools(&[&[0, 1], &[2, 3], &[0, 2]])));
    }
    let (stage2, tail) = rest.split_at(3);
    match (stage2[0], stage2[1], stage2[2]) {
        (N, P, N) => finish(tail, done([3])),
        (P, N, N) => finish(tail, done([1])),
        (P, P, N) => finish(tail, done([1, 3])),
        (N, P, P) => single_follow_up(tail, 2, 3),
        (P, N, P) => single_follow_up(tail, 0, 1),
        (P, P, P) => match tail.len() {
            0 => Ok(Stage::Pending(pools(&[&[0], &[1], &[2], &[3]]))),
            4 => done((0..4).filter(|&k| tail[k] == P)),
            _ => Err(Error::input("the four individual tests must be submitted together")),
        },
        (N, N, _) => Err(Error::ProtocolViolation(
            "T1 positive but both halves {1,2} and {3,4} negative".into(),
        )),
    }
}

/// `known` is infected; `unknown` is the only unresolved person.
fn single_follow_up(tail: &[TestOutcome], known: usize, unknown: usize) -> Result<Stage> {
    match tail {
        [] => Ok(Stage::Pending(vec![Pool::singleton(unknown)])),
        [outcome] => {
            let mut infected = BTreeSet::from([known]);
            if *outcome == P {
                infected.insert(unknown);
            }
            done(infected)
        }
        _ => Err(Error::input("too many outcomes for the SOMS flowchart")),
    }
}

fn finish(extra: &[TestOutcome], stage: Result<Stage>) -> Result<Stage> {
    if extra.is_empty() {
        stage
    } else {
        Err(Error::input("outcomes submitted after the SOMS flowchart concluded"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pending(stage: Stage) -> Vec<Pool> {
        match stage {
            Stage::Pending(p) => p,
            other => panic!("expected pending, got {other:?}"),
        }
    }

    #[test]
    fn negative_root_concludes_empty() {
        assert_eq!(
            soms4_next(&[N]).unwrap(),
            Stage::Concluded(Verdict::IdentifiedSet(BTreeSet::new()))
        );
    }

    #[test]
    fn second_stage_is_one_parallel_batch() {
        let p = pending(soms4_next(&[P]).unwrap());
        assert_eq!(p, pools(&[&[0, 1], &[2, 3], &[0, 2]]));
    }

    #[test]
    fn flowchart_follow_ups() {
        assert_eq!(pending(soms4_next(&[P, N, P, P]).unwrap()), vec![Pool::singleton(3)]);
        assert_eq!(pending(soms4_next(&[P, P, N, P]).unwrap()), vec![Pool::singleton(1)]);
        assert_eq!(pending(soms4_next(&[P, P, P, P]).unwrap()).len(), 4);
        assert_eq!(
            soms4_next(&[P, P, P, N]).unwrap(),
            Stage::Concluded(Verdict::IdentifiedSet(BTreeSet::from([1, 3])))
        );
    }

    #[test]
    fn impossible_combination_is_protocol_violation() {
        assert!(matches!(soms4_next(&[P, N, N, P]), Err(Error::ProtocolViolation(_))));
        assert!(matches!(soms4_next(&[P, N, N, N]), Err(Error::ProtocolViolation(_))));
    }

    #[test]
    fn extra_outcomes_are_rejected() {
        assert!(soms4_next(&[N, P]).is_err());
        assert!(soms4_next(&[P, N, P, N, P]).is_err());
    }
}
