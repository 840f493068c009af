//! Sequential halving for four people: test {1,2}; on a positive, test 1 and
//! test 2 only if 1 was positive. Then the same for {3,4}.

use std::collections::BTreeSet;

use crate::domain::{Pool, TestOutcome, Verdict};
use crate::engine::Stage;
use crate::error::{Error, Result};

pub fn halving4_next(outcomes: &[TestOutcome]) -> Result<Stage> {
    let mut seen = outcomes.iter().copied();
    let mut infected = BTreeSet::new();
    for (a, b) in [(0, 1), (2, 3)] {
        let Some(pair) = seen.next() else {
            return Ok(Stage::Pending(vec![Pool::new([a, b])?]));
        };
        if !pair.is_positive() {
            continue;
        }
        match seen.next() {
            None => return Ok(Stage::Pending(vec![Pool::singleton(a)])),
            Some(TestOutcome::Negative) => {
                infected.insert(b);
            }
            Some(TestOutcome::Positive) => {
                infected.insert(a);
                match seen.next() {
                    None => return Ok(Stage::Pending(vec![Pool::singleton(b)])),
                    Some(second) => {
                        if second.is_positive() {
                            infected.insert(b);
                        }
                    }
                }
            }
        }
    }
    if seen.next().is_some() {
        return Err(Error::input("outcomes submitted after halving concluded"));
    }
    Ok(Stage::Concluded(Verdict::IdentifiedSet(infected)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use TestOutcome::{Negative as N, Positive as P};

    #[test]
    fn single_infected_in_first_half_costs_four() {
        // {1,2}=P, {1}=P, {2}=N, {3,4}=N
        assert_eq!(
            halving4_next(&[P, P, N, N]).unwrap(),
            Stage::Concluded(Verdict::IdentifiedSet(BTreeSet::from([0])))
        );
    }

    #[test]
    fn second_member_inferred() {
        assert_eq!(
            halving4_next(&[P, N, N]).unwrap(),
            Stage::Concluded(Verdict::IdentifiedSet(BTreeSet::from([1])))
        );
    }

    #[test]
    fn all_negative_costs_two() {
        assert_eq!(
            halving4_next(&[N, N]).unwrap(),
            Stage::Concluded(Verdict::IdentifiedSet(BTreeSet::new()))
        );
    }
}
