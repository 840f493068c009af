//! Batched, seed-deterministic Monte Carlo and exhaustive enumeration.
//!
//! Work is split into fixed-size batches; each batch owns an RNG stream and a
//! tally, and tallies are merged in batch order, so the result is the same for
//! any thread count.

use rayon::prelude::*;

use crate::error::Result;
use crate::rng::{self, SimRng, BATCH_SIZE};

pub trait Tally: Default + Send {
    fn merge(&mut self, other: Self);
}

/// Running count, sum and sum of squares of one quantity.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Standard error of the mean (unbiased sample variance).
    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

impl Tally for Moments {
    fn merge(&mut self, other: Self) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }
}

/// Probability-weighted sum of one quantity, normalized by the total weight.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WeightedSum {
    pub weight: f64,
    pub total: f64,
}

impl WeightedSum {
    pub fn add(&mut self, weight: f64, x: f64) {
        self.weight += weight;
        self.total += weight * x;
    }

    pub fn mean(&self) -> f64 {
        if self.weight == 0.0 {
            0.0
        } else {
            self.total / self.weight
        }
    }
}

impl Tally for WeightedSum {
    fn merge(&mut self, other: Self) {
        self.weight += other.weight;
        self.total += other.total;
    }
}

/// Runs `trials` independent trials of `trial`, batch `b` of arm `arm` drawing
/// from stream `(seed, batch_stream(arm, b))`.
pub fn run_batched<T, F>(trials: u64, seed: u64, arm: u64, trial: F) -> Result<T>
where
    T: Tally,
    F: Fn(&mut SimRng, &mut T) -> Result<()> + Sync,
{
    let batches = trials.div_ceil(BATCH_SIZE);
    let tallies: Vec<T> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(seed, rng::batch_stream(arm, b));
            let mut tally = T::default();
            let size = BATCH_SIZE.min(trials - b * BATCH_SIZE);
            for _ in 0..size {
                trial(&mut rng, &mut tally)?;
            }
            Ok(tally)
        })
        .collect::<Result<_>>()?;
    Ok(merge_in_order(tallies))
}

/// Visits `0..count` in parallel chunks, merging chunk tallies in index order.
pub fn enumerate<T, F>(count: u64, visit: F) -> Result<T>
where
    T: Tally,
    F: Fn(u64, &mut T) -> Result<()> + Sync,
{
    let chunks = count.div_ceil(BATCH_SIZE);
    let tallies: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut tally = T::default();
            for i in c * BATCH_SIZE..count.min((c + 1) * BATCH_SIZE) {
                visit(i, &mut tally)?;
            }
            Ok(tally)
        })
        .collect::<Result<_>>()?;
    Ok(merge_in_order(tallies))
}

fn merge_in_order<T: Tally>(tallies: Vec<T>) -> T {
    tallies.into_iter().fold(T::default(), |mut acc, t| {
        acc.merge(t);
        acc
    })
}
