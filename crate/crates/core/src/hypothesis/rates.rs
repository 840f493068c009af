use serde::{Deserialize, Serialize};

use crate::domain::{check_probability, InfectionVector};
use crate::error::{Error, Result};

/// Two candidate prevalences and their prior probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisPair {
    pub p0: f64,
    pub p1: f64,
    pub pi0: f64,
    pub pi1: f64,
}

impl HypothesisPair {
    /// Equal priors.
    pub fn new(p0: f64, p1: f64) -> Result<Self> {
        Self::with_priors(p0, p1, 0.5)
    }

    pub fn with_priors(p0: f64, p1: f64, pi0: f64) -> Result<Self> {
        let pair = Self {
            p0,
            p1,
            pi0,
            pi1: 1.0 - pi0,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p0", self.p0)?;
        check_probability("p1", self.p1)?;
        if !(0.0 < self.p0 && self.p0 < self.p1 && self.p1 < 1.0) {
            return Err(Error::input(format!(
                "need 0 < p0 < p1 < 1, got p0 = {}, p1 = {}",
                self.p0, self.p1
            )));
        }
        if !(self.pi0 > 0.0 && self.pi1 > 0.0 && (self.pi0 + self.pi1 - 1.0).abs() < 1e-12) {
            return Err(Error::input("priors must be positive and sum to 1"));
        }
        Ok(())
    }

    /// Subpool infection probabilities `(q0, q1)` for pools of `n` people split `l` ways.
    pub fn subpool_qs(&self, n: usize, l: usize) -> Result<(f64, f64)> {
        Ok((subpool_q(self.p0, n, l)?, subpool_q(self.p1, n, l)?))
    }
}

fn check_split(n: usize, l: usize) -> Result<()> {
    if l == 0 || n == 0 || n % l != 0 {
        return Err(Error::input(format!("L = {l} must divide N = {n} (both positive)")));
    }
    Ok(())
}

/// Probability that a subpool of `n / l` people contains at least one infected.
pub fn subpool_q(p: f64, n: usize, l: usize) -> Result<f64> {
    check_probability("p", p)?;
    check_split(n, l)?;
    let size = (n / l) as f64;
    // 1 - (1-p)^size without cancellation for small p.
    Ok(-(size * (-p).ln_1p()).exp_m1())
}

/// Log-likelihood of observing `infected` of `l` subpools when each is infected w.p. `q`.
fn log_likelihood(infected: usize, l: usize, q: f64) -> f64 {
    let term = |count: usize, prob: f64| if count == 0 { 0.0 } else { count as f64 * prob.ln() };
    term(infected, q) + term(l - infected, 1.0 - q)
}

/// Log-likelihood ratio of H0 against H1 for the subpool vector `x`, given
/// `q0`, `q1`. Depends on `x` only through its weight. Returns ±∞ when one
/// hypothesis cannot produce `x`.
pub fn llr(x: &InfectionVector, pair: &HypothesisPair, q0: f64, q1: f64) -> Result<f64> {
    pair.validate()?;
    check_probability("q0", q0)?;
    check_probability("q1", q1)?;
    if q0 == q1 {
        return Err(Error::input("q0 and q1 must differ"));
    }
    let (n, l) = (x.weight(), x.len());
    let ll0 = log_likelihood(n, l, q0);
    let ll1 = log_likelihood(n, l, q1);
    if ll0 == f64::NEG_INFINITY && ll1 == f64::NEG_INFINITY {
        return Err(Error::Numerical(
            "observation is impossible under both hypotheses".into(),
        ));
    }
    Ok((pair.pi0 / pair.pi1).ln() + ll0 - ll1)
}

/// Largest infected-subpool count for which H0 is still chosen, clamped to
/// `[-1, l]`: −1 means always decide H1, `l` means always decide H0.
pub fn threshold_v(pair: &HypothesisPair, n: usize, l: usize) -> Result<i64> {
    pair.validate()?;
    let (q0, q1) = pair.subpool_qs(n, l)?;
    if q0 <= 0.0 || q1 >= 1.0 {
        return Err(Error::Numerical(format!(
            "subpool probabilities q0 = {q0}, q1 = {q1} are degenerate"
        )));
    }
    let healthy = ((1.0 - q0) / (1.0 - q1)).ln();
    let numerator = (pair.pi0 / pair.pi1).ln() + l as f64 * healthy;
    let denominator = -(q0 / q1).ln() + healthy;
    let v = (numerator / denominator).floor();
    if !v.is_finite() {
        return Err(Error::Numerical("threshold is not finite".into()));
    }
    Ok(v.clamp(-1.0, l as f64) as i64)
}

/// False-alarm and detection probabilities of a classifier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub pf: f64,
    pub pd: f64,
}

/// `P(Binomial(l, q) > v)`.
pub fn binomial_upper_tail(q: f64, l: usize, v: i64) -> f64 {
    let start = (v + 1).max(0) as usize;
    if start > l {
        return 0.0;
    }
    if start == 0 {
        return 1.0;
    }
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    let (lq, lr) = (q.ln(), (-q).ln_1p());
    // ln C(l, j), accumulated from ln C(l, 0) = 0.
    let mut ln_choose = 0.0;
    let mut total = 0.0;
    for j in 0..=l {
        if j > 0 {
            ln_choose += ((l - j + 1) as f64).ln() - (j as f64).ln();
        }
        if j >= start {
            total += (ln_choose + j as f64 * lq + (l - j) as f64 * lr).exp();
        }
    }
    total.min(1.0)
}

/// Binomial-tail error probabilities of the rule "decide H1 iff more than
/// `v` of the `l` subpools are infected".
pub fn closed_form_pf_pd(q0: f64, q1: f64, l: usize, v: i64) -> Result<ErrorRates> {
    check_probability("q0", q0)?;
    check_probability("q1", q1)?;
    if v < -1 || v >= l as i64 {
        return Err(Error::input(format!("threshold V = {v} must satisfy -1 ≤ V < L = {l}")));
    }
    Ok(ErrorRates {
        pf: binomial_upper_tail(q0, l, v),
        pd: binomial_upper_tail(q1, l, v),
    })
}
