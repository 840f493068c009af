//! Dense two-phase primal simplex with Bland's rule.
//!
//! Solves `maximize c·x subject to A x = b, x ≥ 0` with `b ≥ 0`. The tableau
//! is generic over [`Scalar`] so the same pivoting runs in `f64` or in exact
//! rationals.

use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Scalar: Clone + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn to_f64(&self) -> f64;

    fn is_zero(&self) -> bool {
        !self.is_positive() && !self.is_negative()
    }
}

/// Magnitudes below this are treated as zero in floating point.
pub const FLOAT_EPS: f64 = 1e-11;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn is_positive(&self) -> bool {
        *self > FLOAT_EPS
    }
    fn is_negative(&self) -> bool {
        *self < -FLOAT_EPS
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimplexError {
    Infeasible,
    Unbounded,
    IterationLimit(usize),
}

#[derive(Clone, Debug)]
pub struct SimplexSolution<S> {
    pub x: Vec<S>,
    pub value: S,
    /// Basic column per remaining (non-redundant) constraint row.
    pub basis: Vec<usize>,
    pub pivots: usize,
}

struct Tableau<S> {
    /// `rows × (cols + 1)`; the last column is the right-hand side.
    cells: Vec<Vec<S>>,
    basis: Vec<usize>,
    cols: usize,
    pivots: usize,
}

impl<S: Scalar> Tableau<S> {
    fn pivot(&mut self, row: usize, col: usize, objective: &mut [S]) {
        let inv = S::one().div(&self.cells[row][col]);
        for v in self.cells[row].iter_mut() {
            *v = v.mul(&inv);
        }
        let pivot_row = self.cells[row].clone();
        let nonzero: Vec<usize> = (0..=self.cols).filter(|&j| !pivot_row[j].is_zero()).collect();
        let eliminate = |target: &mut [S]| {
            let factor = target[col].clone();
            if factor.is_zero() {
                return;
            }
            for &j in &nonzero {
                target[j] = target[j].sub(&factor.mul(&pivot_row[j]));
            }
        };
        for (r, cells) in self.cells.iter_mut().enumerate() {
            if r != row {
                eliminate(cells);
            }
        }
        eliminate(objective);
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Maximizes the objective whose reduced costs are held in `objective`
    /// over columns `< allowed`. `objective[cols]` holds minus the current value.
    fn optimize(&mut self, objective: &mut [S], allowed: usize, max_pivots: usize) -> Result<(), SimplexError> {
        loop {
            // Bland: lowest-index improving column.
            let Some(col) = (0..allowed).find(|&j| objective[j].is_positive()) else {
                return Ok(());
            };
            let mut leave: Option<(usize, S)> = None;
            for (r, cells) in self.cells.iter().enumerate() {
                if !cells[col].is_positive() {
                    continue;
                }
                let ratio = cells[self.cols].div(&cells[col]);
                let better = match &leave {
                    None => true,
                    Some((best_r, best)) => {
                        let diff = ratio.sub(best);
                        diff.is_negative() || (diff.is_zero() && self.basis[r] < self.basis[*best_r])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            let Some((row, _)) = leave else {
                return Err(SimplexError::Unbounded);
            };
            if self.pivots >= max_pivots {
                return Err(SimplexError::IterationLimit(max_pivots));
            }
            self.pivot(row, col, objective);
        }
    }
}

/// Maximizes `c·x` subject to `A x = b`, `x ≥ 0`.
///
/// `a` is row-major with `c.len()` columns; every `b[i]` must be ≥ 0.
pub fn maximize<S: Scalar>(
    c: &[S],
    a: &[Vec<S>],
    b: &[S],
    max_pivots: usize,
) -> Result<SimplexSolution<S>, SimplexError> {
    let n = c.len();
    let m = a.len();
    assert_eq!(b.len(), m, "one right-hand side per row");
    assert!(
        b.iter().all(|v| !v.is_negative()),
        "right-hand sides must be nonnegative"
    );

    // Columns: n structural, m artificial, then the right-hand side.
    let cols = n + m;
    let cells: Vec<Vec<S>> = (0..m)
        .map(|i| {
            let mut row = Vec::with_capacity(cols + 1);
            row.extend(a[i].iter().cloned());
            row.extend((0..m).map(|k| if k == i { S::one() } else { S::zero() }));
            row.push(b[i].clone());
            row
        })
        .collect();
    let mut t = Tableau {
        cells,
        basis: (n..cols).collect(),
        cols,
        pivots: 0,
    };

    // Phase 1: maximize -Σ artificials. Reduced cost of column j is Σ_i A_ij.
    let mut phase1: Vec<S> = (0..=cols)
        .map(|j| {
            if (n..cols).contains(&j) {
                S::zero()
            } else {
                t.cells.iter().fold(S::zero(), |acc, row| acc.add(&row[j]))
            }
        })
        .collect();
    t.optimize(&mut phase1, n, max_pivots)?;
    let infeasibility = t
        .cells
        .iter()
        .zip(&t.basis)
        .filter(|(_, &col)| col >= n)
        .fold(S::zero(), |acc, (row, _)| acc.add(&row[cols]));
    if infeasibility.is_positive() {
        return Err(SimplexError::Infeasible);
    }

    // Drive zero-level artificials out of the basis; drop redundant rows.
    let mut r = 0;
    while r < t.cells.len() {
        if t.basis[r] >= n {
            match (0..n).find(|&j| !t.cells[r][j].is_zero()) {
                Some(col) => t.pivot(r, col, &mut phase1),
                None => {
                    t.cells.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Phase 2 reduced costs: c_j - Σ_i c_{B_i} T_ij, and -value in the last slot.
    let mut objective: Vec<S> = (0..=cols)
        .map(|j| {
            let base = if j < n { c[j].clone() } else { S::zero() };
            t.cells
                .iter()
                .zip(&t.basis)
                .fold(base, |acc, (row, &bcol)| acc.sub(&c[bcol].mul(&row[j])))
        })
        .collect();
    t.optimize(&mut objective, n, max_pivots)?;

    let mut x = vec![S::zero(); n];
    for (row, &col) in t.cells.iter().zip(&t.basis) {
        x[col] = row[cols].clone();
    }
    let value = c.iter().zip(&x).fold(S::zero(), |acc, (ci, xi)| acc.add(&ci.mul(xi)));
    Ok(SimplexSolution {
        x,
        value,
        basis: t.basis,
        pivots: t.pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn small_lp_float_and_exact_agree() {
        // max 3x + 2y  s.t. x + y + s1 = 4, x + 3y + s2 = 6
        let c = [3.0, 2.0, 0.0, 0.0];
        let a = vec![vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 3.0, 0.0, 1.0]];
        let sol = maximize(&c, &a, &[4.0, 6.0], 100).unwrap();
        assert!((sol.value - 12.0).abs() < 1e-12);

        let cq: Vec<BigRational> = c.iter().map(|&v| rat(v as i64, 1)).collect();
        let aq: Vec<Vec<BigRational>> = a
            .iter()
            .map(|r| r.iter().map(|&v| rat(v as i64, 1)).collect())
            .collect();
        let exact = maximize(&cq, &aq, &[rat(4, 1), rat(6, 1)], 100).unwrap();
        assert_eq!(exact.value, rat(12, 1));
    }

    #[test]
    fn redundant_rows_are_dropped() {
        // x + y = 1 twice; max x
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let sol = maximize(&[1.0, 0.0], &a, &[1.0, 1.0], 100).unwrap();
        assert_eq!(sol.basis.len(), 1);
        assert!((sol.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        // x = 1 and x = 2
        let a = vec![vec![1.0], vec![1.0]];
        assert_eq!(
            maximize(&[1.0], &a, &[1.0, 2.0], 100).unwrap_err(),
            SimplexError::Infeasible
        );
        // x - y = 0, max x
        let a = vec![vec![1.0, -1.0]];
        assert_eq!(
            maximize(&[1.0, 0.0], &a, &[0.0], 100).unwrap_err(),
            SimplexError::Unbounded
        );
    }
}
