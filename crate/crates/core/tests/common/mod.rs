//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use poolscreen_core::domain::Hypothesis;

/// Maximum of `gamma · π` over every basic feasible solution of
/// `{π ≥ 0, Σπ = 1, Σ_{i: bit k} π_i = p ∀k}`, by brute force over all
/// `C(2^n, n+1)` candidate bases.
pub fn vertex_enumeration_max(gamma: &[u32], p: f64) -> f64 {
    let vars = gamma.len();
    let n = vars.trailing_zeros() as usize;
    let rows = n + 1;
    let coeff = |r: usize, i: usize| -> f64 {
        if r == 0 || (i >> (r - 1)) & 1 == 1 {
            1.0
        } else {
            0.0
        }
    };
    let rhs: Vec<f64> = (0..rows).map(|r| if r == 0 { 1.0 } else { p }).collect();
    let mut best = f64::NEG_INFINITY;
    let mut basis: Vec<usize> = (0..rows).collect();
    loop {
        // Solve A_B x = b by Gaussian elimination with partial pivoting.
        let mut m: Vec<Vec<f64>> = (0..rows)
            .map(|r| {
                let mut row: Vec<f64> = basis.iter().map(|&i| coeff(r, i)).collect();
                row.push(rhs[r]);
                row
            })
            .collect();
        let mut singular = false;
        for col in 0..rows {
            let pivot = (col..rows)
                .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
                .unwrap();
            if m[pivot][col].abs() < 1e-12 {
                singular = true;
                break;
            }
            m.swap(col, pivot);
            let pivot_row = m[col].clone();
            for (r, row) in m.iter_mut().enumerate() {
                if r != col {
                    let f = row[col] / pivot_row[col];
                    for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= f * p;
                    }
                }
            }
        }
        if !singular {
            let x: Vec<f64> = (0..rows).map(|r| m[r][rows] / m[r][r]).collect();
            if x.iter().all(|&v| v >= -1e-12) {
                let value: f64 = basis.iter().zip(&x).map(|(&i, &v)| gamma[i] as f64 * v).sum();
                best = best.max(value);
            }
        }
        // Next combination in lexicographic order.
        let mut k = rows;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if basis[k] < vars - rows + k {
                break;
            }
        }
        basis[k] += 1;
        for j in k + 1..rows {
            basis[j] = basis[j - 1] + 1;
        }
    }
}

/// The paper's L = 4, V = 1 table: (x as written left to right, decision, tests).
pub const FOUR_SUBPOOL_TABLE: [(&str, Hypothesis, usize); 16] = [
    ("0000", Hypothesis::H0, 1),
    ("0001", Hypothesis::H0, 5),
    ("0010", Hypothesis::H0, 5),
    ("0011", Hypothesis::H1, 5),
    ("0100", Hypothesis::H0, 5),
    ("0101", Hypothesis::H1, 3),
    ("0110", Hypothesis::H1, 3),
    ("0111", Hypothesis::H1, 3),
    ("1000", Hypothesis::H0, 5),
    ("1001", Hypothesis::H1, 3),
    ("1010", Hypothesis::H1, 3),
    ("1011", Hypothesis::H1, 3),
    ("1100", Hypothesis::H1, 5),
    ("1101", Hypothesis::H1, 3),
    ("1110", Hypothesis::H1, 3),
    ("1111", Hypothesis::H1, 3),
];

/// Closed-form E[Γ] for L = 4, V = 1, starting at the root.
pub fn four_subpool_root_tests(q: f64) -> f64 {
    let r = 1.0 - q;
    r.powi(4)
        + (4.0 * q * q * r * r + 4.0 * q.powi(3) * r + q.powi(4)) * 3.0
        + (4.0 * q * r.powi(3) + 2.0 * q * q * r * r) * 5.0
}

/// Direct binomial tail by explicit combinatorics.
pub fn binomial_tail(q: f64, l: usize, v: i64) -> f64 {
    let mut total = 0.0;
    for j in 0..=l {
        if j as i64 > v {
            let mut c = 1.0;
            for t in 0..j {
                c *= (l - t) as f64 / (t + 1) as f64;
            }
            total += c * q.powi(j as i32) * (1.0 - q).powi((l - j) as i32);
        }
    }
    total
}
