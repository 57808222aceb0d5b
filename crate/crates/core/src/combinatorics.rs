//! Exact Stirling numbers of the second kind and Poisson raw moments.

use alloc::vec;
use alloc::vec::Vec;
use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

/// Triangular table of `S(m, r)` for `0 ≤ r ≤ m ≤ max_m`.
///
/// Rows are appended with [`StirlingTable::extend_to`]; extension needs `&mut`,
/// so a shared table is read-only.
#[derive(Debug, Clone)]
pub struct StirlingTable {
    rows: Vec<Vec<BigUint>>,
    rows_f64: Vec<Vec<f64>>,
}

/// Default table height.
pub const DEFAULT_MAX_M: usize = 64;

impl Default for StirlingTable {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_M)
    }
}

impl StirlingTable {
    pub fn new(max_m: usize) -> Self {
        let mut table = Self { rows: vec![vec![BigUint::one()]], rows_f64: vec![vec![1.0]] };
        table.extend_to(max_m);
        table
    }

    pub fn max_m(&self) -> usize {
        self.rows.len() - 1
    }

    /// Appends rows with `S(m+1, r) = r·S(m, r) + S(m, r−1)`.
    pub fn extend_to(&mut self, max_m: usize) {
        while self.rows.len() <= max_m {
            let prev = self.rows.last().expect("table has row 0");
            let m = prev.len();
            let mut row = vec![BigUint::zero(); m + 1];
            for r in 1..=m {
                let carried = if r < m { &prev[r] * BigUint::from(r) } else { BigUint::zero() };
                row[r] = carried + &prev[r - 1];
            }
            let row_f64 = row.iter().map(|v| v.to_f64().unwrap_or(f64::INFINITY)).collect();
            self.rows.push(row);
            self.rows_f64.push(row_f64);
        }
    }

    /// `S(m, r)`, or `None` when `m` is beyond the table.
    pub fn get(&self, m: usize, r: usize) -> Option<&BigUint> {
        let row = self.rows.get(m)?;
        Some(row.get(r).unwrap_or(&ZERO))
    }

    /// `S(m, r)` as the nearest `f64`.
    pub fn get_f64(&self, m: usize, r: usize) -> Option<f64> {
        let row = self.rows_f64.get(m)?;
        Some(row.get(r).copied().unwrap_or(0.0))
    }

    pub fn row_f64(&self, m: usize) -> Option<&[f64]> {
        self.rows_f64.get(m).map(Vec::as_slice)
    }
}

static ZERO: BigUint = BigUint::ZERO;

/// Exact `S(m, r)`; zero when `r > m`.
pub fn stirling2(m: usize, r: usize) -> BigUint {
    if r > m {
        return BigUint::zero();
    }
    // one row of the recurrence, truncated at column r
    let mut row = vec![BigUint::zero(); r + 1];
    row[0] = BigUint::one();
    for i in 1..=m {
        for j in (1..=r.min(i)).rev() {
            let carried = core::mem::take(&mut row[j]) * BigUint::from(j);
            row[j] = carried + &row[j - 1];
        }
        row[0] = BigUint::zero();
    }
    row.swap_remove(r)
}

fn binomial(n: usize, k: usize) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// The derivative coefficient `a_r(m) = ((−1)^r / r!) Σ_{s=1}^r (−1)^s C(r,s) s^m`.
///
/// For `m ≥ 1` this is the displayed alternating sum, evaluated exactly. At
/// `m = 0` the sum from `s = 1` is not an integer, so the `s = 0` term
/// (`0⁰ = 1`) is included there; that is the form in which the coefficient
/// vanishes for every `r > m`.
pub fn a_coefficient(m: u32, r: u32) -> BigInt {
    let r = r as usize;
    let mut sum = BigInt::zero();
    let lower = if m == 0 { 0 } else { 1 };
    for s in lower..=r {
        let term = BigInt::from(binomial(r, s)) * BigInt::from(s).pow(m);
        if s % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let mut value = sum / BigInt::from(factorial(r));
    if r % 2 == 1 {
        value = -value;
    }
    value
}

/// `E[X^m] = Σ_{r=1}^m S(m, r) μ^r` for `X ~ Poisson(μ)`.
pub fn poisson_raw_moment(m: usize, mu: f64) -> f64 {
    let table = StirlingTable::new(m);
    poisson_raw_moment_with(&table, m, mu)
}

/// [`poisson_raw_moment`] reusing a prebuilt table (which must reach row `m`).
pub fn poisson_raw_moment_with(table: &StirlingTable, m: usize, mu: f64) -> f64 {
    let row = table.row_f64(m).expect("Stirling table too short");
    if m == 0 {
        return 1.0;
    }
    // Horner in μ over coefficients S(m, 1..=m)
    let mut acc = 0.0;
    for r in (1..=m).rev() {
        acc = acc * mu + row[r];
    }
    acc * mu
}
