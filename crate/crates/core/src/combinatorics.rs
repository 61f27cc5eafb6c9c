//! Catalan's triangle (ballot numbers) and the generating-function values at
//! `x = 1/4` that make the successive-approximation majorants summable.
//!
//! Indexing follows the table used by the convergence argument: row `i`,
//! column `j`, with `1 <= j <= i`. Column 1 holds the Catalan numbers and the
//! diagonal is identically one.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact table of `C_ij` for `1 <= j <= i <= rows`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalanTriangle {
    rows: usize,
    // row-major, row i (1-based) occupies i entries starting at i(i-1)/2
    entries: Vec<BigInt>,
}

impl CatalanTriangle {
    /// Builds the triangle from the recurrence `C_ij = C_(i-1)(j-1) + C_i(j+1)`.
    ///
    /// Within a row the columns are filled right to left, since each entry
    /// reads its right-hand neighbour from the same row.
    pub fn build(rows: usize) -> Result<Self> {
        if rows == 0 {
            return Err(Error::Domain("Catalan triangle needs at least one row".into()));
        }
        let mut entries: Vec<BigInt> = Vec::with_capacity(rows * (rows + 1) / 2);
        entries.push(BigInt::one());
        for i in 2..=rows {
            let start = entries.len();
            entries.resize(start + i, BigInt::zero());
            let prev = start - (i - 1);
            for j in (1..=i).rev() {
                let up_left = if j >= 2 { entries[prev + j - 2].clone() } else { BigInt::zero() };
                let right = if j < i { entries[start + j].clone() } else { BigInt::zero() };
                entries[start + j - 1] = up_left + right;
            }
        }
        Ok(Self { rows, entries })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// `C_ij`, with the out-of-range convention (`j = 0` or `j > i`) giving zero.
    ///
    /// Panics if `i` exceeds the number of rows built.
    pub fn get(&self, i: usize, j: usize) -> BigInt {
        assert!(i <= self.rows, "row {i} beyond triangle of {} rows", self.rows);
        if i == 0 || j == 0 || j > i {
            return BigInt::zero();
        }
        self.entries[i * (i - 1) / 2 + j - 1].clone()
    }

    /// Borrowed view of row `i` (columns `1..=i`).
    pub fn row(&self, i: usize) -> &[BigInt] {
        assert!(i >= 1 && i <= self.rows);
        let start = i * (i - 1) / 2;
        &self.entries[start..start + i]
    }

    /// `C_ij` as a float; exact while the entry stays below 2^53.
    pub fn get_f64(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).to_f64().unwrap_or(f64::INFINITY)
    }

    /// The row-sum identity `C_ij = sum_{k=j-1}^{i-1} C_(i-1)k` as an
    /// exact `(lhs, rhs)` pair.
    pub fn row_sum_identity(&self, i: usize, j: usize) -> Result<(BigInt, BigInt)> {
        if i < 2 || i > self.rows || j == 0 || j > i {
            return Err(Error::Domain(format!(
                "row-sum identity needs 2 <= i <= {} and 1 <= j <= i, got (i={i}, j={j})",
                self.rows
            )));
        }
        let lhs = self.get(i, j);
        let rhs = (j - 1..i).map(|k| self.get(i - 1, k)).sum();
        Ok((lhs, rhs))
    }

    /// Right-aligned text rendering, one row per line.
    pub fn to_aligned_string(&self) -> String {
        let width = self.entries.iter().map(|c| c.to_string().len()).max().unwrap_or(1);
        let mut out = String::new();
        for i in 1..=self.rows {
            let line: Vec<String> = self.row(i).iter().map(|c| format!("{c:>width$}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// CSV with header `i,j,C_ij`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,C_ij\n");
        for i in 1..=self.rows {
            for (j, c) in self.row(i).iter().enumerate() {
                out.push_str(&format!("{i},{},{c}\n", j + 1));
            }
        }
        out
    }
}

/// Exact dyadic rational `numerator / 2^exponent`, kept in canonical form
/// (odd numerator, or zero with exponent zero).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    numerator: BigInt,
    exponent: u32,
}

impl DyadicRational {
    pub fn new(numerator: impl Into<BigInt>, exponent: u32) -> Self {
        let mut d = Self { numerator: numerator.into(), exponent };
        d.normalize();
        d
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Self::new(n, 0)
    }

    /// `2^power` for any integer power.
    pub fn power_of_two(power: i64) -> Self {
        if power >= 0 {
            Self::new(BigInt::one() << power as usize, 0)
        } else {
            Self::new(BigInt::one(), (-power) as u32)
        }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        let n = self.numerator.to_f64().unwrap_or(f64::NAN);
        n / 2f64.powi(self.exponent as i32)
    }

    /// Multiplies by `2^-shift`.
    pub fn scale_down(&self, shift: u32) -> Self {
        Self::new(self.numerator.clone(), self.exponent + shift)
    }

    fn normalize(&mut self) {
        if self.numerator.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self.numerator.trailing_zeros().unwrap_or(0) as u32;
        let shift = tz.min(self.exponent);
        if shift > 0 {
            self.numerator >>= shift as usize;
            self.exponent -= shift;
        }
    }

    fn aligned(&self, other: &Self) -> (BigInt, BigInt, u32) {
        let e = self.exponent.max(other.exponent);
        let a = &self.numerator << (e - self.exponent) as usize;
        let b = &other.numerator << (e - other.exponent) as usize;
        (a, b, e)
    }
}

impl std::ops::Add for &DyadicRational {
    type Output = DyadicRational;
    fn add(self, rhs: Self) -> DyadicRational {
        let (a, b, e) = self.aligned(rhs);
        DyadicRational::new(a + b, e)
    }
}

impl std::ops::Sub for &DyadicRational {
    type Output = DyadicRational;
    fn sub(self, rhs: Self) -> DyadicRational {
        let (a, b, e) = self.aligned(rhs);
        DyadicRational::new(a - b, e)
    }
}

impl std::ops::Mul for &DyadicRational {
    type Output = DyadicRational;
    fn mul(self, rhs: Self) -> DyadicRational {
        DyadicRational::new(&self.numerator * &rhs.numerator, self.exponent + rhs.exponent)
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.numerator)
        } else if self.exponent < 128 {
            write!(f, "{}/{}", self.numerator, 1u128 << self.exponent)
        } else {
            let sign = if self.numerator.is_negative() { "-" } else { "" };
            write!(f, "{sign}{}/2^{}", self.numerator.abs(), self.exponent)
        }
    }
}

/// `f_j(1/4)` from `f_n = f_(n-1) - f_(n-2)/4`, seeded with `f_1 = 2`, `f_2 = 1`.
pub fn genfun_at_quarter(j: usize) -> Result<DyadicRational> {
    if j == 0 {
        return Err(Error::Domain("generating functions are indexed from j = 1".into()));
    }
    let mut prev = DyadicRational::from_integer(2);
    if j == 1 {
        return Ok(prev);
    }
    let mut cur = DyadicRational::from_integer(1);
    for _ in 3..=j {
        let next = &cur - &prev.scale_down(2);
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(cur)
}

// Entries below this are flushed to zero; they are far below anything that can
// move a double-precision column sum and would otherwise go subnormal.
const SCALED_FLUSH: f64 = 1e-300;

/// Partial column sums of `D_lj = C_lj / 4^l`, for every column up to
/// `max_column` and every term count up to `terms`.
///
/// The scaled entries come straight from `D_ij = D_(i-1)(j-1)/4 + D_i(j+1)`,
/// so no big integers or powers of four are ever formed.
#[derive(Debug, Clone)]
pub struct ColumnSums {
    max_column: usize,
    // partial[j-1][t-1] = sum of the first t terms of column j
    partial: Vec<Vec<f64>>,
}

impl ColumnSums {
    pub fn compute(max_column: usize, terms: usize) -> Result<Self> {
        if max_column == 0 || terms == 0 {
            return Err(Error::Domain("column sums need j >= 1 and terms >= 1".into()));
        }
        let last_row = max_column + terms - 1;
        let mut partial = vec![Vec::with_capacity(terms); max_column];
        let mut running = vec![0.0f64; max_column];
        let mut prev: Vec<f64> = Vec::new();
        let mut row: Vec<f64> = Vec::new();
        for i in 1..=last_row {
            row.clear();
            if i == 1 {
                row.push(0.25);
            } else {
                // Row i has nonzero entries up to column min(i, prev.len() + 1).
                let len = (prev.len() + 1).min(i);
                row.resize(len, 0.0);
                let mut right = if len == i { 0.25f64.powi(i as i32) } else { 0.0 };
                if len == i {
                    row[len - 1] = right;
                }
                let top = if len == i { len - 1 } else { len };
                for j in (1..=top).rev() {
                    let up_left = if j >= 2 { prev[j - 2] } else { 0.0 };
                    let v = 0.25 * up_left + right;
                    row[j - 1] = v;
                    right = v;
                }
                while row.last().is_some_and(|v| *v < SCALED_FLUSH) {
                    row.pop();
                }
            }
            for j in 1..=max_column {
                if i >= j && i < j + terms {
                    running[j - 1] += row.get(j - 1).copied().unwrap_or(0.0);
                    partial[j - 1].push(running[j - 1]);
                }
            }
            std::mem::swap(&mut prev, &mut row);
        }
        Ok(Self { max_column, partial })
    }

    /// `sum_{l=j}^{j+terms-1} C_lj / 4^l`.
    pub fn partial_sum(&self, j: usize, terms: usize) -> Option<f64> {
        if j == 0 || j > self.max_column || terms == 0 {
            return None;
        }
        self.partial[j - 1].get(terms - 1).copied()
    }

    /// All partial sums of column `j`, indexed by term count minus one.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.partial[j - 1]
    }
}

/// `sum_{l=j}^{j+terms-1} C_lj / 4^l`, which increases towards `2^-j`.
pub fn column_sum_partial(j: usize, terms: usize) -> Result<f64> {
    let sums = ColumnSums::compute(j, terms)?;
    Ok(sums.partial_sum(j, terms).expect("column computed"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(tri: &CatalanTriangle, i: usize) -> Vec<u64> {
        tri.row(i).iter().map(|c| c.to_u64().unwrap()).collect()
    }

    #[test]
    fn small_rows() {
        let tri = CatalanTriangle::build(5).unwrap();
        assert_eq!(row(&tri, 5), vec![14, 14, 9, 4, 1]);
        let one = CatalanTriangle::build(1).unwrap();
        assert_eq!(one.get(1, 1), BigInt::one());
        assert_eq!(one.get(1, 2), BigInt::zero());
        assert!(CatalanTriangle::build(0).is_err());
    }

    #[test]
    fn tenth_row_entries() {
        let tri = CatalanTriangle::build(10).unwrap();
        assert_eq!(tri.get(10, 4), BigInt::from(2002));
        assert_eq!(tri.get(10, 1), BigInt::from(4862));
    }

    #[test]
    fn row_sum_examples() {
        let tri = CatalanTriangle::build(10).unwrap();
        assert_eq!(tri.row_sum_identity(7, 3).unwrap(), (BigInt::from(90), BigInt::from(90)));
        assert_eq!(tri.row_sum_identity(2, 2).unwrap(), (BigInt::one(), BigInt::one()));
        let (l, r) = tri.row_sum_identity(10, 5).unwrap();
        assert_eq!(l, BigInt::from(1001));
        assert_eq!(r, BigInt::from(572 + 275 + 110 + 35 + 8 + 1));
        assert!(tri.row_sum_identity(1, 1).is_err());
        assert!(tri.row_sum_identity(11, 1).is_err());
        assert!(tri.row_sum_identity(5, 6).is_err());
    }

    #[test]
    fn entries_exceed_u64_without_overflow() {
        let tri = CatalanTriangle::build(40).unwrap();
        // Column 1 holds the Catalan numbers: C_(i,1) = binom(2(i-1), i-1) / i.
        let n = 39u32;
        let mut binom = BigInt::one();
        for k in 0..n {
            binom = binom * BigInt::from(2 * n - k) / BigInt::from(k + 1);
        }
        assert_eq!(tri.get(40, 1), binom / BigInt::from(n + 1));
        let tri = CatalanTriangle::build(45).unwrap();
        assert!(tri.get(45, 1).to_u64().is_none());
    }

    #[test]
    fn genfun_values() {
        assert_eq!(genfun_at_quarter(1).unwrap(), DyadicRational::from_integer(2));
        assert_eq!(genfun_at_quarter(2).unwrap(), DyadicRational::from_integer(1));
        assert_eq!(genfun_at_quarter(6).unwrap(), DyadicRational::new(1, 4));
        assert_eq!(genfun_at_quarter(6).unwrap().to_string(), "1/16");
        assert!(genfun_at_quarter(0).is_err());
    }

    #[test]
    fn dyadic_canonical_form() {
        let d = DyadicRational::new(12, 4);
        assert_eq!(d.numerator(), &BigInt::from(3));
        assert_eq!(d.exponent(), 2);
        let z = DyadicRational::new(0, 9);
        assert_eq!(z.exponent(), 0);
        assert!(z.is_zero());
        assert_eq!(DyadicRational::power_of_two(-3), DyadicRational::new(1, 3));
        assert_eq!(DyadicRational::power_of_two(2), DyadicRational::from_integer(4));
        let s = &DyadicRational::new(1, 1) + &DyadicRational::new(1, 2);
        assert_eq!(s, DyadicRational::new(3, 2));
        let p = &DyadicRational::new(3, 1) * &DyadicRational::new(1, 1);
        assert_eq!(p.to_f64(), 0.75);
    }

    #[test]
    fn column_sum_examples() {
        assert_eq!(column_sum_partial(1, 1).unwrap(), 0.25);
        // Independent log-gamma evaluation of the ballot numbers gives
        // 1/8 - 0.002115 for the first 10^4 terms.
        let v = column_sum_partial(3, 10_000).unwrap();
        assert!((v - 0.122_885).abs() < 2e-6, "{v}");
        assert!(v < 0.125);
        assert!(column_sum_partial(0, 5).is_err());
    }

    #[test]
    fn scaled_entries_match_exact_ratio() {
        let tri = CatalanTriangle::build(30).unwrap();
        let sums = ColumnSums::compute(4, 27).unwrap();
        for j in 1..=4 {
            let mut exact = 0.0;
            for l in j..j + 27 {
                exact += tri.get_f64(l, j) / 4f64.powi(l as i32);
                let t = l - j + 1;
                let got = sums.partial_sum(j, t).unwrap();
                assert!((got - exact).abs() <= 1e-15 * exact, "j={j} l={l}");
            }
        }
    }
}
