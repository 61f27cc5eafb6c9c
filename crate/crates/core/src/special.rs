//! Series implementations of the few special functions the design and its
//! oracles need: `I_1`, `I_1(x)/x`, `J_0` and its first zero, and the
//! `F_nk` majorant family.

use crate::error::{Error, Result};

const SERIES_REL_TOL: f64 = 1e-15;
const MAX_SERIES_TERMS: usize = 500;

/// Modified Bessel function `I_1(x) = sum (x/2)^(2m+1) / (m! (m+1)!)`.
///
/// Odd, so negative arguments are handled by symmetry.
pub fn bessel_i1(x: f64) -> f64 {
    if x < 0.0 {
        return -bessel_i1(-x);
    }
    let half = 0.5 * x;
    let q = half * half;
    let mut term = half;
    let mut sum = term;
    for m in 0..MAX_SERIES_TERMS {
        term *= q / ((m + 1) as f64 * (m + 2) as f64);
        if term <= SERIES_REL_TOL * sum {
            break;
        }
        sum += term;
    }
    sum
}

/// `I_1(x) / x`, equal to `1/2` at the origin.
pub fn bessel_i1_ratio(x: f64) -> f64 {
    // (1/2) sum (x^2/4)^m / (m! (m+1)!) -- no division by x anywhere.
    let q = 0.25 * x * x;
    let mut term = 0.5;
    let mut sum = term;
    for m in 0..MAX_SERIES_TERMS {
        term *= q / ((m + 1) as f64 * (m + 2) as f64);
        if term <= SERIES_REL_TOL * sum {
            break;
        }
        sum += term;
    }
    sum
}

/// Bessel function `J_0(x) = sum (-1)^m (x/2)^(2m) / (m!)^2`, for moderate `|x|`.
pub fn bessel_j0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = term;
    for m in 0..MAX_SERIES_TERMS {
        term *= -q / (((m + 1) * (m + 1)) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && (m as f64) > q.sqrt() {
            break;
        }
    }
    sum
}

/// First positive zero of `J_0`, by bisection of the series on `[2, 3]`.
///
/// `eps * j0_first_zero()^2 / R^2` is the slowest decay rate of the radial
/// heat equation on a disk of radius `R` with zero boundary value.
pub fn j0_first_zero() -> f64 {
    let (mut lo, mut hi) = (2.0_f64, 3.0_f64);
    let mut f_lo = bessel_j0(lo);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        let f_mid = bessel_j0(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Parameters of one member of the `F_nk` family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FnkParams {
    pub n: i32,
    pub k: i32,
    pub lambda_bar: f64,
}

impl FnkParams {
    pub fn new(n: i32, k: i32, lambda_bar: f64) -> Self {
        Self { n, k, lambda_bar }
    }
}

/// The majorant
/// `F_nk(a, b) = lb^(n+1) a^n b^n / (n! (n+1)!) * (a - b) * log^k((a+b)/(a-b)) / k!`.
///
/// Zero for negative indices and on the diagonal `b = a`, where the product
/// `(a - b) log^k(...)` has limit zero.
pub fn f_nk(alpha: f64, beta: f64, params: FnkParams) -> Result<f64> {
    if beta > alpha || beta < 0.0 {
        return Err(Error::Domain(format!(
            "F_nk needs 0 <= beta <= alpha, got alpha = {alpha}, beta = {beta}"
        )));
    }
    Ok(f_nk_unchecked(alpha, beta, params))
}

/// [`f_nk`] without the domain check; callers guarantee `0 <= beta <= alpha`.
pub(crate) fn f_nk_unchecked(alpha: f64, beta: f64, params: FnkParams) -> f64 {
    let FnkParams { n, k, lambda_bar } = params;
    if n < 0 || k < 0 || alpha == beta {
        return 0.0;
    }
    let ab = lambda_bar * alpha * beta;
    let mut coeff = lambda_bar;
    for m in 1..=n {
        coeff *= ab / (m as f64 * (m + 1) as f64);
    }
    let gap = alpha - beta;
    let mut logs = 1.0;
    if k > 0 {
        let l = ((alpha + beta) / gap).ln();
        for m in 1..=k {
            logs *= l / m as f64;
        }
    }
    coeff * gap * logs
}
