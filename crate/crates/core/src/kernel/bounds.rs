use crate::combinatorics::CatalanTriangle;
use crate::error::{Error, Result};
use crate::profile::ReactionProfile;
use crate::special::{bessel_i1_ratio, f_nk_unchecked, FnkParams};

use super::grid::{to_alphabeta, TriangleGrid};

/// Closed-form kernel for constant `lambda0`:
/// `-(lambda0/eps) rho I1(z)/z`, `z = sqrt((lambda0/eps)(r^2 - rho^2))`.
pub fn exact_constant_kernel(lambda0: f64, epsilon: f64, r: f64, rho: f64) -> f64 {
    let c = lambda0 / epsilon;
    let z = (c * (r * r - rho * rho).max(0.0)).sqrt();
    -c * rho * bessel_i1_ratio(z)
}

fn check_triangle(r: f64, rho: f64, profile: &ReactionProfile) -> Result<()> {
    to_alphabeta(r, rho)?;
    if r > profile.radius() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("r = {r} exceeds the radius {}", profile.radius())));
    }
    Ok(())
}

/// `|K(r, rho)| <= rho (lambda_max/eps) I1(z)/z`, `z = sqrt((lambda_max/eps)(r^2 - rho^2))`.
///
/// Equal to `2 rho sqrt(lb) I1(2 sqrt(lb (r^2 - rho^2))) / sqrt(r^2 - rho^2)`;
/// the constant-coefficient kernel attains it.
pub fn kernel_bound(r: f64, rho: f64, profile: &ReactionProfile) -> Result<f64> {
    check_triangle(r, rho, profile)?;
    let c = profile.lambda_max() / profile.epsilon();
    let z = (c * (r * r - rho * rho)).sqrt();
    Ok(c * rho * bessel_i1_ratio(z))
}

/// The bound without the factor 2: `rho sqrt(lb) I1(2 sqrt(lb (r^2 - rho^2))) / sqrt(r^2 - rho^2)`.
/// Kept for comparison only; the exact constant kernel violates it.
pub fn kernel_bound_half(r: f64, rho: f64, profile: &ReactionProfile) -> Result<f64> {
    Ok(0.5 * kernel_bound(r, rho, profile)?)
}

/// `(i, j, c)` triples with `|G_n| <= sum c F_ij`: `F_n0` with coefficient 1
/// followed by `C_{(n-i) j} / 4^(n-i)` for `0 <= i < n`, `1 <= j <= n - i`.
pub fn series_bound_coefficients(n: usize, triangle: &CatalanTriangle) -> Result<Vec<(usize, usize, f64)>> {
    if n == 0 {
        return Ok(vec![(0, 0, 1.0)]);
    }
    if triangle.rows() < n {
        return Err(Error::Domain(format!("Catalan triangle has {} rows, need {n}", triangle.rows())));
    }
    let mut out = vec![(n, 0, 1.0)];
    for i in 0..n {
        let m = n - i;
        let scale = 0.25f64.powi(m as i32);
        for j in 1..=m {
            out.push((i, j, triangle.get_f64(m, j) * scale));
        }
    }
    Ok(out)
}

/// Right-hand side of the Catalan majorant for `|G_n|` at every node.
pub fn series_bound_term(
    n: usize,
    grid: &TriangleGrid,
    profile: &ReactionProfile,
    triangle: &CatalanTriangle,
) -> Result<Vec<f64>> {
    let coeffs = series_bound_coefficients(n, triangle)?;
    let lb = profile.lambda_bar();
    Ok(grid
        .nodes()
        .map(|(i, j)| {
            let (alpha, beta) = (grid.coord(i) + grid.coord(j), grid.coord(i) - grid.coord(j));
            coeffs
                .iter()
                .map(|&(a, b, c)| c * f_nk_unchecked(alpha, beta, FnkParams::new(a as i32, b as i32, lb)))
                .sum()
        })
        .collect())
}

/// `sum_n F_n0 = sqrt(lb) (alpha - beta) I1(2 sqrt(lb alpha beta)) / sqrt(alpha beta)`.
pub fn g_series_limit(alpha: f64, beta: f64, lambda_bar: f64) -> f64 {
    let x = 2.0 * (lambda_bar * alpha * beta).sqrt();
    2.0 * lambda_bar * (alpha - beta) * bessel_i1_ratio(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::f_nk;

    #[test]
    fn exact_kernel_examples() {
        assert_eq!(exact_constant_kernel(3.0, 1.0, 0.8, 0.0), 0.0);
        assert!((exact_constant_kernel(2.0, 1.0, 0.5, 0.5) + 0.5).abs() < 1e-15);
        // -5 I1(sqrt 7.5) / sqrt 7.5 with I1(sqrt 7.5) = 3.1231376547158733.
        let v = exact_constant_kernel(10.0, 1.0, 1.0, 0.5);
        assert!((v + 5.702_043_145_605_548).abs() < 1e-13, "{v}");
    }

    #[test]
    fn bound_examples() {
        let p = ReactionProfile::constant(2.0, 1.0, 1.0).unwrap();
        assert_eq!(kernel_bound(0.7, 0.0, &p).unwrap(), 0.0);
        assert!((kernel_bound(0.5, 0.5, &p).unwrap() - 0.5).abs() < 1e-15);
        assert!((kernel_bound_half(0.5, 0.5, &p).unwrap() - 0.25).abs() < 1e-15);
        assert!(kernel_bound(0.5, 0.6, &p).is_err());
        assert!(kernel_bound(1.5, 0.6, &p).is_err());
    }

    #[test]
    fn bound_in_bessel_form() {
        let p = ReactionProfile::constant(7.0, 0.5, 1.0).unwrap();
        let lb = p.lambda_bar();
        let (r, rho) = (0.9, 0.3);
        let s = (r * r - rho * rho) as f64;
        let x = 2.0 * (lb * s).sqrt();
        let bessel_form = 2.0 * rho * lb.sqrt() * crate::special::bessel_i1(x) / s.sqrt();
        assert!((kernel_bound(r, rho, &p).unwrap() - bessel_form).abs() < 1e-13 * bessel_form);
    }

    #[test]
    fn majorant_coefficients() {
        let tri = CatalanTriangle::build(10).unwrap();
        let c = series_bound_coefficients(1, &tri).unwrap();
        assert_eq!(c, vec![(1, 0, 1.0), (0, 1, 0.25)]);
        let c = series_bound_coefficients(2, &tri).unwrap();
        assert_eq!(c, vec![(2, 0, 1.0), (0, 1, 1.0 / 16.0), (0, 2, 1.0 / 16.0), (1, 1, 0.25)]);
        let c = series_bound_coefficients(4, &tri).unwrap();
        let f01 = c.iter().find(|t| (t.0, t.1) == (0, 1)).unwrap().2;
        assert_eq!(f01, 5.0 / 256.0);
        let f03 = c.iter().find(|t| (t.0, t.1) == (0, 3)).unwrap().2;
        assert_eq!(f03, 3.0 / 256.0);
        assert!(series_bound_coefficients(11, &tri).is_err());
    }

    #[test]
    fn bound_term_pointwise() {
        let tri = CatalanTriangle::build(4).unwrap();
        let p = ReactionProfile::constant(1.0, 1.0, 1.0).unwrap();
        let grid = TriangleGrid::new(4, 1.0).unwrap();
        let b = series_bound_term(1, &grid, &p, &tri).unwrap();
        let lb = p.lambda_bar();
        for ((i, j), v) in grid.nodes().zip(&b) {
            let (al, be) = (grid.coord(i) + grid.coord(j), grid.coord(i) - grid.coord(j));
            let want = f_nk(al, be, FnkParams::new(1, 0, lb)).unwrap() + 0.25 * f_nk(al, be, FnkParams::new(0, 1, lb)).unwrap();
            assert!((v - want).abs() < 1e-15);
        }
    }

    #[test]
    fn series_limit_is_the_sum_of_f_n0() {
        for (al, be, lb) in [(1.0, 0.5, 0.25), (2.0, 1.0, 1.0), (1.5, 0.2, 2.5), (2.0, 2.0, 1.0), (1.3, 0.0, 0.8)] {
            let s: f64 = (0..=40).map(|n| f_nk(al, be, FnkParams::new(n, 0, lb)).unwrap()).sum();
            assert!((s - g_series_limit(al, be, lb)).abs() < 1e-8, "{al} {be} {lb}");
        }
    }
}
