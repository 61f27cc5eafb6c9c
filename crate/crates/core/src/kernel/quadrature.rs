//! Product-integration weights on lattice cells.
//!
//! Cell `(p, q)` is `[p, p+1] x [q, q+1]` in lattice index units, corners
//! ordered `(p,q), (p+1,q), (p,q+1), (p+1,q+1)`. The singular weight
//! `eta sigma / (eta^2 - sigma^2)^2` is homogeneous of degree -2, so its cell
//! integrals do not depend on the spacing. The only singular point any cell
//! touches is the diagonal corner `(p, p)` of the cells with `q = p - 1`;
//! those are integrated after a Duffy split with a quadratic radial map,
//! which leaves a smooth integrand.

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::Scheme;

const FAR_POINTS: usize = 8;
const NEAR_POINTS: usize = 16;
const CORNER_POINTS: usize = 24;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// Quadrature point in local cell coordinates: `x = eta - p` and
/// `t = (q + 1) - sigma`, so the diagonal corner of a corner cell is `(0, 0)`.
#[derive(Clone, Copy)]
struct Point {
    x: f64,
    t: f64,
    w: f64,
}

struct Rules {
    far: Vec<Point>,
    near: Vec<Point>,
    corner: Vec<Point>,
}

fn tensor(n: usize) -> Vec<Point> {
    let (x, w) = gauss_legendre(n);
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            pts.push(Point { x: x[i], t: x[j], w: w[i] * w[j] });
        }
    }
    pts
}

/// Duffy split of the unit square at `(0, 0)` with `u = y^2`.
fn duffy(n: usize) -> Vec<Point> {
    let (x, w) = gauss_legendre(n);
    let mut pts = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        let y = x[i];
        let u = y * y;
        let jac = 2.0 * y * y * y;
        for j in 0..n {
            let v = x[j];
            let wt = w[i] * w[j] * jac;
            pts.push(Point { x: u, t: u * v, w: wt });
            pts.push(Point { x: u * v, t: u, w: wt });
        }
    }
    pts
}

impl Rules {
    fn new() -> Self {
        Self { far: tensor(FAR_POINTS), near: tensor(NEAR_POINTS), corner: duffy(CORNER_POINTS) }
    }

    fn for_cell(&self, p: usize, q: usize) -> &[Point] {
        let gap = p - q - 1;
        if gap == 0 {
            &self.corner
        } else if gap == 1 || p + q <= 3 {
            &self.near
        } else {
            &self.far
        }
    }
}

/// Geometry handed to a weight density: lattice coordinates and the
/// cancellation-free `eta - sigma`, `eta + sigma`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct CellPoint {
    pub eta: f64,
    pub sigma: f64,
    pub diff: f64,
    pub sum: f64,
}

/// Integrals of `density * basis_c` over every cell, already converted to
/// multipliers of the four corner values of `G` for the given scheme.
///
/// Entry `p * (2N + 1) + q`; only cells with `q < p` and `p + q + 2 <= 2N`
/// are filled.
pub(crate) fn cell_weights<F>(n: usize, scheme: Scheme, density: F) -> Result<Vec<[f64; 4]>>
where
    F: Fn(CellPoint) -> f64 + Sync,
{
    let extent = 2 * n;
    let side = extent + 1;
    let rules = Rules::new();
    let mut out = vec![[0.0; 4]; side * side];
    out.par_chunks_mut(side).enumerate().for_each(|(p, row)| {
        if p == 0 || p >= extent {
            return;
        }
        for q in 0..p {
            if p + q + 2 > extent {
                break;
            }
            row[q] = one_cell(p, q, scheme, rules.for_cell(p, q), &density);
        }
    });
    if let Some(k) = out.iter().position(|w| w.iter().any(|v| !v.is_finite())) {
        return Err(Error::Quadrature(format!("non-finite weight in cell ({}, {})", k / side, k % side)));
    }
    Ok(out)
}

fn one_cell<F>(p: usize, q: usize, scheme: Scheme, rule: &[Point], density: &F) -> [f64; 4]
where
    F: Fn(CellPoint) -> f64,
{
    let (pf, qf) = (p as f64, q as f64);
    let gap = (p - q - 1) as f64;
    let mut acc = [0.0; 4];
    for pt in rule {
        let (x, t) = (pt.x, pt.t);
        let diff = gap + x + t;
        let sum = pf + qf + 1.0 + x - t;
        let cp = CellPoint { eta: pf + x, sigma: qf + 1.0 - t, diff, sum };
        let mut f = pt.w * density(cp);
        if scheme == Scheme::Factored {
            f *= (diff * sum).sqrt();
        }
        let (ox, ot) = (1.0 - x, 1.0 - t);
        acc[0] += f * ox * t;
        acc[1] += f * x * t;
        acc[2] += f * ox * ot;
        acc[3] += f * x * ot;
    }
    let corner = q + 1 == p;
    match scheme {
        Scheme::Nodal => {
            if corner {
                // G vanishes at the diagonal corner.
                acc[2] = 0.0;
            }
            acc
        }
        Scheme::Factored => {
            if corner {
                // G / S at the diagonal corner is extrapolated from the
                // other three: h2 = h0 + h3 - h1.
                let w2 = acc[2];
                acc[0] += w2;
                acc[1] -= w2;
                acc[3] += w2;
                acc[2] = 0.0;
            }
            let s = |a: usize, b: usize| (((a + b) * (a - b)) as f64).sqrt();
            let scale = [s(p, q), s(p + 1, q), s(p, q + 1), s(p + 1, q + 1)];
            for c in 0..4 {
                if acc[c] != 0.0 {
                    acc[c] /= scale[c];
                }
            }
            acc
        }
    }
}

/// `eta sigma / (eta^2 - sigma^2)^2` written without cancellation.
pub(crate) fn singular_density(cp: CellPoint) -> f64 {
    let ds = cp.diff * cp.sum;
    cp.eta * cp.sigma / (ds * ds)
}

/// Composite Simpson rule for `f` on `[a, b]` with `panels` (rounded up to
/// even, at least 4) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = panels.max(4).div_ceil(2) * 2;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for k in 1..m {
        let x = a + k as f64 * h;
        s += if k % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials() {
        for n in [1, 2, 5, 8, 16, 24] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                assert!((s - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn duffy_rule_integrates_the_square() {
        let s: f64 = duffy(10).iter().map(|p| p.w).sum();
        assert!((s - 1.0).abs() < 1e-14);
        let s: f64 = duffy(10).iter().map(|p| p.w * p.x * p.t).sum();
        assert!((s - 0.25).abs() < 1e-14);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 4);
        assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-14);
        assert_eq!(simpson(|x| x, 1.0, 1.0, 4), 0.0);
    }

    #[test]
    fn corner_weights_match_far_field_limit() {
        // Far from the origin the weight tends to 1 / (4 (x + t)^2) in local
        // coordinates, whose corner moments are 1/8, (ln 2 - 1/2)/4, 1/8.
        let p = 100_000;
        let c = one_cell(p, p - 1, Scheme::Nodal, &duffy(CORNER_POINTS), &singular_density);
        let ln2 = 2f64.ln();
        assert!((c[0] - 0.125).abs() < 1e-8);
        assert!((c[1] - 0.25 * (ln2 - 0.5)).abs() < 1e-8);
        assert!((c[3] - 0.125).abs() < 1e-8);
        assert_eq!(c[2], 0.0);
    }

    #[test]
    fn corner_rule_is_converged() {
        let p = 3;
        let q = 2;
        let dens = |cp: CellPoint| singular_density(cp);
        for scheme in [Scheme::Nodal, Scheme::Factored] {
            let coarse = one_cell(p, q, scheme, &duffy(CORNER_POINTS), &dens);
            let fine = one_cell(p, q, scheme, &duffy(2 * CORNER_POINTS), &dens);
            for c in 0..4 {
                assert!((coarse[c] - fine[c]).abs() <= 1e-13 * fine[c].abs().max(1e-3), "{scheme:?} {c}");
            }
        }
    }

    #[test]
    fn near_rule_is_converged() {
        let dens = |cp: CellPoint| singular_density(cp);
        for (p, q) in [(3, 1), (1, 0), (2, 0), (10, 8), (10, 7)] {
            let rules = Rules::new();
            let used = one_cell(p, q, Scheme::Factored, rules.for_cell(p, q), &dens);
            let fine = one_cell(p, q, Scheme::Factored, &tensor(48), &dens);
            let fine = if p == q + 1 { one_cell(p, q, Scheme::Factored, &duffy(48), &dens) } else { fine };
            for c in 0..4 {
                assert!((used[c] - fine[c]).abs() <= 1e-12 * fine[c].abs().max(1e-6), "({p},{q}) {c}");
            }
        }
    }
}
