use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::profile::ReactionProfile;

use super::grid::{LatticeField, TriangleGrid};
use super::quadrature::{cell_weights, simpson, singular_density, CellPoint};
use super::{Scheme, Variant};

/// Weight of the regular part of the integral operator.
#[derive(Debug, Clone, Copy)]
pub enum SmoothWeight<'a> {
    /// `lambda((eta - sigma)/2) / (4 eps)` (direct) or
    /// `-lambda((eta + sigma)/2) / (4 eps)` (inverse).
    Profile(&'a ReactionProfile, Variant),
    /// A constant weight, as in the majorant recursion.
    Constant(f64),
}

/// Discretized `H1` and `H2` on one grid: the weights are computed once and
/// reused for every iterate.
#[derive(Debug, Clone)]
pub struct KernelOperators {
    n: usize,
    scheme: Scheme,
    smooth: Vec<[f64; 4]>,
    singular: Vec<[f64; 4]>,
    combined: Vec<[f64; 4]>,
}

impl KernelOperators {
    pub fn new(grid: &TriangleGrid, scheme: Scheme, weight: SmoothWeight<'_>) -> Result<Self> {
        let n = grid.subdivisions();
        let h = grid.spacing();
        let h2 = h * h;
        let smooth = match weight {
            SmoothWeight::Constant(c) => cell_weights(n, scheme, |_| c * h2)?,
            SmoothWeight::Profile(profile, variant) => {
                check_radius(grid, profile)?;
                let scale = h2 / (4.0 * profile.epsilon());
                match variant {
                    Variant::Direct => {
                        cell_weights(n, scheme, |cp: CellPoint| scale * profile.lambda_at(0.5 * h * cp.diff))?
                    }
                    Variant::Inverse => {
                        cell_weights(n, scheme, |cp: CellPoint| -scale * profile.lambda_at(0.5 * h * cp.sum))?
                    }
                }
            }
        };
        let singular = cell_weights(n, scheme, singular_density)?;
        let combined = smooth
            .iter()
            .zip(&singular)
            .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]])
            .collect();
        Ok(Self { n, scheme, smooth, singular, combined })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// `H1[G]`.
    pub fn apply_smooth(&self, g: &LatticeField) -> LatticeField {
        self.apply_with(&self.smooth, g)
    }

    /// `H2[G]`. Values of `G` on the diagonal `beta = alpha` are never read.
    pub fn apply_singular(&self, g: &LatticeField) -> LatticeField {
        self.apply_with(&self.singular, g)
    }

    /// `H1[G] + H2[G]`.
    pub fn apply(&self, g: &LatticeField) -> LatticeField {
        self.apply_with(&self.combined, g)
    }

    fn apply_with(&self, weights: &[[f64; 4]], g: &LatticeField) -> LatticeField {
        assert_eq!(g.subdivisions(), self.n, "field and operator grids differ");
        let extent = 2 * self.n;
        let side = extent + 1;
        let gv = g.raw();
        // Per column p: running sums over q of the cell integrals, so that
        // colsum[p][b] = sum_{q < b} cell(p, q).
        let mut colsum = vec![0.0; side * side];
        colsum.par_chunks_mut(side).enumerate().for_each(|(p, row)| {
            if p == 0 || p >= extent {
                return;
            }
            let mut acc = 0.0;
            for q in 0..p {
                if p + q + 2 > extent {
                    break;
                }
                let w = &weights[p * side + q];
                let c0 = p * side + q;
                let c1 = c0 + side;
                let v = w[0] * gv[c0] + w[1] * gv[c1] + w[2] * gv[c0 + 1] + w[3] * gv[c1 + 1];
                acc += v;
                row[q + 1] = acc;
            }
        });
        // H(a, b) = sum_{p = b}^{a - 1} colsum[p][b].
        let columns: Vec<Vec<f64>> = (0..=self.n)
            .into_par_iter()
            .map(|b| {
                let top = extent - b;
                let mut out = vec![0.0; top - b + 1];
                let mut acc = 0.0;
                for a in (b + 1)..=top {
                    acc += colsum[(a - 1) * side + b];
                    out[a - b] = acc;
                }
                out
            })
            .collect();
        let mut field = g.clone();
        field.raw_mut().iter_mut().for_each(|v| *v = 0.0);
        for (b, col) in columns.iter().enumerate() {
            for (k, &v) in col.iter().enumerate() {
                field.set(b + k, b, v);
            }
        }
        field
    }
}

pub(crate) fn check_radius(grid: &TriangleGrid, profile: &ReactionProfile) -> Result<()> {
    let (a, b) = (grid.radius(), profile.radius());
    if (a - b).abs() > 1e-12 * a.max(b) {
        return Err(Error::GridMismatch(format!("grid radius {a} differs from profile radius {b}")));
    }
    Ok(())
}

/// `H1[G]` for a single application; builds the weights on the fly.
pub fn apply_smooth_operator(
    g: &LatticeField,
    grid: &TriangleGrid,
    profile: &ReactionProfile,
    variant: Variant,
    scheme: Scheme,
) -> Result<LatticeField> {
    Ok(KernelOperators::new(grid, scheme, SmoothWeight::Profile(profile, variant))?.apply_smooth(g))
}

/// `H2[G]` for a single application; builds the weights on the fly.
pub fn apply_singular_operator(g: &LatticeField, grid: &TriangleGrid, scheme: Scheme) -> Result<LatticeField> {
    Ok(KernelOperators::new(grid, scheme, SmoothWeight::Constant(0.0))?.apply_singular(g))
}

const G0_REFERENCE_PANELS: f64 = 512.0;

/// `G0(alpha, beta) = -int_{beta/2}^{alpha/2} lambda / (2 eps)` by composite
/// Simpson with a panel count proportional to `(alpha - beta) / R`.
pub fn g0(alpha: f64, beta: f64, profile: &ReactionProfile) -> f64 {
    let panels = (G0_REFERENCE_PANELS * (alpha - beta).abs() / profile.radius()).ceil() as usize;
    let eps = profile.epsilon();
    -simpson(|rho| profile.lambda_at(rho) / (2.0 * eps), 0.5 * beta, 0.5 * alpha, panels)
}

/// `G0` on the whole lattice, from a cumulative Simpson table at multiples
/// of `D/2` so that every value costs O(1).
pub fn g0_field(grid: &TriangleGrid, profile: &ReactionProfile) -> LatticeField {
    let n = grid.subdivisions();
    let extent = 2 * n;
    let step = 0.5 * grid.spacing();
    let eps = profile.epsilon();
    let f = |x: f64| profile.lambda_at(x) / (2.0 * eps);
    let mut cumulative = vec![0.0; extent + 1];
    for k in 0..extent {
        let a = k as f64 * step;
        let b = (k + 1) as f64 * step;
        cumulative[k + 1] = cumulative[k] + step / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
    }
    let mut field = LatticeField::zeros(grid);
    for a in 0..=extent {
        for b in 0..=a.min(extent - a) {
            field.set(a, b, -(cumulative[a] - cumulative[b]));
        }
    }
    field
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Lambda;

    #[test]
    fn g0_examples() {
        let p = ReactionProfile::constant(1.0, 1.0, 1.0).unwrap();
        assert!((g0(1.0, 0.5, &p) + 0.125).abs() < 1e-15);
        assert_eq!(g0(0.7, 0.7, &p), 0.0);
        let p = ReactionProfile::new(1.0, 1.0, Lambda::Polynomial(vec![0.0, 1.0])).unwrap();
        assert!((g0(2.0, 0.0, &p) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn g0_field_matches_pointwise() {
        let p = ReactionProfile::new(1.0, 1.0, Lambda::Polynomial(vec![10.0, 0.0, 10.0])).unwrap();
        let grid = TriangleGrid::new(10, 1.0).unwrap();
        let f = g0_field(&grid, &p);
        let h = grid.spacing();
        for (i, j) in grid.nodes() {
            let (a, b) = grid.lattice_index(i, j);
            let v = g0(a as f64 * h, b as f64 * h, &p);
            assert!((f.get(a, b) - v).abs() < 1e-13);
        }
    }

    #[test]
    fn operators_vanish_on_zero_and_on_beta_zero() {
        let p = ReactionProfile::constant(10.0, 1.0, 1.0).unwrap();
        let grid = TriangleGrid::new(12, 1.0).unwrap();
        for scheme in [Scheme::Nodal, Scheme::Factored] {
            let ops = KernelOperators::new(&grid, scheme, SmoothWeight::Profile(&p, Variant::Direct)).unwrap();
            let zero = LatticeField::zeros(&grid);
            assert_eq!(ops.apply(&zero).sup_on_nodes(), 0.0);
            let g = LatticeField::from_fn(&grid, |a, b| (a - b) * (1.0 + a));
            let out = ops.apply(&g);
            for a in 0..=24 {
                assert_eq!(out.get(a, 0), 0.0);
            }
            for a in 0..=12 {
                assert_eq!(out.get(a, a), 0.0);
            }
        }
    }

    #[test]
    fn radius_mismatch_is_reported() {
        let p = ReactionProfile::constant(10.0, 1.0, 2.0).unwrap();
        let grid = TriangleGrid::new(4, 1.0).unwrap();
        let r = KernelOperators::new(&grid, Scheme::Nodal, SmoothWeight::Profile(&p, Variant::Direct));
        assert!(matches!(r, Err(Error::GridMismatch(_))));
    }
}
