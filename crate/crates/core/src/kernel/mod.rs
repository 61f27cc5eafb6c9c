//! Backstepping kernel by successive approximations of the integral equation
//! `G = G0 + H1[G] + H2[G]` in `(alpha, beta) = (r + rho, r - rho)`, with
//! `G = sqrt(r / rho) K`.

mod bounds;
mod export;
mod grid;
mod operators;
mod quadrature;
mod transform;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{LambdaDescriptor, ReactionProfile};

pub use bounds::{
    exact_constant_kernel, g_series_limit, kernel_bound, kernel_bound_half, series_bound_coefficients,
    series_bound_term,
};
pub use export::{write_kernel_csv, KernelSidecar};
pub use grid::{from_alphabeta, to_alphabeta, LatticeField, TriangleGrid};
pub use operators::{apply_singular_operator, apply_smooth_operator, g0, g0_field, KernelOperators, SmoothWeight};
pub use quadrature::{gauss_legendre, simpson};
pub use transform::{forward_transform, inverse_transform, transform_roundtrip};

/// Which kernel equation is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `K`, mapping the plant to the target system.
    Direct,
    /// `L`, mapping the target system back to the plant.
    Inverse,
}

/// How `G` is represented inside a lattice cell.
///
/// `Factored` writes `G = sqrt(eta^2 - sigma^2) h` with `h` bilinear, which
/// matches the square-root behaviour of the solution at the diagonal and
/// gives second-order accuracy. `Nodal` interpolates `G` itself bilinearly;
/// its iterates follow the individual series terms (each of which vanishes
/// linearly at the diagonal) more faithfully, at first-order accuracy for the
/// sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Factored,
    Nodal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub scheme: Scheme,
    /// Number of leading series terms `G_0, G_1, ...` kept in the result.
    pub keep_terms: usize,
}

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 500;

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER, scheme: Scheme::Factored, keep_terms: 0 }
    }
}

/// Solved kernel on a [`TriangleGrid`].
#[derive(Debug, Clone)]
pub struct KernelTable {
    grid: TriangleGrid,
    variant: Variant,
    scheme: Scheme,
    tol: f64,
    epsilon: f64,
    lambda: LambdaDescriptor,
    lattice: LatticeField,
    values_g: Vec<f64>,
    values_k: Vec<f64>,
    iterations_used: usize,
    increment_history: Vec<f64>,
    terms: Vec<Vec<f64>>,
}

impl KernelTable {
    fn assemble(
        grid: TriangleGrid,
        profile: &ReactionProfile,
        variant: Variant,
        opts: &SolverOptions,
        lattice: LatticeField,
        increment_history: Vec<f64>,
        terms: Vec<Vec<f64>>,
    ) -> Self {
        let values_g = lattice.node_values();
        let values_k = grid
            .nodes()
            .zip(&values_g)
            .map(|((i, j), &g)| if j == 0 { 0.0 } else { (j as f64 / i as f64).sqrt() * g })
            .collect();
        Self {
            grid,
            variant,
            scheme: opts.scheme,
            tol: opts.tol,
            epsilon: profile.epsilon(),
            lambda: profile.lambda().descriptor(),
            lattice,
            values_g,
            values_k,
            iterations_used: increment_history.len(),
            increment_history,
            terms,
        }
    }

    pub fn grid(&self) -> &TriangleGrid {
        &self.grid
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lambda_descriptor(&self) -> &LambdaDescriptor {
        &self.lambda
    }

    /// `G` on the full `(alpha, beta)` lattice.
    pub fn lattice(&self) -> &LatticeField {
        &self.lattice
    }

    /// `G` at the nodes, in [`TriangleGrid::nodes`] order.
    pub fn values_g(&self) -> &[f64] {
        &self.values_g
    }

    /// `K` (or `L`) at the nodes, in [`TriangleGrid::nodes`] order.
    pub fn values_k(&self) -> &[f64] {
        &self.values_k
    }

    pub fn g_at(&self, i: usize, j: usize) -> f64 {
        self.values_g[self.grid.node_index(i, j)]
    }

    pub fn k_at(&self, i: usize, j: usize) -> f64 {
        self.values_k[self.grid.node_index(i, j)]
    }

    /// Number of series terms summed, `G_0` included.
    pub fn iterations_used(&self) -> usize {
        self.iterations_used
    }

    /// Node sup-norm of each summed term `G_k`.
    pub fn increment_history(&self) -> &[f64] {
        &self.increment_history
    }

    /// Node values of the leading terms requested by
    /// [`SolverOptions::keep_terms`].
    pub fn terms(&self) -> &[Vec<f64>] {
        &self.terms
    }

    /// `K(R, rho_j)` for `j = 0..=N`.
    pub fn boundary_row(&self) -> Vec<f64> {
        let n = self.grid.subdivisions();
        (0..=n).map(|j| self.k_at(n, j)).collect()
    }

    /// `K(R, rho)` by linear interpolation along the last row.
    pub fn boundary_at(&self, rho: f64) -> f64 {
        let n = self.grid.subdivisions();
        let h = self.grid.spacing();
        let x = (rho / h).clamp(0.0, n as f64);
        let j = (x.floor() as usize).min(n - 1);
        let t = x - j as f64;
        (1.0 - t) * self.k_at(n, j) + t * self.k_at(n, j + 1)
    }
}

/// Sums `G = G_0 + G_1 + ...` with `G_k = H1[G_{k-1}] + H2[G_{k-1}]` until the
/// node sup-norm of a term falls below `tol * max(1, sup |G|)`.
pub fn solve_kernel(
    profile: &ReactionProfile,
    grid: &TriangleGrid,
    variant: Variant,
    opts: &SolverOptions,
) -> Result<KernelTable> {
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {}", opts.tol)));
    }
    if opts.max_iter == 0 {
        return Err(Error::Domain("max_iter must be at least 1".into()));
    }
    operators::check_radius(grid, profile)?;
    let ops = KernelOperators::new(grid, opts.scheme, SmoothWeight::Profile(profile, variant))?;
    let mut term = g0_field(grid, profile);
    let mut sum = term.clone();
    let mut history = Vec::new();
    let mut terms = Vec::new();
    loop {
        let size = term.sup_on_nodes();
        if !size.is_finite() {
            return Err(Error::Quadrature(format!("series term {} is not finite", history.len())));
        }
        history.push(size);
        if terms.len() < opts.keep_terms {
            terms.push(term.node_values());
        }
        if size < opts.tol * sum.sup_on_nodes().max(1.0) {
            break;
        }
        if history.len() == opts.max_iter {
            let partial = KernelTable::assemble(*grid, profile, variant, opts, sum, history, terms);
            return Err(Error::MaxIterExceeded { iterations: opts.max_iter, last_increment: size, partial: Box::new(partial) });
        }
        term = ops.apply(&term);
        sum.axpy(1.0, &term);
    }
    Ok(KernelTable::assemble(*grid, profile, variant, opts, sum, history, terms))
}

/// `sup |G - G0 - H1[G] - H2[G]|` over the nodes, with the operators the
/// table was solved with.
pub fn residual(table: &KernelTable, profile: &ReactionProfile) -> Result<f64> {
    let grid = table.grid();
    let ops = KernelOperators::new(grid, table.scheme(), SmoothWeight::Profile(profile, table.variant()))?;
    let mut r = table.lattice().clone();
    r.axpy(-1.0, &g0_field(grid, profile));
    r.axpy(-1.0, &ops.apply(table.lattice()));
    Ok(r.sup_on_nodes())
}
