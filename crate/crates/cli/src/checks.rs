//! Check suites behind `verify` and `catalan`.

use std::fmt;

use backstepping_core::combinatorics::{genfun_at_quarter, CatalanTriangle, ColumnSums, DyadicRational};
use backstepping_core::kernel::{
    exact_constant_kernel, kernel_bound, residual, series_bound_term, simpson, solve_kernel, transform_roundtrip,
    KernelOperators, KernelTable, LatticeField, Scheme, SmoothWeight, SolverOptions, TriangleGrid, Variant,
};
use backstepping_core::special::{f_nk, FnkParams};
use backstepping_core::{ReactionProfile, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub outcome: Outcome,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        let outcome = if passed { Outcome::Pass } else { Outcome::Fail };
        Self { name: name.into(), outcome, detail: detail.into() }
    }

    fn skip(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { name: name.into(), outcome: Outcome::Skip, detail: detail.into() }
    }

    pub fn failed(&self) -> bool {
        self.outcome == Outcome::Fail
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Skip => "SKIP",
        };
        write!(f, "{tag}  {:<32} {}", self.name, self.detail)
    }
}

/// Test functions for the transform roundtrip.
pub const ROUNDTRIP_FUNCTIONS: [(&str, fn(f64) -> f64); 3] =
    [("1 - r^2", |r| 1.0 - r * r), ("cos 3r", |r| (3.0 * r).cos()), ("r^3 - r/2 + 1/5", |r| r * r * r - 0.5 * r + 0.2)];

pub const ORACLE_TOL: f64 = 1e-3;
pub const ROUNDTRIP_TOL: f64 = 1e-3;
pub const MAJORANT_SLACK: f64 = 1e-8;
pub const MAJORANT_TERMS: usize = 8;

/// `sup |K - K_exact| / sup |K_exact|` over the nodes, for constant lambda.
pub fn oracle_error(table: &KernelTable, lambda0: f64) -> f64 {
    let g = table.grid();
    let eps = table.epsilon();
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for (i, j) in g.nodes() {
        let e = exact_constant_kernel(lambda0, eps, g.coord(i), g.coord(j));
        err = err.max((table.k_at(i, j) - e).abs());
        scale = scale.max(e.abs());
    }
    if scale == 0.0 { err } else { err / scale }
}

/// Largest `|K| / bound - 1` over the nodes; infinite if `K` is nonzero
/// where the bound vanishes.
pub fn bound_excess(table: &KernelTable, profile: &ReactionProfile) -> Result<f64> {
    let g = table.grid();
    let mut worst = f64::NEG_INFINITY;
    for (i, j) in g.nodes() {
        let b = kernel_bound(g.coord(i), g.coord(j), profile)?;
        let k = table.k_at(i, j).abs();
        let excess = if b > 0.0 { k / b - 1.0 } else if k == 0.0 { -1.0 } else { f64::INFINITY };
        worst = worst.max(excess);
    }
    Ok(worst)
}

/// Largest `sup |G_n| - sup(bound_n)` for `n = 1..=terms`; the table must
/// keep at least `terms + 1` series terms.
pub fn majorant_gaps(table: &KernelTable, profile: &ReactionProfile, terms: usize) -> Result<Vec<f64>> {
    let tri = CatalanTriangle::build(terms.max(1))?;
    let history = table.increment_history();
    (1..=terms.min(history.len().saturating_sub(1)))
        .map(|n| {
            let bound = series_bound_term(n, table.grid(), profile, &tri)?;
            let sup = bound.iter().fold(0.0f64, |m, v| m.max(*v));
            Ok(history[n] - sup)
        })
        .collect()
}

fn closure_table(grid: &TriangleGrid, n: i32, k: i32, lb: f64) -> LatticeField {
    LatticeField::from_fn(grid, |a, b| f_nk(a, b, FnkParams::new(n, k, lb)).unwrap_or(0.0))
}

fn rel_sup(a: &LatticeField, b: &LatticeField) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    d.sup_on_nodes() / b.sup_on_nodes()
}

/// Relative errors of `F_nk = H1[F_(n-1)k] + 4 H2[F_n(k-1) - F_n(k-2)]` at
/// `N = 32` and `N = 64` with nodal operators. The tables carry a
/// `log(alpha - beta)` factor, so the discrete identity holds to first order.
pub fn closure_errors(lambda_bar: f64, n: i32, k: i32) -> Result<(f64, f64)> {
    let at = |subdivisions| -> Result<f64> {
        let grid = TriangleGrid::new(subdivisions, 1.0)?;
        let ops = KernelOperators::new(&grid, Scheme::Nodal, SmoothWeight::Constant(lambda_bar))?;
        let mut inner = closure_table(&grid, n, k - 1, lambda_bar);
        inner.axpy(-1.0, &closure_table(&grid, n, k - 2, lambda_bar));
        let mut rhs = ops.apply_singular(&inner).scaled(4.0);
        rhs.axpy(1.0, &ops.apply_smooth(&closure_table(&grid, n - 1, k, lambda_bar)));
        Ok(rel_sup(&rhs, &closure_table(&grid, n, k, lambda_bar)))
    };
    Ok((at(32)?, at(64)?))
}

/// First-order refinement: small on the fine grid and halving (or already
/// at roundoff).
pub fn closure_ok((coarse, fine): (f64, f64)) -> bool {
    fine < 0.05 && (fine <= 1e-12 || coarse / fine > 1.8)
}

/// The kernel checks run by `verify`. `direct` and `inverse` are converged
/// solves for `profile`.
pub fn verify_suite(
    profile: &ReactionProfile,
    direct: &KernelTable,
    inverse: &KernelTable,
    log: &mut dyn FnMut(&str),
) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let grid = *direct.grid();

    let mut worst_origin = 0.0f64;
    let mut worst_diag = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..=grid.subdivisions() {
        let r = grid.coord(i);
        let want = -simpson(|s| profile.lambda_at(s), 0.0, r, 64) / (2.0 * profile.epsilon());
        worst_origin = worst_origin.max(direct.k_at(i, 0).abs());
        worst_diag = worst_diag.max((direct.k_at(i, i) - want).abs());
        scale = scale.max(want.abs());
    }
    let diag_rel = if scale > 0.0 { worst_diag / scale } else { worst_diag };
    out.push(Check::new(
        "boundary conditions",
        worst_origin == 0.0 && diag_rel <= ORACLE_TOL,
        format!("max |K(r,0)| = {worst_origin:.1e}, diagonal relative error {diag_rel:.2e}"),
    ));

    for (name, table) in [("residual (direct)", direct), ("residual (inverse)", inverse)] {
        let res = residual(table, profile)?;
        let limit = 5.0 * table.tol() * table.lattice().sup_on_nodes();
        out.push(Check::new(name, res <= limit, format!("{res:.3e} <= {limit:.3e}")));
    }

    match profile.as_constant() {
        Some(l0) => {
            let e = oracle_error(direct, l0);
            out.push(Check::new("closed-form oracle", e <= ORACLE_TOL, format!("sup relative error {e:.3e} <= {ORACLE_TOL:e}")));
        }
        None => out.push(Check::skip("closed-form oracle", "lambda is not constant")),
    }

    // The bound is attained by the constant-coefficient kernel, so a discrete
    // solution may exceed it by its own discretization error.
    let excess = bound_excess(direct, profile)?;
    out.push(Check::new(
        "bound domination",
        excess <= ORACLE_TOL,
        format!("max |K|/bound - 1 = {excess:.3e} <= {ORACLE_TOL:e}"),
    ));

    let n = grid.subdivisions();
    let mut worst = 0.0f64;
    for (_, f) in ROUNDTRIP_FUNCTIONS {
        let u: Vec<f64> = (0..=n).map(|i| f(grid.coord(i))).collect();
        worst = worst.max(transform_roundtrip(direct, inverse, &u)?);
    }
    out.push(Check::new("transform roundtrip", worst < ROUNDTRIP_TOL, format!("worst error {worst:.3e} < {ROUNDTRIP_TOL:e}")));

    log("solving nodal series for the majorant check");
    let opts = SolverOptions {
        tol: direct.tol(),
        max_iter: direct.iterations_used().max(MAJORANT_TERMS + 1) * 4,
        scheme: Scheme::Nodal,
        keep_terms: MAJORANT_TERMS + 1,
    };
    let nodal = solve_kernel(profile, &grid, Variant::Direct, &opts)?;
    let gaps = majorant_gaps(&nodal, profile, MAJORANT_TERMS)?;
    let worst_gap = gaps.iter().fold(f64::NEG_INFINITY, |m, g| m.max(*g));
    out.push(Check::new(
        "Catalan majorant",
        !gaps.is_empty() && worst_gap <= MAJORANT_SLACK,
        format!("max sup|G_n| - bound_n over n = 1..{} is {worst_gap:.3e}", gaps.len()),
    ));

    log("refining the F_nk closure identities");
    let lb = profile.lambda_bar().max(0.1);
    let mut closure_pass = true;
    let mut worst_fine = 0.0f64;
    for n in 0..=2 {
        for k in 0..=2 {
            if n == 0 && k == 0 {
                continue;
            }
            let errs = closure_errors(lb, n, k)?;
            closure_pass &= closure_ok(errs);
            worst_fine = worst_fine.max(errs.1);
        }
    }
    out.push(Check::new("F_nk closure (n, k <= 2)", closure_pass, format!("worst relative error at N = 64: {worst_fine:.3e}")));
    Ok(out)
}

pub const COLUMN_SUM_TERMS: usize = 100_000;
pub const COLUMN_SUM_COLUMNS: usize = 6;
pub const COLUMN_SUM_TOL: f64 = 5e-3;

/// Identities checked by `catalan` on a triangle with `tri.rows()` rows.
pub fn catalan_suite(tri: &CatalanTriangle) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let rows = tri.rows();
    let mut recurrence = true;
    let mut row_sums = true;
    let mut first_columns = true;
    for i in 2..=rows {
        first_columns &= tri.get(i, 1) == tri.get(i, 2);
        for j in 1..=i {
            recurrence &= tri.get(i, j) == tri.get(i - 1, j - 1) + tri.get(i, j + 1);
            let (lhs, rhs) = tri.row_sum_identity(i, j)?;
            row_sums &= lhs == rhs;
        }
    }
    out.push(Check::new("recurrence", recurrence, format!("C_ij = C_(i-1)(j-1) + C_i(j+1), rows 2..{rows}")));
    out.push(Check::new("row-sum identity", row_sums, format!("rows 2..{rows}")));
    out.push(Check::new("first two columns agree", first_columns, format!("C_i1 = C_i2, rows 2..{rows}")));

    let mut genfun = true;
    for j in 1..=30 {
        genfun &= genfun_at_quarter(j)? == DyadicRational::power_of_two(2 - j as i64);
    }
    out.push(Check::new("generating function at 1/4", genfun, "f_j(1/4) = 2^(2-j) exactly, j = 1..30"));

    let sums = ColumnSums::compute(COLUMN_SUM_COLUMNS, COLUMN_SUM_TERMS)?;
    let mut columns = true;
    let mut worst_gap = 0.0f64;
    for j in 1..=COLUMN_SUM_COLUMNS {
        let limit = 0.5f64.powi(j as i32);
        let col = sums.column(j);
        let last = col[COLUMN_SUM_TERMS - 1];
        columns &= last < limit && last >= limit - COLUMN_SUM_TOL && col.windows(2).all(|w| w[0] <= w[1]);
        worst_gap = worst_gap.max(limit - last);
    }
    out.push(Check::new(
        "column sums",
        columns,
        format!("monotone, 2^-j - sum at {COLUMN_SUM_TERMS} terms <= {worst_gap:.3e}, j = 1..{COLUMN_SUM_COLUMNS}"),
    ));
    Ok(out)
}
