use backstepping_core::combinatorics::CatalanTriangle;
use backstepping_core::kernel::{
    exact_constant_kernel, kernel_bound, residual, series_bound_term, solve_kernel, transform_roundtrip, KernelTable,
    Scheme, SolverOptions, TriangleGrid, Variant,
};
use backstepping_core::{Lambda, ReactionProfile};

/// `J1(z)/z` by its alternating series; fine for the small arguments used here.
fn j1_ratio(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 0.5;
    let mut sum = term;
    for m in 0..200 {
        term *= -q / ((m + 1) as f64 * (m + 2) as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

fn solve(profile: &ReactionProfile, n: usize, variant: Variant, scheme: Scheme) -> KernelTable {
    let grid = TriangleGrid::new(n, profile.radius()).unwrap();
    let opts = SolverOptions { scheme, ..Default::default() };
    solve_kernel(profile, &grid, variant, &opts).unwrap()
}

fn sup_rel_error(t: &KernelTable, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let g = t.grid();
    let mut err = 0.0f64;
    let mut scale = 0.0f64;
    for (i, j) in g.nodes() {
        let e = exact(g.coord(i), g.coord(j));
        err = err.max((t.k_at(i, j) - e).abs());
        scale = scale.max(e.abs());
    }
    err / scale
}

#[test]
fn direct_kernel_converges_to_closed_form() {
    let p = ReactionProfile::constant(10.0, 1.0, 1.0).unwrap();
    let mut errs = Vec::new();
    for n in [25, 50, 100] {
        let t = solve(&p, n, Variant::Direct, Scheme::Factored);
        errs.push(sup_rel_error(&t, |r, rho| exact_constant_kernel(10.0, 1.0, r, rho)));
    }
    let order = (errs[1] / errs[2]).log2();
    eprintln!("errors {errs:?} order {order}");
    assert!(errs[2] < 4e-3);
    assert!(order > 1.7);
}

#[test]
fn inverse_kernel_matches_bessel_j_form() {
    let (lam, eps) = (10.0, 1.0);
    let p = ReactionProfile::constant(lam, eps, 1.0).unwrap();
    let t = solve(&p, 100, Variant::Inverse, Scheme::Factored);
    let err = sup_rel_error(&t, |r, rho| {
        let z = (lam / eps * (r * r - rho * rho)).sqrt();
        -(lam / eps) * rho * j1_ratio(z)
    });
    eprintln!("inverse error {err}");
    assert!(err < 2e-3);
}

#[test]
fn residual_is_small_for_converged_solves() {
    let varying = ReactionProfile::new(1.0, 1.0, Lambda::Polynomial(vec![10.0, 0.0, 10.0])).unwrap();
    let constant = ReactionProfile::constant(10.0, 1.0, 1.0).unwrap();
    for p in [&constant, &varying] {
        for variant in [Variant::Direct, Variant::Inverse] {
            let t = solve(p, 60, variant, Scheme::Factored);
            let r = residual(&t, p).unwrap();
            let sup = t.values_g().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(r <= 5.0 * t.tol() * sup, "{variant:?}: {r} vs {}", 5.0 * t.tol() * sup);
        }
    }
}

#[test]
fn truncated_solve_has_larger_residual() {
    let p = ReactionProfile::constant(10.0, 1.0, 1.0).unwrap();
    let grid = TriangleGrid::new(40, 1.0).unwrap();
    let full = solve_kernel(&p, &grid, Variant::Direct, &SolverOptions { keep_terms: 2, ..Default::default() }).unwrap();
    let one = SolverOptions { max_iter: 1, ..Default::default() };
    let partial = match solve_kernel(&p, &grid, Variant::Direct, &one) {
        Err(backstepping_core::Error::MaxIterExceeded { partial, .. }) => partial,
        other => panic!("{other:?}"),
    };
    let r1 = residual(&partial, &p).unwrap();
    let g1 = full.increment_history()[1];
    assert!((r1 - g1).abs() <= 1e-12 * g1, "{r1} vs {g1}");
    assert!(r1 > residual(&full, &p).unwrap());
}

#[test]
fn kernel_stays_below_bound_for_varying_lambda() {
    let p = ReactionProfile::new(1.0, 1.0, Lambda::Polynomial(vec![10.0, 0.0, 10.0])).unwrap();
    let t = solve(&p, 80, Variant::Direct, Scheme::Factored);
    let g = t.grid();
    for (i, j) in g.nodes() {
        let (r, rho) = (g.coord(i), g.coord(j));
        assert!(t.k_at(i, j).abs() <= kernel_bound(r, rho, &p).unwrap() * (1.0 + 1e-12) + 1e-12);
    }
}

#[test]
fn increments_respect_catalan_majorant() {
    let p = ReactionProfile::constant(10.0, 1.0, 1.0).unwrap();
    let grid = TriangleGrid::new(40, 1.0).unwrap();
    let opts = SolverOptions { scheme: Scheme::Nodal, keep_terms: 9, ..Default::default() };
    let t = solve_kernel(&p, &grid, Variant::Direct, &opts).unwrap();
    let tri = CatalanTriangle::build(8).unwrap();
    for n in 1..=8 {
        let bound = series_bound_term(n, &grid, &p, &tri).unwrap();
        let sup_b = bound.iter().fold(0.0f64, |m, v| m.max(*v));
        let worst = t.terms()[n].iter().zip(&bound).fold(f64::MIN, |m, (g, b)| m.max(g.abs() - b));
        eprintln!("n={n} sup|G|={:.6e} sup bound={sup_b:.6e} pointwise excess {worst:.3e}", t.increment_history()[n]);
        assert!(t.increment_history()[n] <= sup_b + 1e-8);
    }
}

#[test]
fn roundtrip_recovers_test_functions() {
    let p = ReactionProfile::constant(10.0, 1.0, 1.0).unwrap();
    let k = solve(&p, 80, Variant::Direct, Scheme::Factored);
    let l = solve(&p, 80, Variant::Inverse, Scheme::Factored);
    let g = *k.grid();
    let fs: [fn(f64) -> f64; 3] = [|r| 1.0 - r * r, |r| (3.0 * r).cos(), |r| r * r * r - 0.5 * r + 0.2];
    for f in fs {
        let u: Vec<f64> = (0..=g.subdivisions()).map(|i| f(g.coord(i))).collect();
        let e = transform_roundtrip(&k, &l, &u).unwrap();
        eprintln!("roundtrip {e}");
        assert!(e < 3e-3);
    }
    let zero = vec![0.0; g.subdivisions() + 1];
    assert_eq!(transform_roundtrip(&k, &l, &zero).unwrap(), 0.0);
    assert!(transform_roundtrip(&k, &l, &zero[1..]).is_err());
}

#[test]
fn diagonal_boundary_condition_for_varying_lambda() {
    let p = ReactionProfile::new(0.5, 1.0, Lambda::Polynomial(vec![10.0, 0.0, 10.0])).unwrap();
    let t = solve(&p, 50, Variant::Direct, Scheme::Factored);
    let g = t.grid();
    let d = g.spacing();
    for i in 0..=g.subdivisions() {
        let r = g.coord(i);
        let exact = -(10.0 * r + 10.0 * r * r * r / 3.0) / (2.0 * 0.5);
        assert!((t.k_at(i, i) - exact).abs() < 10.0 * d * d * 20.0);
        assert_eq!(t.k_at(i, 0), 0.0);
    }
}

mod closure {
    //! The tables F_nk with k >= 1 behave like (alpha - beta) log(alpha - beta)
    //! at the diagonal, so bilinear interpolation limits the operators to
    //! first order there. The checks assert an O(D) error and its halving
    //! under refinement.
    use backstepping_core::kernel::{KernelOperators, LatticeField, Scheme, SmoothWeight, TriangleGrid};
    use backstepping_core::special::{f_nk, FnkParams};

    fn table(grid: &TriangleGrid, n: i32, k: i32, lb: f64) -> LatticeField {
        LatticeField::from_fn(grid, |a, b| f_nk(a, b, FnkParams::new(n, k, lb)).unwrap())
    }

    fn rel_sup(a: &LatticeField, b: &LatticeField) -> f64 {
        let mut d = a.clone();
        d.axpy(-1.0, b);
        d.sup_on_nodes() / b.sup_on_nodes()
    }

    fn ops(n: usize, lb: f64) -> (TriangleGrid, KernelOperators) {
        let grid = TriangleGrid::new(n, 1.0).unwrap();
        let ops = KernelOperators::new(&grid, Scheme::Nodal, SmoothWeight::Constant(lb)).unwrap();
        (grid, ops)
    }

    /// Relative errors at N = 32 and N = 64 of `build(grid, ops) ~ target`.
    fn refine(
        lb: f64,
        build: impl Fn(&TriangleGrid, &KernelOperators) -> LatticeField,
        target: impl Fn(&TriangleGrid) -> LatticeField,
    ) -> (f64, f64) {
        let e = |n| {
            let (grid, ops) = ops(n, lb);
            rel_sup(&build(&grid, &ops), &target(&grid))
        };
        (e(32), e(64))
    }

    fn assert_first_order((coarse, fine): (f64, f64), what: &str) {
        eprintln!("{what}: relative errors {coarse:.3e} -> {fine:.3e}");
        assert!(fine < 0.05, "{what}: {fine}");
        if fine > 1e-12 {
            assert!(coarse / fine > 1.8, "{what}: ratio {}", coarse / fine);
        }
    }

    #[test]
    fn singular_operator_on_f00() {
        let lb = 0.25;
        let (grid, ops) = ops(64, lb);
        let h2 = ops.apply_singular(&table(&grid, 0, 0, lb));
        // (alpha, beta) = (1, 0.5) is lattice point (64, 32); F00 is linear,
        // so the bilinear cell integrals are exact.
        let want = 0.25 * 0.5 * 3f64.ln() / 4.0;
        assert!((want - 0.034_328).abs() < 1e-5);
        assert!((h2.get(64, 32) - want).abs() < 1e-13);
        assert!(rel_sup(&h2, &table(&grid, 0, 1, lb).scaled(0.25)) < 1e-13);
    }

    #[test]
    fn singular_operator_on_f01() {
        let lb = 0.5;
        let errs = refine(
            lb,
            |g, o| o.apply_singular(&table(g, 0, 1, lb)),
            |g| {
                let mut w = table(g, 0, 1, lb);
                w.axpy(1.0, &table(g, 0, 2, lb));
                w.scaled(0.25)
            },
        );
        assert_first_order(errs, "H2[F01]");
    }

    #[test]
    fn lemma_identity_for_small_indices() {
        let lb = 0.7;
        for n in 0..=2 {
            for k in 0..=2 {
                if n == 0 && k == 0 {
                    continue;
                }
                let errs = refine(
                    lb,
                    |g, o| {
                        let mut inner = table(g, n, k - 1, lb);
                        inner.axpy(-1.0, &table(g, n, k - 2, lb));
                        let mut rhs = o.apply_singular(&inner).scaled(4.0);
                        rhs.axpy(1.0, &o.apply_smooth(&table(g, n - 1, k, lb)));
                        rhs
                    },
                    |g| table(g, n, k, lb),
                );
                assert_first_order(errs, &format!("F_{n}{k}"));
            }
        }
    }

    #[test]
    fn summed_lemma_form() {
        // sum_{i<=k} F_ni = H1[sum_{i<=k} F_(n-1)i] + 4 H2[F_n(k-1)]
        let lb = 0.7;
        for n in 1..=2 {
            for k in 1..=2 {
                let errs = refine(
                    lb,
                    |g, o| {
                        let mut prev = LatticeField::zeros(g);
                        for i in 1..=k {
                            prev.axpy(1.0, &table(g, n - 1, i, lb));
                        }
                        let mut rhs = o.apply_smooth(&prev);
                        rhs.axpy(4.0, &o.apply_singular(&table(g, n, k - 1, lb)));
                        rhs
                    },
                    |g| {
                        let mut lhs = LatticeField::zeros(g);
                        for i in 1..=k {
                            lhs.axpy(1.0, &table(g, n, i, lb));
                        }
                        lhs
                    },
                );
                assert_first_order(errs, &format!("sum F_{n}i, i <= {k}"));
            }
        }
    }
}
