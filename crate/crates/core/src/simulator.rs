//! Crank-Nicolson finite differences for `u_t = (eps/r)(r u_r)_r + lambda(r) u`
//! on `[0, R]` with boundary value `u(t, R) = U(t) = int_0^R K(R, rho) u(t, rho) drho`.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::kernel::KernelTable;
use crate::profile::ReactionProfile;

/// Nodes `r_i = i R / M`, `i = 0..=M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    m: usize,
    radius: f64,
}

impl RadialGrid {
    pub fn new(m: usize, radius: f64) -> Result<Self> {
        if m < 8 {
            return Err(Error::Domain(format!("radial grid needs M >= 8, got {m}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("radius must be positive, got {radius}")));
        }
        Ok(Self { m, radius })
    }

    pub fn subdivisions(&self) -> usize {
        self.m
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spacing(&self) -> f64 {
        self.radius / self.m as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        if i == self.m {
            self.radius
        } else {
            i as f64 * self.spacing()
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..=self.m).map(|i| self.coord(i)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..=self.m).map(|i| f(self.coord(i))).collect()
    }
}

fn same_radius(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > 1e-12 * a.max(b) {
        return Err(Error::GridMismatch(format!("radius {a} differs from {b}")));
    }
    Ok(())
}

/// Tridiagonal rows `0..M` of the spatial operator. Row `M - 1` couples to
/// the boundary value through `upper[M - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialOperator {
    grid: RadialGrid,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

/// Assembles the interior stencil and the regularized origin row
/// `4 eps (u_1 - u_0) / dr^2 + lambda(0) u_0`.
pub fn build_operator(grid: &RadialGrid, profile: &ReactionProfile) -> Result<RadialOperator> {
    same_radius(grid.radius(), profile.radius())?;
    let m = grid.subdivisions();
    let dr = grid.spacing();
    let eps = profile.epsilon();
    let a = eps / (dr * dr);
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    diag[0] = -4.0 * a + profile.lambda_at(0.0);
    upper[0] = 4.0 * a;
    for i in 1..m {
        let c = 1.0 / (2.0 * i as f64);
        lower[i] = a * (1.0 - c);
        diag[i] = -2.0 * a + profile.lambda_at(grid.coord(i));
        upper[i] = a * (1.0 + c);
    }
    Ok(RadialOperator { grid: *grid, lower, diag, upper })
}

impl RadialOperator {
    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// `(A u)_i` for `i < M`; `u` has `M + 1` entries.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let m = self.grid.subdivisions();
        assert_eq!(u.len(), m + 1);
        (0..m)
            .map(|i| {
                let left = if i > 0 { self.lower[i] * u[i - 1] } else { 0.0 };
                left + self.diag[i] * u[i] + self.upper[i] * u[i + 1]
            })
            .collect()
    }

    /// Eigenvalues of the operator with `u_M = 0`, ascending, by Sturm
    /// bisection on the symmetrized tridiagonal matrix.
    pub fn dirichlet_eigenvalues(&self, count: usize) -> Vec<f64> {
        let m = self.grid.subdivisions();
        let off2: Vec<f64> = (1..m).map(|i| self.upper[i - 1] * self.lower[i]).collect();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let r = (if i > 0 { off2[i - 1].sqrt() } else { 0.0 }) + (if i + 1 < m { off2[i].sqrt() } else { 0.0 });
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        // Number of eigenvalues below x.
        let below = |x: f64| {
            let mut count = 0;
            let mut d = 1.0;
            for i in 0..m {
                d = self.diag[i] - x - if i > 0 { off2[i - 1] / d } else { 0.0 };
                if d == 0.0 {
                    d = -f64::EPSILON * (self.diag[i].abs() + 1.0);
                }
                if d < 0.0 {
                    count += 1;
                }
            }
            count
        };
        let count = count.min(m);
        (0..count)
            .map(|k| {
                // k-th largest is the (m - 1 - k)-th smallest.
                let target = m - 1 - k;
                let (mut a, mut b) = (lo - 1.0, hi + 1.0);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if below(mid) > target {
                        b = mid;
                    } else {
                        a = mid;
                    }
                    if b - a <= 1e-13 * (a.abs() + b.abs()).max(1.0) {
                        break;
                    }
                }
                0.5 * (a + b)
            })
            .rev()
            .collect()
    }

    /// Rightmost Dirichlet eigenvalue: the growth (positive) or decay rate
    /// of the slowest open-loop mode.
    pub fn dominant_eigenvalue(&self) -> f64 {
        self.dirichlet_eigenvalues(1)[0]
    }
}

/// Trapezoid weights `w_j = dr K(R, r_j)` (halved at the ends); `U = sum w_j u_j`.
///
/// The kernel's last row is interpolated when its grid differs from `grid`.
pub fn feedback_gain_vector(kernel: &KernelTable, grid: &RadialGrid) -> Result<Vec<f64>> {
    same_radius(kernel.grid().radius(), grid.radius())?;
    let m = grid.subdivisions();
    let row: Vec<f64> = if kernel.grid().subdivisions() == m {
        kernel.boundary_row()
    } else {
        (0..=m).map(|j| kernel.boundary_at(grid.coord(j))).collect()
    };
    let dr = grid.spacing();
    Ok(row
        .iter()
        .enumerate()
        .map(|(j, k)| if j == 0 || j == m { 0.5 * dr * k } else { dr * k })
        .collect())
}

/// `(plain, disk) = (sqrt(int u^2 dr), sqrt(int u^2 r dr))` by trapezoid.
pub fn l2_norms(u: &[f64], grid: &RadialGrid) -> (f64, f64) {
    let m = grid.subdivisions();
    let dr = grid.spacing();
    let (mut plain, mut disk) = (0.0, 0.0);
    for (i, v) in u.iter().enumerate() {
        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
        plain += w * v * v;
        disk += w * v * v * grid.coord(i);
    }
    ((plain * dr).sqrt(), (disk * dr).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSample {
    pub t: f64,
    pub plain: f64,
    pub disk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: Vec<f64>,
    pub norm_history: Vec<NormSample>,
    pub boundary_history: Vec<f64>,
    pub snapshots: Vec<(f64, Vec<f64>)>,
}

impl SimState {
    /// State at `t = 0` with its first norm and boundary samples recorded.
    pub fn initial(u: Vec<f64>, grid: &RadialGrid, gain: &[f64]) -> Self {
        let (plain, disk) = l2_norms(&u, grid);
        let control = gain.iter().zip(&u).map(|(w, v)| w * v).sum();
        Self {
            t: 0.0,
            u,
            norm_history: vec![NormSample { t: 0.0, plain, disk }],
            boundary_history: vec![control],
            snapshots: Vec::new(),
        }
    }
}

/// Source term and boundary data for manufactured solutions:
/// `u_t = A u + source(t, r)`, `u_M - sum w_j u_j = boundary(t)`.
pub struct Forcing<'a> {
    pub source: &'a dyn Fn(f64, f64) -> f64,
    pub boundary: &'a dyn Fn(f64) -> f64,
}

/// One Crank-Nicolson step with implicit boundary feedback. The system is
/// tridiagonal plus the dense boundary row; it is reduced to two
/// tridiagonal solves and a scalar equation for `u_M`.
pub struct CrankNicolson<'a> {
    op: &'a RadialOperator,
    gain: &'a [f64],
    dt: f64,
    // (I - dt/2 A) on rows and columns 0..M; the coupling to u_M enters
    // through q, the response to a unit boundary value.
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    q: Vec<f64>,
    denom: f64,
}

impl<'a> CrankNicolson<'a> {
    pub fn new(op: &'a RadialOperator, gain: &'a [f64], dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("dt must be positive, got {dt}")));
        }
        let m = op.grid.subdivisions();
        if gain.len() != m + 1 {
            return Err(Error::GridMismatch(format!("gain has {} entries for {} nodes", gain.len(), m + 1)));
        }
        let h = 0.5 * dt;
        let lower: Vec<f64> = op.lower.iter().map(|a| -h * a).collect();
        let diag: Vec<f64> = op.diag.iter().map(|a| 1.0 - h * a).collect();
        let upper: Vec<f64> = op.upper.iter().map(|a| -h * a).collect();
        let coupling = upper[m - 1];
        let mut rhs = vec![0.0; m];
        rhs[m - 1] = -coupling;
        let q = thomas(&lower, &diag, &upper, &rhs)?;
        let denom = 1.0 - gain[m] - gain[..m].iter().zip(&q).map(|(w, v)| w * v).sum::<f64>();
        if denom.abs() < 1e-14 || !denom.is_finite() {
            return Err(Error::SingularSystem(format!("boundary elimination pivot {denom:e}")));
        }
        Ok(Self { op, gain, dt, lower, diag, upper, q, denom })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `u` (with `M + 1` entries) from `t` to `t + dt`.
    pub fn advance(&self, u: &[f64], t: f64, forcing: Option<&Forcing<'_>>) -> Result<Vec<f64>> {
        let m = self.op.grid.subdivisions();
        let h = 0.5 * self.dt;
        let au = self.op.apply(u);
        let mut rhs: Vec<f64> = (0..m).map(|i| u[i] + h * au[i]).collect();
        let mut b = 0.0;
        if let Some(f) = forcing {
            for (i, v) in rhs.iter_mut().enumerate() {
                let r = self.op.grid.coord(i);
                *v += h * ((f.source)(t, r) + (f.source)(t + self.dt, r));
            }
            b = (f.boundary)(t + self.dt);
        }
        let p = thomas(&self.lower, &self.diag, &self.upper, &rhs)?;
        let um = (b + self.gain[..m].iter().zip(&p).map(|(w, v)| w * v).sum::<f64>()) / self.denom;
        let mut next: Vec<f64> = p.iter().zip(&self.q).map(|(pi, qi)| pi + qi * um).collect();
        next.push(um);
        Ok(next)
    }
}

/// Single step from `state`, returning the advanced state with one more
/// history sample.
pub fn step(state: &SimState, dt: f64, op: &RadialOperator, gain: &[f64]) -> Result<SimState> {
    let cn = CrankNicolson::new(op, gain, dt)?;
    let mut next = state.clone();
    advance_state(&cn, &mut next, op.grid(), None)?;
    Ok(next)
}

fn advance_state(cn: &CrankNicolson<'_>, state: &mut SimState, grid: &RadialGrid, forcing: Option<&Forcing<'_>>) -> Result<()> {
    let u = cn.advance(&state.u, state.t, forcing)?;
    let t = state.t + cn.dt();
    if let Some(k) = u.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { time: t, detail: format!("u[{k}] = {}", u[k]) });
    }
    let (plain, disk) = l2_norms(&u, grid);
    state.t = t;
    state.norm_history.push(NormSample { t, plain, disk });
    state.boundary_history.push(u[u.len() - 1]);
    state.u = u;
    Ok(())
}

/// A full run. `gain` all zero is the open loop with `u(t, R) = 0`.
pub struct Simulation<'a> {
    pub operator: RadialOperator,
    pub gain: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
    /// Keep `u` every `snapshot_stride` steps (0 keeps none).
    pub snapshot_stride: usize,
    pub forcing: Option<Forcing<'a>>,
}

impl<'a> Simulation<'a> {
    pub fn new(profile: &ReactionProfile, grid: &RadialGrid, kernel: Option<&KernelTable>, horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
        }
        let operator = build_operator(grid, profile)?;
        let gain = match kernel {
            Some(k) => feedback_gain_vector(k, grid)?,
            None => vec![0.0; grid.subdivisions() + 1],
        };
        Ok(Self { operator, gain, horizon, dt, snapshot_stride: 0, forcing: None })
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }

    pub fn run(&self, u0: Vec<f64>) -> Result<SimState> {
        let grid = *self.operator.grid();
        if u0.len() != grid.subdivisions() + 1 {
            return Err(Error::GridMismatch(format!("initial data has {} values for {} nodes", u0.len(), grid.subdivisions() + 1)));
        }
        if let Some(k) = u0.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { time: 0.0, detail: format!("u0[{k}] = {}", u0[k]) });
        }
        let cn = CrankNicolson::new(&self.operator, &self.gain, self.dt)?;
        let mut state = SimState::initial(u0, &grid, &self.gain);
        if self.snapshot_stride > 0 {
            state.snapshots.push((0.0, state.u.clone()));
        }
        for n in 1..=self.steps() {
            advance_state(&cn, &mut state, &grid, self.forcing.as_ref())?;
            if self.snapshot_stride > 0 && n % self.snapshot_stride == 0 {
                state.snapshots.push((state.t, state.u.clone()));
            }
        }
        Ok(state)
    }
}

/// Runs the plant from `u0` over `horizon`; `kernel = None` is the open loop.
pub fn simulate(
    profile: &ReactionProfile,
    grid: &RadialGrid,
    kernel: Option<&KernelTable>,
    u0: impl Fn(f64) -> f64,
    horizon: f64,
    dt: f64,
) -> Result<SimState> {
    Simulation::new(profile, grid, kernel, horizon, dt)?.run(grid.sample(u0))
}

/// Which recorded norm a fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormKind {
    Plain,
    #[default]
    Disk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub c2: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares line through `(t, log ||u||)` on `window` (default: the
/// last 80% of the recorded horizon); `c2` is minus the slope.
pub fn fit_decay(history: &[NormSample], window: Option<(f64, f64)>, norm: NormKind) -> Result<DecayFit> {
    let (first, last) = match (history.first(), history.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(Error::Fit("empty norm history".into())),
    };
    let window = window.unwrap_or((first + 0.2 * (last - first), last));
    match fit_window(history, window, norm) {
        Err(Error::Fit(msg)) if msg.starts_with("nonpositive") => {
            // Shrink once to the part before the norm reached zero.
            let cut = history
                .iter()
                .find(|s| s.t >= window.0 && value(s, norm) <= 0.0)
                .map(|s| s.t)
                .unwrap_or(window.1);
            let samples: Vec<&NormSample> = history.iter().filter(|s| s.t >= window.0 && s.t < cut).collect();
            let end = samples.last().map(|s| s.t).unwrap_or(window.0);
            fit_window(history, (window.0, end), norm)
        }
        other => other,
    }
}

fn value(s: &NormSample, norm: NormKind) -> f64 {
    match norm {
        NormKind::Plain => s.plain,
        NormKind::Disk => s.disk,
    }
}

fn fit_window(history: &[NormSample], window: (f64, f64), norm: NormKind) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = history
        .iter()
        .filter(|s| s.t >= window.0 && s.t <= window.1)
        .map(|s| (s.t, value(s, norm)))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::Fit(format!("{} samples in window, need {MIN_FIT_SAMPLES}", pts.len())));
    }
    if let Some(&(t, _)) = pts.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::Fit(format!("nonpositive norm at t = {t}")));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(t, v) in &pts {
        let (dx, dy) = (t - mt, v.ln() - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Fit("window has no time extent".into()));
    }
    let slope = sxy / sxx;
    let ss_res = syy - slope * sxy;
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(DecayFit { c2: -slope, r_squared, window })
}

/// `t,norm_plain,norm_disk,U` per recorded step, 17 significant digits.
pub fn write_trajectory_csv<W: Write>(state: &SimState, mut out: W) -> io::Result<()> {
    writeln!(out, "t,norm_plain,norm_disk,U")?;
    for (s, u) in state.norm_history.iter().zip(&state.boundary_history) {
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", s.t, s.plain, s.disk, u)?;
    }
    Ok(())
}

/// `t,r,u` rows for every stored snapshot.
pub fn write_snapshot_csv<W: Write>(state: &SimState, grid: &RadialGrid, mut out: W) -> io::Result<()> {
    writeln!(out, "t,r,u")?;
    for (t, u) in &state.snapshots {
        for (i, v) in u.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", t, grid.coord(i), v)?;
        }
    }
    Ok(())
}

/// Thomas algorithm; `lower[0]` and `upper[n-1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 {
        return Err(Error::SingularSystem("zero pivot in row 0".into()));
    }
    c[0] = upper[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - lower[i] * c[i - 1];
        if piv == 0.0 || !piv.is_finite() {
            return Err(Error::SingularSystem(format!("pivot {piv} in row {i}")));
        }
        c[i] = if i + 1 < n { upper[i] / piv } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}
