//! Experiment driver for radial backstepping: kernel design, verification,
//! closed-loop simulation and the Catalan-number checks.

pub mod checks;
pub mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use backstepping_core::combinatorics::CatalanTriangle;
use backstepping_core::kernel::{
    residual, solve_kernel, write_kernel_csv, KernelSidecar, KernelTable, SolverOptions, TriangleGrid, Variant,
};
use backstepping_core::simulator::{fit_decay, write_snapshot_csv, write_trajectory_csv, NormKind, RadialGrid, SimState, Simulation};
use backstepping_core::special::{bessel_i1, j0_first_zero};
use backstepping_core::ReactionProfile;
use clap::{Parser, Subcommand};

use crate::checks::Check;
use crate::config::{parse_config, ConfigError, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "backstep", version, about = "Backstepping kernels and closed-loop simulation on a disk")]
#[command(after_help = config::defaults_help())]
pub struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for the kernel solver (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory, overriding `outputs.directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the direct and inverse kernels and export them.
    Kernel {
        /// Series tolerance, overriding `solver.tol`.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run the kernel check suite and print a PASS/FAIL table.
    Verify {
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Simulate the open and closed loop and export trajectories.
    Simulate {
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Print Catalan's triangle and check its identities.
    Catalan {
        #[arg(long, default_value_t = 10)]
        rows: usize,
    },
    /// Print I1 on a uniform grid as CSV.
    Bessel {
        #[arg(long, default_value_t = 10.0)]
        xmax: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_QUADRATURE: i32 = 4;
pub const EXIT_SIMULATION: i32 = 5;
pub const EXIT_IO: i32 = 6;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Usage(String),
    Core(backstepping_core::Error),
    Io(PathBuf, io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use backstepping_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Core(E::MaxIterExceeded { .. }) => EXIT_NOT_CONVERGED,
            CliError::Core(E::Quadrature(_)) => EXIT_QUADRATURE,
            CliError::Core(E::SingularSystem(_) | E::NonFinite { .. } | E::Fit(_)) => EXIT_SIMULATION,
            CliError::Core(E::Domain(_) | E::GridMismatch(_)) => EXIT_CONFIG,
            CliError::Io(..) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<backstepping_core::Error> for CliError {
    fn from(e: backstepping_core::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn log(msg: &str) {
    eprintln!("[backstep] {msg}");
}

/// Parses the arguments, runs the command and returns the exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<i32> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // Only the first pool request in a process takes effect.
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log("thread pool already initialised; --threads ignored");
        }
    }
    match &cli.command {
        Command::Kernel { tol } => {
            let cfg = load(cli, *tol)?;
            kernel_command(&cfg)
        }
        Command::Verify { tol } => {
            let cfg = load(cli, *tol)?;
            verify_command(&cfg)
        }
        Command::Simulate { tol } => {
            let cfg = load(cli, *tol)?;
            simulate_command(&cfg)
        }
        Command::Catalan { rows } => catalan_command(*rows, &cli.out.clone().unwrap_or_else(|| PathBuf::from(config::DEFAULT_OUTPUT_DIR))),
        Command::Bessel { xmax, points } => bessel_command(*xmax, *points),
    }
}

fn load(cli: &Cli, tol: Option<f64>) -> CliResult<ExperimentConfig> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Usage("this command needs --config <path>".into()))?;
    let mut cfg = parse_config(path).map_err(CliError::Config)?;
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--tol must be positive, got {t}")));
        }
        cfg.tol = t;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn solver_options(cfg: &ExperimentConfig) -> SolverOptions {
    SolverOptions { tol: cfg.tol, max_iter: cfg.max_iter, scheme: cfg.scheme, keep_terms: 0 }
}

fn solve(cfg: &ExperimentConfig, profile: &ReactionProfile, variant: Variant) -> CliResult<KernelTable> {
    let grid = TriangleGrid::new(cfg.n_kernel, cfg.radius)?;
    log(&format!("solving {variant:?} kernel on N = {}", cfg.n_kernel));
    Ok(solve_kernel(profile, &grid, variant, &solver_options(cfg))?)
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|e| CliError::Io(path, e))
}

fn write_with(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> CliResult<()> {
    let mut w = create(dir, name)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::Io(dir.join(name), e))?;
    log(&format!("wrote {}", dir.join(name).display()));
    Ok(())
}

fn kernel_command(cfg: &ExperimentConfig) -> CliResult<i32> {
    let profile = cfg.profile()?;
    for (variant, stem) in [(Variant::Direct, "kernel_direct"), (Variant::Inverse, "kernel_inverse")] {
        let table = solve(cfg, &profile, variant)?;
        let res = residual(&table, &profile)?;
        println!("{stem}: iterations {}, residual {res:.3e}", table.iterations_used());
        write_with(&cfg.output_dir, &format!("{stem}.csv"), |w| write_kernel_csv(&table, w))?;
        let sidecar = KernelSidecar::new(&table, res);
        write_with(&cfg.output_dir, &format!("{stem}.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &sidecar).map_err(io::Error::other)?;
            writeln!(w)
        })?;
    }
    Ok(EXIT_OK)
}

fn print_checks(checks: &[Check]) -> i32 {
    for c in checks {
        println!("{c}");
    }
    if checks.iter().any(Check::failed) { EXIT_CHECK_FAILED } else { EXIT_OK }
}

fn verify_command(cfg: &ExperimentConfig) -> CliResult<i32> {
    let profile = cfg.profile()?;
    let direct = solve(cfg, &profile, Variant::Direct)?;
    let inverse = solve(cfg, &profile, Variant::Inverse)?;
    let checks = checks::verify_suite(&profile, &direct, &inverse, &mut |m| log(m))?;
    Ok(print_checks(&checks))
}

fn simulate_command(cfg: &ExperimentConfig) -> CliResult<i32> {
    let profile = cfg.profile()?;
    let kernel = solve(cfg, &profile, Variant::Direct)?;
    let grid = RadialGrid::new(cfg.m_sim, cfg.radius)?;
    let u0 = grid.sample(cfg.initial_condition());
    let reference = cfg.epsilon * j0_first_zero().powi(2) / (cfg.radius * cfg.radius);
    for (name, k) in [("open", None), ("closed", Some(&kernel))] {
        let mut sim = Simulation::new(&profile, &grid, k, cfg.horizon, cfg.dt)?;
        sim.snapshot_stride = cfg.snapshot_stride;
        if name == "open" {
            println!("open loop: dominant eigenvalue of the discrete operator {:.6}", sim.operator.dominant_eigenvalue());
        }
        log(&format!("simulating {name} loop, {} steps", sim.steps()));
        let state = sim.run(u0.clone())?;
        write_with(&cfg.output_dir, &format!("trajectory_{name}.csv"), |w| write_trajectory_csv(&state, w))?;
        if cfg.snapshot_stride > 0 {
            write_with(&cfg.output_dir, &format!("snapshots_{name}.csv"), |w| write_snapshot_csv(&state, &grid, w))?;
        }
        report_rate(name, &state, reference);
    }
    Ok(EXIT_OK)
}

fn report_rate(name: &str, state: &SimState, reference: f64) {
    let first = state.norm_history[0].disk;
    let last = state.norm_history.last().map_or(first, |s| s.disk);
    let ratio = if first > 0.0 { last / first } else { f64::NAN };
    match fit_decay(&state.norm_history, None, NormKind::Disk) {
        Ok(fit) => println!(
            "{name} loop: norm ratio {ratio:.4e}, fitted c2 {:.6} (R^2 {:.6}), target-system rate {reference:.6}",
            fit.c2, fit.r_squared
        ),
        Err(e) => println!("{name} loop: norm ratio {ratio:.4e}, no decay fit ({e})"),
    }
}

fn catalan_command(rows: usize, out: &Path) -> CliResult<i32> {
    if rows == 0 {
        return Err(CliError::Usage("--rows must be at least 1".into()));
    }
    let tri = CatalanTriangle::build(rows)?;
    print!("{}", tri.to_aligned_string());
    write_with(out, "catalan.csv", |w| w.write_all(tri.to_csv().as_bytes()))?;
    let checks = checks::catalan_suite(&tri)?;
    // The triangle owns stdout so it can be compared row by row.
    for c in &checks {
        eprintln!("{c}");
    }
    Ok(if checks.iter().any(Check::failed) { EXIT_CHECK_FAILED } else { EXIT_OK })
}

fn bessel_command(xmax: f64, points: usize) -> CliResult<i32> {
    if !(xmax > 0.0 && xmax.is_finite()) || points < 2 {
        return Err(CliError::Usage("bessel needs --xmax > 0 and --points >= 2".into()));
    }
    let stdout = io::stdout();
    let mut w = stdout.lock();
    let io_err = |e| CliError::Io(PathBuf::from("<stdout>"), e);
    writeln!(w, "x,I1").map_err(io_err)?;
    for i in 0..points {
        let x = xmax * i as f64 / (points - 1) as f64;
        writeln!(w, "{x:.16e},{:.16e}", bessel_i1(x)).map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_distinct_codes() {
        use backstepping_core::Error as E;
        let codes = [
            CliError::Usage(String::new()).exit_code(),
            CliError::Core(E::Quadrature(String::new())).exit_code(),
            CliError::Core(E::SingularSystem(String::new())).exit_code(),
            CliError::Io(PathBuf::new(), io::Error::other("x")).exit_code(),
        ];
        assert_eq!(codes, [EXIT_CONFIG, EXIT_QUADRATURE, EXIT_SIMULATION, EXIT_IO]);
    }

    #[test]
    fn help_lists_defaults() {
        let help = <Cli as clap::CommandFactory>::command().render_long_help().to_string();
        assert!(help.contains("solver.max_iter"));
        assert!(help.contains("Exit codes"));
    }

    #[test]
    fn commands_needing_config_reject_its_absence() {
        assert_eq!(run_from_args(["backstep", "kernel"]), EXIT_CONFIG);
        assert_eq!(run_from_args(["backstep", "bogus"]), EXIT_CONFIG);
    }
}
