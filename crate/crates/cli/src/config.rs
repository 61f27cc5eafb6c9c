//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "epsilon": 1.0,
//!   "R": 1.0,
//!   "lambda": { "kind": "polynomial", "parameters": [10, 0, 10] },
//!   "grid": { "N_kernel": 200, "M_sim": 200 },
//!   "solver": { "tol": 1e-10, "max_iter": 500, "scheme": "factored" },
//!   "sim": { "dt": 0.001, "horizon": 2.0, "u0": { "kind": "polynomial", "parameters": [1, 0, -1] } },
//!   "outputs": { "directory": "out", "snapshot_stride": 0 }
//! }
//! ```
//!
//! Only `epsilon`, `R` and `lambda` are required.

use std::fmt;
use std::path::{Path, PathBuf};

use backstepping_core::kernel::{Scheme, DEFAULT_MAX_ITER, DEFAULT_TOL};
use backstepping_core::special::{bessel_j0, j0_first_zero};
use backstepping_core::{Lambda, ReactionProfile};
use serde_json::{Map, Value};

pub const DEFAULT_N_KERNEL: usize = 200;
pub const DEFAULT_M_SIM: usize = 200;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 2.0;
pub const DEFAULT_OUTPUT_DIR: &str = "out";

/// Printed under `--help`.
pub fn defaults_help() -> String {
    format!(
        "Config defaults:\n  grid.N_kernel = {DEFAULT_N_KERNEL}\n  grid.M_sim = {DEFAULT_M_SIM}\n  \
         solver.tol = {DEFAULT_TOL:e}\n  solver.max_iter = {DEFAULT_MAX_ITER}\n  solver.scheme = \"factored\"\n  \
         sim.dt = {DEFAULT_DT:e}\n  sim.horizon = {DEFAULT_HORIZON}\n  \
         sim.u0 = {{\"kind\": \"polynomial\", \"parameters\": [1, 0, -1]}}\n  \
         outputs.directory = \"{DEFAULT_OUTPUT_DIR}\"\n  outputs.snapshot_stride = 0 (no snapshots)\n\n\
         lambda.kind: constant [c] | polynomial [c0, c1, ...] | table [[r, value], ...]\n\
         sim.u0.kind: polynomial [c0, c1, ...] | cosine [amplitude, wavenumber] | bessel_mode [amplitude]\n\n\
         Exit codes: 0 ok, 1 verification failure, 2 invalid config or arguments, 3 series did not converge,\n  \
         4 quadrature failure, 5 simulation failure, 6 file error"
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaConfig {
    Constant(f64),
    Polynomial(Vec<f64>),
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialConfig {
    Polynomial(Vec<f64>),
    Cosine { amplitude: f64, wavenumber: f64 },
    BesselMode { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub epsilon: f64,
    pub radius: f64,
    pub lambda: LambdaConfig,
    pub n_kernel: usize,
    pub m_sim: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub scheme: Scheme,
    pub dt: f64,
    pub horizon: f64,
    pub u0: InitialConfig,
    pub output_dir: PathBuf,
    pub snapshot_stride: usize,
}

impl ExperimentConfig {
    pub fn profile(&self) -> backstepping_core::Result<ReactionProfile> {
        let lambda = match &self.lambda {
            LambdaConfig::Constant(c) => Lambda::Constant(*c),
            LambdaConfig::Polynomial(c) => Lambda::Polynomial(c.clone()),
            LambdaConfig::Table(pairs) => Lambda::Table {
                r: pairs.iter().map(|p| p.0).collect(),
                values: pairs.iter().map(|p| p.1).collect(),
            },
        };
        ReactionProfile::new(self.epsilon, self.radius, lambda)
    }

    pub fn initial_condition(&self) -> impl Fn(f64) -> f64 + '_ {
        move |r| match &self.u0 {
            InitialConfig::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * r + ck),
            InitialConfig::Cosine { amplitude, wavenumber } => amplitude * (wavenumber * r).cos(),
            InitialConfig::BesselMode { amplitude } => amplitude * bessel_j0(j0_first_zero() * r / self.radius),
        }
    }
}

/// Every problem found, each prefixed by its JSON pointer.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub errors: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for e in &self.errors {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError { errors: vec![format!("{}: cannot read: {e}", path.display())] })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| ConfigError { errors: vec![format!("malformed JSON at line {}, column {}: {e}", e.line(), e.column())] })?;
    let mut v = Validator::default();
    let cfg = v.root(&value);
    if v.errors.is_empty() {
        Ok(cfg.expect("validated config"))
    } else {
        Err(ConfigError { errors: v.errors })
    }
}

#[derive(Default)]
struct Validator {
    errors: Vec<String>,
}

impl Validator {
    fn err(&mut self, path: &str, msg: impl fmt::Display) {
        self.errors.push(format!("{}: {msg}", if path.is_empty() { "/" } else { path }));
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str, allowed: &[&str]) -> Option<&'a Map<String, Value>> {
        match v.as_object() {
            Some(m) => {
                for k in m.keys() {
                    if !allowed.contains(&k.as_str()) {
                        self.err(&format!("{path}/{k}"), "unknown key");
                    }
                }
                Some(m)
            }
            None => {
                self.err(path, "expected an object");
                None
            }
        }
    }

    fn number(&mut self, m: &Map<String, Value>, path: &str, key: &str, default: Option<f64>, positive: bool) -> Option<f64> {
        let p = format!("{path}/{key}");
        match m.get(key) {
            None => {
                if default.is_none() {
                    self.err(&p, "required");
                }
                default
            }
            Some(x) => match x.as_f64() {
                Some(f) if !f.is_finite() => {
                    self.err(&p, "must be finite");
                    None
                }
                Some(f) if positive && f <= 0.0 => {
                    self.err(&p, format!("must be positive, got {f}"));
                    None
                }
                Some(f) => Some(f),
                None => {
                    self.err(&p, "expected a number");
                    None
                }
            },
        }
    }

    fn count(&mut self, m: &Map<String, Value>, path: &str, key: &str, default: usize, min: usize) -> Option<usize> {
        let p = format!("{path}/{key}");
        match m.get(key) {
            None => Some(default),
            Some(x) => match x.as_u64() {
                Some(n) if (n as usize) < min => {
                    self.err(&p, format!("must be at least {min}, got {n}"));
                    None
                }
                Some(n) => Some(n as usize),
                None => {
                    self.err(&p, "expected a nonnegative integer");
                    None
                }
            },
        }
    }

    fn numbers(&mut self, v: &Value, path: &str) -> Option<Vec<f64>> {
        let arr = match v.as_array() {
            Some(a) => a,
            None => {
                self.err(path, "expected an array of numbers");
                return None;
            }
        };
        let mut out = Vec::with_capacity(arr.len());
        let mut ok = true;
        for (i, x) in arr.iter().enumerate() {
            match x.as_f64() {
                Some(f) if f.is_finite() => out.push(f),
                _ => {
                    self.err(&format!("{path}/{i}"), "expected a finite number");
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    fn root(&mut self, v: &Value) -> Option<ExperimentConfig> {
        let m = self.object(v, "", &["epsilon", "R", "lambda", "grid", "solver", "sim", "outputs"])?;
        let epsilon = self.number(m, "", "epsilon", None, true);
        let radius = self.number(m, "", "R", None, true);
        let lambda = match m.get("lambda") {
            Some(l) => self.lambda(l, radius),
            None => {
                self.err("/lambda", "required");
                None
            }
        };
        let empty = Value::Object(Map::new());
        let grid = self.object(m.get("grid").unwrap_or(&empty), "/grid", &["N_kernel", "M_sim"]);
        let (n_kernel, m_sim) = match grid {
            Some(g) => (self.count(g, "/grid", "N_kernel", DEFAULT_N_KERNEL, 2), self.count(g, "/grid", "M_sim", DEFAULT_M_SIM, 8)),
            None => (None, None),
        };
        let solver = self.object(m.get("solver").unwrap_or(&empty), "/solver", &["tol", "max_iter", "scheme"]);
        let (tol, max_iter, scheme) = match solver {
            Some(s) => (
                self.number(s, "/solver", "tol", Some(DEFAULT_TOL), true),
                self.count(s, "/solver", "max_iter", DEFAULT_MAX_ITER, 1),
                self.scheme(s.get("scheme")),
            ),
            None => (None, None, None),
        };
        let sim = self.object(m.get("sim").unwrap_or(&empty), "/sim", &["dt", "horizon", "u0"]);
        let (dt, horizon, u0) = match sim {
            Some(s) => (
                self.number(s, "/sim", "dt", Some(DEFAULT_DT), true),
                self.number(s, "/sim", "horizon", Some(DEFAULT_HORIZON), true),
                match s.get("u0") {
                    Some(u) => self.initial(u),
                    None => Some(InitialConfig::Polynomial(vec![1.0, 0.0, -1.0])),
                },
            ),
            None => (None, None, None),
        };
        if let (Some(dt), Some(h)) = (dt, horizon) {
            if dt > h {
                self.err("/sim/dt", format!("must not exceed the horizon {h}"));
            }
        }
        let outputs = self.object(m.get("outputs").unwrap_or(&empty), "/outputs", &["directory", "snapshot_stride"]);
        let (output_dir, snapshot_stride) = match outputs {
            Some(o) => {
                let dir = match o.get("directory") {
                    None => Some(PathBuf::from(DEFAULT_OUTPUT_DIR)),
                    Some(Value::String(s)) if !s.is_empty() => Some(PathBuf::from(s)),
                    Some(_) => {
                        self.err("/outputs/directory", "expected a nonempty string");
                        None
                    }
                };
                (dir, self.count(o, "/outputs", "snapshot_stride", 0, 0))
            }
            None => (None, None),
        };
        Some(ExperimentConfig {
            epsilon: epsilon?,
            radius: radius?,
            lambda: lambda?,
            n_kernel: n_kernel?,
            m_sim: m_sim?,
            tol: tol?,
            max_iter: max_iter?,
            scheme: scheme?,
            dt: dt?,
            horizon: horizon?,
            u0: u0?,
            output_dir: output_dir?,
            snapshot_stride: snapshot_stride?,
        })
    }

    fn scheme(&mut self, v: Option<&Value>) -> Option<Scheme> {
        match v.map(|x| x.as_str()) {
            None => Some(Scheme::Factored),
            Some(Some("factored")) => Some(Scheme::Factored),
            Some(Some("nodal")) => Some(Scheme::Nodal),
            Some(_) => {
                self.err("/solver/scheme", "expected \"factored\" or \"nodal\"");
                None
            }
        }
    }

    fn kind<'a>(&mut self, m: &'a Map<String, Value>, path: &str) -> Option<&'a str> {
        match m.get("kind").map(|k| k.as_str()) {
            Some(Some(k)) => Some(k),
            Some(None) => {
                self.err(&format!("{path}/kind"), "expected a string");
                None
            }
            None => {
                self.err(&format!("{path}/kind"), "required");
                None
            }
        }
    }

    fn lambda(&mut self, v: &Value, radius: Option<f64>) -> Option<LambdaConfig> {
        let m = self.object(v, "/lambda", &["kind", "parameters"])?;
        let kind = self.kind(m, "/lambda")?;
        let params = match m.get("parameters") {
            Some(p) => p,
            None => {
                self.err("/lambda/parameters", "required");
                return None;
            }
        };
        let pp = "/lambda/parameters";
        match kind {
            "constant" => {
                let c = self.numbers(params, pp)?;
                if c.len() != 1 {
                    self.err(pp, "constant lambda takes exactly one parameter");
                    return None;
                }
                Some(LambdaConfig::Constant(c[0]))
            }
            "polynomial" => {
                let c = self.numbers(params, pp)?;
                if c.is_empty() {
                    self.err(pp, "needs at least one coefficient");
                    return None;
                }
                Some(LambdaConfig::Polynomial(c))
            }
            "table" => {
                let rows = match params.as_array() {
                    Some(a) => a,
                    None => {
                        self.err(pp, "expected an array of [r, value] pairs");
                        return None;
                    }
                };
                let mut pairs = Vec::new();
                let before = self.errors.len();
                for (i, row) in rows.iter().enumerate() {
                    let p = format!("{pp}/{i}");
                    match self.numbers(row, &p) {
                        Some(x) if x.len() == 2 => pairs.push((x[0], x[1])),
                        Some(_) => self.err(&p, "expected an [r, value] pair"),
                        None => {}
                    }
                }
                if self.errors.len() > before {
                    return None;
                }
                if pairs.len() < 2 {
                    self.err(pp, "needs at least two samples");
                }
                if pairs.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    self.err(pp, "radii must be strictly increasing");
                }
                if let Some(r) = radius {
                    if pairs.iter().any(|p| p.0 < 0.0 || p.0 > r) {
                        self.err(pp, format!("radii must lie within [0, {r}]"));
                    }
                }
                (self.errors.len() == before).then_some(LambdaConfig::Table(pairs))
            }
            other => {
                self.err("/lambda/kind", format!("unknown kind \"{other}\" (constant, polynomial, table)"));
                None
            }
        }
    }

    fn initial(&mut self, v: &Value) -> Option<InitialConfig> {
        let m = self.object(v, "/sim/u0", &["kind", "parameters"])?;
        let kind = self.kind(m, "/sim/u0")?;
        let pp = "/sim/u0/parameters";
        let params = match m.get("parameters") {
            Some(p) => self.numbers(p, pp)?,
            None => Vec::new(),
        };
        match kind {
            "polynomial" if !params.is_empty() => Some(InitialConfig::Polynomial(params)),
            "cosine" if params.len() == 2 => Some(InitialConfig::Cosine { amplitude: params[0], wavenumber: params[1] }),
            "bessel_mode" if params.len() <= 1 => {
                Some(InitialConfig::BesselMode { amplitude: params.first().copied().unwrap_or(1.0) })
            }
            "polynomial" | "cosine" | "bessel_mode" => {
                self.err(pp, format!("wrong number of parameters for \"{kind}\""));
                None
            }
            other => {
                self.err("/sim/u0/kind", format!("unknown kind \"{other}\" (polynomial, cosine, bessel_mode)"));
                None
            }
        }
    }
}
