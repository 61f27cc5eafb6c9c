//! Plant data: diffusion coefficient, disk radius and the radial reaction
//! coefficient `lambda(r)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_SAMPLES: usize = 20_000;

/// How `lambda(r)` is supplied.
#[derive(Clone)]
pub enum Lambda {
    Constant(f64),
    /// Coefficients `c0 + c1 r + c2 r^2 + ...`.
    Polynomial(Vec<f64>),
    /// Samples `(r_k, lambda_k)` with linear interpolation, clamped outside
    /// the sampled range.
    Table { r: Vec<f64>, values: Vec<f64> },
    /// Any closed-form evaluator; the label goes into exported metadata.
    Function { label: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl fmt::Debug for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lambda::Constant(c) => write!(f, "Constant({c})"),
            Lambda::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            Lambda::Table { r, .. } => write!(f, "Table({} samples)", r.len()),
            Lambda::Function { label, .. } => write!(f, "Function({label})"),
        }
    }
}

impl Lambda {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Lambda::Constant(c) => *c,
            Lambda::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * r + ck),
            Lambda::Table { r: rs, values } => interpolate(rs, values, r),
            Lambda::Function { f, .. } => f(r),
        }
    }

    pub fn descriptor(&self) -> LambdaDescriptor {
        match self {
            Lambda::Constant(c) => LambdaDescriptor { kind: "constant".into(), parameters: vec![*c], label: None },
            Lambda::Polynomial(c) => LambdaDescriptor { kind: "polynomial".into(), parameters: c.clone(), label: None },
            Lambda::Table { r, values } => LambdaDescriptor {
                kind: "table".into(),
                parameters: r.iter().chain(values.iter()).copied().collect(),
                label: Some(format!("{} samples: r values then lambda values", r.len())),
            },
            Lambda::Function { label, .. } => {
                LambdaDescriptor { kind: "function".into(), parameters: Vec::new(), label: Some(label.clone()) }
            }
        }
    }
}

/// Serializable summary of a [`Lambda`], written next to exported kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaDescriptor {
    pub kind: String,
    pub parameters: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

fn interpolate(rs: &[f64], values: &[f64], r: f64) -> f64 {
    if r <= rs[0] {
        return values[0];
    }
    let last = rs.len() - 1;
    if r >= rs[last] {
        return values[last];
    }
    let k = rs.partition_point(|&x| x <= r) - 1;
    let t = (r - rs[k]) / (rs[k + 1] - rs[k]);
    values[k] + t * (values[k + 1] - values[k])
}

/// Plant data plus the derived constants `lambda_max = sup |lambda|` on
/// `[0, R]` and `lambda_bar = lambda_max / (4 eps)`.
#[derive(Debug, Clone)]
pub struct ReactionProfile {
    epsilon: f64,
    radius: f64,
    lambda: Lambda,
    lambda_max: f64,
    lambda_bar: f64,
}

impl ReactionProfile {
    pub fn new(epsilon: f64, radius: f64, lambda: Lambda) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("radius must be positive, got {radius}")));
        }
        if let Lambda::Table { r, values } = &lambda {
            validate_table(r, values, radius)?;
        }
        let lambda_max = sup_abs(&lambda, radius);
        if !lambda_max.is_finite() {
            return Err(Error::Domain("lambda is not finite on [0, R]".into()));
        }
        Ok(Self { epsilon, radius, lambda, lambda_max, lambda_bar: lambda_max / (4.0 * epsilon) })
    }

    pub fn constant(lambda0: f64, epsilon: f64, radius: f64) -> Result<Self> {
        Self::new(epsilon, radius, Lambda::Constant(lambda0))
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn lambda(&self) -> &Lambda {
        &self.lambda
    }

    pub fn lambda_at(&self, r: f64) -> f64 {
        self.lambda.eval(r)
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }

    /// `Some(lambda0)` when the coefficient is a constant.
    pub fn as_constant(&self) -> Option<f64> {
        match &self.lambda {
            Lambda::Constant(c) => Some(*c),
            Lambda::Polynomial(c) if c.iter().skip(1).all(|&x| x == 0.0) => Some(c.first().copied().unwrap_or(0.0)),
            _ => None,
        }
    }
}

fn validate_table(r: &[f64], values: &[f64], radius: f64) -> Result<()> {
    if r.len() < 2 || r.len() != values.len() {
        return Err(Error::Domain("lambda table needs at least two (r, value) pairs of equal length".into()));
    }
    if r.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("lambda table radii must be strictly increasing".into()));
    }
    if r[0] < 0.0 || r[r.len() - 1] > radius {
        return Err(Error::Domain(format!("lambda table radii must lie within [0, {radius}]")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("lambda table values must be finite".into()));
    }
    Ok(())
}

fn sup_abs(lambda: &Lambda, radius: f64) -> f64 {
    match lambda {
        Lambda::Constant(c) => c.abs(),
        // Piecewise linear: the extrema sit at the samples.
        Lambda::Table { values, .. } => values.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        Lambda::Polynomial(_) | Lambda::Function { .. } => {
            let mut m = lambda.eval(0.0).abs().max(lambda.eval(radius).abs());
            for k in 1..MAX_SAMPLES {
                let r = radius * k as f64 / MAX_SAMPLES as f64;
                m = m.max(lambda.eval(r).abs());
            }
            m
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_max_on_interval() {
        let p = ReactionProfile::new(1.0, 1.0, Lambda::Polynomial(vec![10.0, 0.0, 10.0])).unwrap();
        assert_eq!(p.lambda_max(), 20.0);
        assert_eq!(p.lambda_bar(), 5.0);
        assert!((p.lambda_at(0.5) - 12.5).abs() < 1e-14);
    }

    #[test]
    fn table_interpolates_and_clamps() {
        let lam = Lambda::Table { r: vec![0.0, 0.5, 1.0], values: vec![1.0, 3.0, -5.0] };
        let p = ReactionProfile::new(2.0, 1.0, lam).unwrap();
        assert_eq!(p.lambda_at(0.25), 2.0);
        assert_eq!(p.lambda_at(0.75), -1.0);
        assert_eq!(p.lambda_at(2.0), -5.0);
        assert_eq!(p.lambda_max(), 5.0);
        assert_eq!(p.lambda_bar(), 5.0 / 8.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ReactionProfile::constant(1.0, -1.0, 1.0).is_err());
        assert!(ReactionProfile::constant(1.0, 1.0, 0.0).is_err());
        let outside = Lambda::Table { r: vec![0.0, 1.5], values: vec![1.0, 1.0] };
        assert!(ReactionProfile::new(1.0, 1.0, outside).is_err());
        let unsorted = Lambda::Table { r: vec![0.5, 0.2], values: vec![1.0, 1.0] };
        assert!(ReactionProfile::new(1.0, 1.0, unsorted).is_err());
    }

    #[test]
    fn constant_detection() {
        assert_eq!(ReactionProfile::constant(3.0, 1.0, 1.0).unwrap().as_constant(), Some(3.0));
        let p = ReactionProfile::new(1.0, 1.0, Lambda::Polynomial(vec![10.0, 0.0, 10.0])).unwrap();
        assert_eq!(p.as_constant(), None);
    }
}
