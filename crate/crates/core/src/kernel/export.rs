use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::profile::LambdaDescriptor;

use super::{KernelTable, Scheme, Variant};

/// Metadata written next to an exported kernel CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSidecar {
    pub epsilon: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "N")]
    pub subdivisions: usize,
    pub tol: f64,
    pub iterations_used: usize,
    pub residual: f64,
    pub variant: Variant,
    pub scheme: Scheme,
    pub lambda_descriptor: LambdaDescriptor,
}

impl KernelSidecar {
    pub fn new(table: &KernelTable, residual: f64) -> Self {
        Self {
            epsilon: table.epsilon(),
            radius: table.grid().radius(),
            subdivisions: table.grid().subdivisions(),
            tol: table.tol(),
            iterations_used: table.iterations_used(),
            residual,
            variant: table.variant(),
            scheme: table.scheme(),
            lambda_descriptor: table.lambda_descriptor().clone(),
        }
    }
}

/// `r,rho,K` rows, one per node, 17 significant digits.
pub fn write_kernel_csv<W: Write>(table: &KernelTable, mut out: W) -> io::Result<()> {
    let grid = table.grid();
    writeln!(out, "r,rho,K")?;
    for ((i, j), k) in grid.nodes().zip(table.values_k()) {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", grid.coord(i), grid.coord(j), k)?;
    }
    Ok(())
}
