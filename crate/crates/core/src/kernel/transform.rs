use crate::error::{Error, Result};

use super::KernelTable;

fn volterra(kernel: &KernelTable, u: &[f64], sign: f64) -> Result<Vec<f64>> {
    let grid = kernel.grid();
    let n = grid.subdivisions();
    if u.len() != n + 1 {
        return Err(Error::GridMismatch(format!("{} samples for a grid with {} nodes per row", u.len(), n + 1)));
    }
    let h = grid.spacing();
    Ok((0..=n)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..=i {
                let w = if j == 0 || j == i { 0.5 } else { 1.0 };
                s += w * kernel.k_at(i, j) * u[j];
            }
            if i == 0 {
                s = 0.0;
            }
            u[i] + sign * h * s
        })
        .collect())
}

/// `w(r) = u(r) - int_0^r K(r, rho) u(rho) drho` at the grid nodes (trapezoid).
pub fn forward_transform(k: &KernelTable, u: &[f64]) -> Result<Vec<f64>> {
    volterra(k, u, -1.0)
}

/// `u(r) = w(r) + int_0^r L(r, rho) w(rho) drho` at the grid nodes (trapezoid).
pub fn inverse_transform(l: &KernelTable, w: &[f64]) -> Result<Vec<f64>> {
    volterra(l, w, 1.0)
}

/// `max |u' - u| / max |u|` for `u' = (I + L)(I - K) u`; zero for `u = 0`.
pub fn transform_roundtrip(k: &KernelTable, l: &KernelTable, u_samples: &[f64]) -> Result<f64> {
    if k.grid() != l.grid() {
        return Err(Error::GridMismatch("direct and inverse kernels live on different grids".into()));
    }
    let w = forward_transform(k, u_samples)?;
    let back = inverse_transform(l, &w)?;
    let scale = u_samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(0.0);
    }
    let err = back.iter().zip(u_samples).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(err / scale)
}
