//! Spectral solution of `Δφ* = ρ` on the box with `φ* = 0` on the boundary.

use std::f64::consts::PI;

use crate::dst::{forward_dst, inverse_dst};
use crate::error::{Error, Result};
use crate::grid::{multi_index, GridFunction, UniformGrid};

/// Largest boundary `|ρ|`, relative to `max |ρ|`, accepted as "zero".
pub const SUPPORT_TOLERANCE: f64 = 1e-14;

/// Eigenvalues `-sum_s (k_s π / L_s)^2` of the continuous Laplacian on the
/// sine modes. Not to be confused with the difference-operator symbol used
/// by the harmonic solver.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousEigenvalueTable {
    grid: UniformGrid,
    values: Vec<f64>,
}

impl ContinuousEigenvalueTable {
    pub fn new(grid: &UniformGrid) -> Self {
        let shape = grid.interior_shape();
        let per_axis: Vec<Vec<f64>> = (0..grid.dim())
            .map(|s| {
                let l = grid.length(s);
                (1..=shape[s])
                    .map(|k| {
                        let w = k as f64 * PI / l;
                        -w * w
                    })
                    .collect()
            })
            .collect();
        let count: usize = shape.iter().product();
        let mut idx = vec![0; shape.len()];
        let values = (0..count)
            .map(|n| {
                multi_index(&shape, n, &mut idx);
                idx.iter().enumerate().map(|(s, &k)| per_axis[s][k]).sum()
            })
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Checks that `ρ` vanishes on the boundary of its grid.
pub fn check_support(rho: &GridFunction) -> Result<f64> {
    let boundary_max = rho.boundary_max_abs();
    let max = rho.max_abs();
    if boundary_max > SUPPORT_TOLERANCE * max {
        return Err(Error::SupportViolation { boundary_max, max });
    }
    Ok(boundary_max)
}

/// `φ*` from the sine series of `ρ` divided by the continuous eigenvalues.
pub fn solve_phi_star(rho: &GridFunction) -> Result<GridFunction> {
    check_support(rho)?;
    let table = ContinuousEigenvalueTable::new(rho.grid());
    solve_phi_star_with(rho, &table)
}

pub(crate) fn solve_phi_star_with(
    rho: &GridFunction,
    table: &ContinuousEigenvalueTable,
) -> Result<GridFunction> {
    let mut beta = forward_dst(rho)?;
    for (b, lambda) in beta.coefficients_mut().iter_mut().zip(table.values()) {
        *b /= lambda;
    }
    Ok(inverse_dst(&beta))
}
