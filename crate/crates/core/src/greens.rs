//! Free-space Green's function of the Laplace operator.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Radial Green's function `G(r)` for `dim` in 1..=3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GreensKernel {
    dim: usize,
}

impl GreensKernel {
    pub fn new(dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `G(r)` without the `r > 0` check. Returns `-inf` at `r = 0` in 2D/3D.
    #[inline]
    pub fn eval_unchecked(&self, r: f64) -> f64 {
        match self.dim {
            1 => 0.5 * r,
            2 => r.ln() / (2.0 * PI),
            _ => -1.0 / (4.0 * PI * r),
        }
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if self.dim > 1 && r == 0.0 {
            return Err(Error::Singularity { dim: self.dim });
        }
        Ok(self.eval_unchecked(r))
    }

    /// Derivative `G'(r)`; the flux of the unit source through a sphere of radius `r`.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        match self.dim {
            1 => 0.5,
            2 => 1.0 / (2.0 * PI * r),
            _ => 1.0 / (4.0 * PI * r * r),
        }
    }
}

/// `|x|/2`, `log|x| / 2π` or `-1 / (4π|x|)` for `dim = 1, 2, 3`.
pub fn green_value(dim: usize, r: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::Config(format!("negative distance {r}")));
    }
    GreensKernel::new(dim)?.eval(r)
}

/// Samples `G` at distances `sqrt(|fixed|^2 + offset^2)` for each entry of
/// `offsets`. `fixed_offsets` holds the remaining `dim - 1` components.
pub fn kernel_slice(dim: usize, fixed_offsets: &[f64], offsets: &[f64]) -> Result<Vec<f64>> {
    let kernel = GreensKernel::new(dim)?;
    if fixed_offsets.len() + 1 != dim {
        return Err(Error::Shape(format!(
            "{} fixed offsets for a {dim}D kernel",
            fixed_offsets.len()
        )));
    }
    let fixed_sq: f64 = fixed_offsets.iter().map(|v| v * v).sum();
    offsets
        .iter()
        .map(|&o| kernel.eval((fixed_sq + o * o).sqrt()))
        .collect()
}
