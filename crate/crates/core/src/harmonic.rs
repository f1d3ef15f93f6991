//! Fourth- and sixth-order solutions of Laplace's equation on the box with
//! Dirichlet data.
//!
//! The fourth-order scheme is the compact operator
//!
//! ```text
//! L u = Δ_h u + sum_{r<s} (h_r^2 + h_s^2) / 12 · D_r D_s u
//! ```
//!
//! where `D_s` is the `[1, -2, 1] / h_s^2` second difference. Its eigenvectors
//! are the discrete sine modes, so `L_0 u = g̃` is solved with one forward and
//! one inverse DST. The sixth-order scheme performs one deferred-correction
//! step: the leading truncation terms of `L` for harmonic `u`,
//!
//! ```text
//! sum_{r<s} (h_r^4/240 + h_r^2 h_s^2/144) D_r D_r D_s u1
//!         + (h_s^4/240 + h_r^2 h_s^2/144) D_s D_r D_s u1,
//! ```
//!
//! are evaluated on the fourth-order solution `u1` and fed back as the
//! right-hand side. These stencils are two nodes wide, so next to the
//! boundary the right-hand side is extrapolated with cubics.

use crate::dst::{forward_dst, inverse_dst};
use crate::error::{Error, Result};
use crate::grid::{multi_index, strides, BoundaryValues, GridFunction, UniformGrid};

/// Requested accuracy of the harmonic correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HarmonicOrder {
    Fourth,
    Sixth,
}

impl HarmonicOrder {
    pub fn as_u32(self) -> u32 {
        match self {
            Self::Fourth => 4,
            Self::Sixth => 6,
        }
    }

    pub fn from_u32(order: u32) -> Result<Self> {
        match order {
            4 => Ok(Self::Fourth),
            6 => Ok(Self::Sixth),
            _ => Err(Error::Config(format!("order must be 4 or 6, got {order}"))),
        }
    }
}

/// Largest tolerated mismatch of shared boundary nodes between faces.
const CONSISTENCY_TOLERANCE: f64 = 1e-12;

/// Smallest panel count per axis for the sixth-order right-hand side: the
/// width-two stencils are valid on `2 ..= M-2` and the cubic extrapolation
/// onto node 1 needs nodes 2..=5.
pub const SIXTH_ORDER_MIN_PANELS: usize = 7;

/// Second-difference machinery on one grid.
#[derive(Debug, Clone)]
pub struct StencilWorkspace {
    shape: Vec<usize>,
    strides: Vec<usize>,
    mesh: Vec<f64>,
}

impl StencilWorkspace {
    pub fn new(grid: &UniformGrid) -> Self {
        let shape = grid.shape();
        Self {
            strides: strides(&shape),
            shape,
            mesh: grid.mesh().to_vec(),
        }
    }

    /// `D_axis u`, valid where the index along `axis` is in `1 ..= M-1`.
    /// Other entries are zero.
    pub fn d2(&self, u: &[f64], axis: usize) -> Vec<f64> {
        let n = self.shape[axis];
        let st = self.strides[axis];
        let inv = 1.0 / (self.mesh[axis] * self.mesh[axis]);
        (0..u.len())
            .map(|f| {
                let i = (f / st) % n;
                if i == 0 || i + 1 == n {
                    0.0
                } else {
                    (u[f - st] - 2.0 * u[f] + u[f + st]) * inv
                }
            })
            .collect()
    }

    fn cross_coefficient(&self, r: usize, s: usize) -> f64 {
        (self.mesh[r] * self.mesh[r] + self.mesh[s] * self.mesh[s]) / 12.0
    }

    /// The compact operator applied to a full grid function, evaluated at
    /// interior nodes (boundary entries are zero).
    pub fn apply_compact(&self, u: &[f64]) -> Vec<f64> {
        let dim = self.shape.len();
        let mut out = vec![0.0; u.len()];
        let second: Vec<Vec<f64>> = (0..dim).map(|s| self.d2(u, s)).collect();
        for d in &second {
            out.iter_mut().zip(d).for_each(|(o, v)| *o += v);
        }
        for r in 0..dim {
            for s in r + 1..dim {
                let c = self.cross_coefficient(r, s);
                let cross = self.d2(&second[s], r);
                out.iter_mut().zip(&cross).for_each(|(o, v)| *o += c * v);
            }
        }
        self.zero_boundary(&mut out);
        out
    }

    fn zero_boundary(&self, v: &mut [f64]) {
        let mut idx = vec![0; self.shape.len()];
        for (f, x) in v.iter_mut().enumerate() {
            multi_index(&self.shape, f, &mut idx);
            if idx.iter().zip(&self.shape).any(|(&i, &n)| i == 0 || i + 1 == n) {
                *x = 0.0;
            }
        }
    }
}

/// Eigenvalues of the compact operator with homogeneous boundary conditions,
/// one per interior sine mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactOperatorSymbol {
    grid: UniformGrid,
    values: Vec<f64>,
}

impl CompactOperatorSymbol {
    pub fn new(grid: &UniformGrid) -> Result<Self> {
        let dim = grid.dim();
        let shape = grid.interior_shape();
        let lambdas: Vec<Vec<f64>> = (0..dim)
            .map(|s| discrete_eigenvalues(grid.panels()[s], grid.mesh()[s]))
            .collect();
        let h2: Vec<f64> = grid.mesh().iter().map(|h| h * h).collect();
        let count: usize = shape.iter().product();
        let mut idx = vec![0; dim];
        let mut values = Vec::with_capacity(count);
        for n in 0..count {
            multi_index(&shape, n, &mut idx);
            let l: Vec<f64> = (0..dim).map(|s| lambdas[s][idx[s]]).collect();
            let mut v: f64 = l.iter().sum();
            for r in 0..dim {
                for s in r + 1..dim {
                    v += (h2[r] + h2[s]) / 12.0 * l[r] * l[s];
                }
            }
            let scale = l.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if !v.is_finite() || v.abs() <= 1e-13 * scale {
                return Err(Error::DegenerateOperator {
                    mode: idx.iter().map(|k| k + 1).collect(),
                });
            }
            values.push(v);
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Symbol of wavenumber `k` (1-based per axis).
    pub fn get(&self, k: &[usize]) -> f64 {
        let shape = self.grid.interior_shape();
        let flat = k
            .iter()
            .zip(&shape)
            .fold(0, |acc, (&ki, &n)| acc * n + (ki - 1));
        self.values[flat]
    }
}

/// `(2 cos(k π / M) - 2) / h^2` for `k = 1 .. M-1`.
fn discrete_eigenvalues(panels: usize, h: f64) -> Vec<f64> {
    (1..panels)
        .map(|k| {
            let theta = k as f64 * std::f64::consts::PI / panels as f64;
            // 2cos θ - 2 = -4 sin^2(θ/2), without the cancellation near k = 1
            let s = (0.5 * theta).sin();
            -4.0 * s * s / (h * h)
        })
        .collect()
}

fn check_consistent(g: &BoundaryValues) -> Result<()> {
    let err = g.consistency_error();
    if err > CONSISTENCY_TOLERANCE {
        return Err(Error::Shape(format!(
            "boundary values disagree on shared nodes (relative mismatch {err:e})"
        )));
    }
    Ok(())
}

/// Moves the boundary terms of the compact operator to the right-hand side:
/// the result is `-L(g extended by zero)` on interior nodes, which is nonzero
/// only on the first interior layer.
pub fn transfer_boundary_to_rhs(g: &BoundaryValues) -> Result<GridFunction> {
    check_consistent(g)?;
    let ws = StencilWorkspace::new(g.grid());
    Ok(transfer_with(g, &ws))
}

fn transfer_with(g: &BoundaryValues, ws: &StencilWorkspace) -> GridFunction {
    let ext = g.to_grid_function();
    let mut v = ws.apply_compact(ext.values());
    v.iter_mut().for_each(|x| *x = -*x);
    GridFunction::from_values(g.grid(), v).expect("shape preserved")
}

/// Linear interpolation of the two endpoint values.
pub fn solve_harmonic_1d(g_left: f64, g_right: f64, grid: &UniformGrid) -> Result<GridFunction> {
    if grid.dim() != 1 {
        return Err(Error::Shape(format!(
            "one-dimensional solve on a {}D grid",
            grid.dim()
        )));
    }
    let m = grid.panels()[0];
    let values = (0..=m)
        .map(|i| {
            if i == m {
                g_right
            } else {
                g_left + (g_right - g_left) * (i as f64 / m as f64)
            }
        })
        .collect();
    GridFunction::from_values(grid, values)
}

/// Reusable harmonic solver for one grid; the operator symbol is tabulated
/// once and shared by the fourth-order solve and the correction step.
#[derive(Debug, Clone)]
pub struct HarmonicSolver {
    grid: UniformGrid,
    symbol: Option<CompactOperatorSymbol>,
    stencil: StencilWorkspace,
}

impl HarmonicSolver {
    pub fn new(grid: &UniformGrid) -> Result<Self> {
        let symbol = if grid.dim() > 1 {
            Some(CompactOperatorSymbol::new(grid)?)
        } else {
            None
        };
        Ok(Self {
            grid: grid.clone(),
            symbol,
            stencil: StencilWorkspace::new(grid),
        })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn symbol(&self) -> Option<&CompactOperatorSymbol> {
        self.symbol.as_ref()
    }

    fn check_grid(&self, g: &BoundaryValues) -> Result<()> {
        if g.grid() != &self.grid {
            return Err(Error::Shape("boundary values on a different grid".into()));
        }
        Ok(())
    }

    pub fn solve(&self, g: &BoundaryValues, order: HarmonicOrder) -> Result<GridFunction> {
        match order {
            HarmonicOrder::Fourth => self.solve_4th(g),
            HarmonicOrder::Sixth => self.solve_6th(g),
        }
    }

    fn solve_1d(&self, g: &BoundaryValues) -> Result<GridFunction> {
        let f = g.to_grid_function();
        let m = self.grid.panels()[0];
        solve_harmonic_1d(f.values()[0], f.values()[m], &self.grid)
    }

    /// Solves `L_0 u = rhs` on the interior and sets `u = g` on the boundary.
    fn invert(&self, rhs: &GridFunction, g: &BoundaryValues) -> Result<GridFunction> {
        let symbol = self.symbol.as_ref().expect("multidimensional grid");
        let mut coeffs = forward_dst(rhs)?;
        for (c, l) in coeffs.coefficients_mut().iter_mut().zip(symbol.values()) {
            *c /= l;
        }
        let inner = inverse_dst(&coeffs);
        inner.add_scaled(&g.to_grid_function(), 1.0)
    }

    pub fn solve_4th(&self, g: &BoundaryValues) -> Result<GridFunction> {
        self.check_grid(g)?;
        if self.grid.dim() == 1 {
            return self.solve_1d(g);
        }
        check_consistent(g)?;
        let rhs = transfer_with(g, &self.stencil);
        self.invert(&rhs, g)
    }

    pub fn solve_6th(&self, g: &BoundaryValues) -> Result<GridFunction> {
        self.check_grid(g)?;
        if self.grid.dim() == 1 {
            return self.solve_1d(g);
        }
        check_sixth_order_grid(&self.grid)?;
        check_consistent(g)?;
        let transfer = transfer_with(g, &self.stencil);
        let u1 = self.invert(&transfer, g)?;
        let correction = sixth_order_rhs_with(&u1, &self.stencil);
        let rhs = correction.add_scaled(&transfer, 1.0)?;
        self.invert(&rhs, g)
    }
}

fn check_sixth_order_grid(grid: &UniformGrid) -> Result<()> {
    if grid.dim() < 2 {
        return Err(Error::Shape("sixth-order correction needs d >= 2".into()));
    }
    if let Some(&m) = grid.panels().iter().find(|&&m| m < SIXTH_ORDER_MIN_PANELS) {
        return Err(Error::Shape(format!(
            "sixth-order correction needs at least {SIXTH_ORDER_MIN_PANELS} panels per axis, got {m}"
        )));
    }
    Ok(())
}

/// Fourth-order solution of Laplace's equation with boundary data `g`.
pub fn solve_harmonic_4th(g: &BoundaryValues) -> Result<GridFunction> {
    HarmonicSolver::new(g.grid())?.solve_4th(g)
}

/// Sixth-order solution: one deferred-correction step on top of the
/// fourth-order solve.
pub fn solve_harmonic_6th(g: &BoundaryValues) -> Result<GridFunction> {
    HarmonicSolver::new(g.grid())?.solve_6th(g)
}

/// Right-hand side of the sixth-order correction evaluated on `u1`.
///
/// Exact stencil values on interior nodes at depth >= 2; cubic
/// extrapolation along the inward normal on the first interior layer.
/// Boundary entries are zero.
pub fn sixth_order_rhs(u1: &GridFunction) -> Result<GridFunction> {
    check_sixth_order_grid(u1.grid())?;
    Ok(sixth_order_rhs_with(u1, &StencilWorkspace::new(u1.grid())))
}

fn sixth_order_rhs_with(u1: &GridFunction, ws: &StencilWorkspace) -> GridFunction {
    let grid = u1.grid();
    let dim = grid.dim();
    let h2: Vec<f64> = grid.mesh().iter().map(|h| h * h).collect();
    let u = u1.values();
    let mut rhs = vec![0.0; u.len()];
    let second: Vec<Vec<f64>> = (0..dim).map(|s| ws.d2(u, s)).collect();
    for r in 0..dim {
        for s in r + 1..dim {
            let mixed = ws.d2(&second[s], r);
            let cr = h2[r] * h2[r] / 240.0 + h2[r] * h2[s] / 144.0;
            let cs = h2[s] * h2[s] / 240.0 + h2[r] * h2[s] / 144.0;
            let tr = ws.d2(&mixed, r);
            let ts = ws.d2(&mixed, s);
            for ((o, a), b) in rhs.iter_mut().zip(&tr).zip(&ts) {
                *o += cr * a + cs * b;
            }
        }
    }

    let shape = grid.shape();
    let st = strides(&shape);
    let panels = grid.panels();
    let mut idx = vec![0; dim];
    // depth-1 layer nodes grouped by how many faces they are adjacent to
    let mut stages: Vec<Vec<usize>> = vec![Vec::new(); dim + 1];
    for (f, v) in rhs.iter_mut().enumerate() {
        multi_index(&shape, f, &mut idx);
        if grid.is_boundary(&idx) {
            *v = 0.0;
            continue;
        }
        let ties = idx
            .iter()
            .zip(panels)
            .filter(|&(&i, &m)| i == 1 || i + 1 == m)
            .count();
        if ties > 0 {
            stages[ties].push(f);
        }
    }
    for stage in &stages[1..] {
        for &f in stage {
            multi_index(&shape, f, &mut idx);
            let mut sum = 0.0;
            let mut count = 0;
            for s in 0..dim {
                let inward: isize = if idx[s] == 1 {
                    1
                } else if idx[s] + 1 == panels[s] {
                    -1
                } else {
                    continue;
                };
                let at = |k: isize| rhs[(f as isize + k * inward * st[s] as isize) as usize];
                sum += 4.0 * at(1) - 6.0 * at(2) + 4.0 * at(3) - at(4);
                count += 1;
            }
            rhs[f] = sum / count as f64;
        }
    }
    GridFunction::from_values(grid, rhs).expect("shape preserved")
}
