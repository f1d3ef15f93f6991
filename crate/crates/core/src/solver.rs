//! Infinite-domain Poisson solves: `φ = φ* + φ_H` on a padded grid.

use std::time::{Duration, Instant};

use crate::boundary::boundary_values_fast;
use crate::dirichlet::{check_support, solve_phi_star_with, ContinuousEigenvalueTable};
use crate::dst::fft_friendly_len;
use crate::error::{Error, Result};
use crate::grid::{max_norm_difference, restrict_to_subgrid, GridFunction, UniformGrid};
use crate::harmonic::{HarmonicOrder, HarmonicSolver};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverConfig {
    pub order: HarmonicOrder,
    /// Zero collar added on every side, in whole panels.
    pub padding_panels: usize,
    /// Round padded panel counts up to 7-smooth integers.
    pub fft_friendly_expansion: bool,
    pub thread_count: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            order: HarmonicOrder::Sixth,
            padding_panels: 0,
            fft_friendly_expansion: false,
            thread_count: 1,
        }
    }
}

/// Where the density comes from.
#[derive(Clone, Copy)]
pub enum Density<'a> {
    /// Samples on the user grid; zero outside it.
    Samples(&'a GridFunction),
    /// A function sampled on the padded grid.
    Callable(&'a (dyn Fn(&[f64]) -> f64 + Sync)),
}

impl std::fmt::Debug for Density<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Samples(g) => f.debug_tuple("Samples").field(g.grid()).finish(),
            Self::Callable(_) => f.write_str("Callable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub user_grid: UniformGrid,
    pub padded_grid: UniformGrid,
    pub phi_star_time: Duration,
    pub boundary_time: Duration,
    pub harmonic_time: Duration,
    /// Largest `|ρ|` found on the padded boundary (accepted as zero).
    pub boundary_rho_max: f64,
}

impl SolveReport {
    pub fn total_time(&self) -> Duration {
        self.phi_star_time + self.boundary_time + self.harmonic_time
    }
}

/// Grows `grid` by `padding_panels` on every side and, if requested, rounds
/// each panel count up to a 7-smooth integer, splitting the extra panels
/// between the two sides (the lower side gets the smaller half).
pub fn pad_domain(grid: &UniformGrid, config: &SolverConfig) -> Result<UniformGrid> {
    let dim = grid.dim();
    let pad = config.padding_panels;
    let mut before = vec![pad; dim];
    let mut after = vec![pad; dim];
    if config.fft_friendly_expansion {
        for s in 0..dim {
            let m = grid.panels()[s] + 2 * pad;
            let extra = fft_friendly_len(m) - m;
            before[s] += extra / 2;
            after[s] += extra - extra / 2;
        }
    }
    if before.iter().chain(&after).all(|&v| v == 0) {
        return Ok(grid.clone());
    }
    grid.extended(&before, &after)
}

fn validate(config: &SolverConfig, grid: &UniformGrid) -> Result<()> {
    if config.thread_count == 0 {
        return Err(Error::Config("thread count must be positive".into()));
    }
    if config.order == HarmonicOrder::Sixth && grid.dim() > 1 {
        if let Some(&m) = grid
            .panels()
            .iter()
            .find(|&&m| m < crate::harmonic::SIXTH_ORDER_MIN_PANELS)
        {
            return Err(Error::Shape(format!(
                "sixth-order correction needs at least {} panels per axis, got {m}",
                crate::harmonic::SIXTH_ORDER_MIN_PANELS
            )));
        }
    }
    Ok(())
}

/// Free-space potential of `density` at every node of `user_grid`.
pub fn solve(
    density: Density<'_>,
    user_grid: &UniformGrid,
    config: &SolverConfig,
) -> Result<(GridFunction, SolveReport)> {
    let padded = pad_domain(user_grid, config)?;
    validate(config, &padded)?;
    let rho = match density {
        Density::Samples(samples) => {
            if samples.grid() != user_grid {
                return Err(Error::Shape(
                    "density samples must live on the user grid".into(),
                ));
            }
            samples.embed(&padded)?
        }
        Density::Callable(f) => GridFunction::from_fn(&padded, f),
    };
    let (phi, mut report) = solve_padded(&rho, config)?;
    report.user_grid = user_grid.clone();
    Ok((restrict_to_subgrid(&phi, user_grid)?, report))
}

/// Solves on the grid of `rho` itself, which must already carry the zero
/// collar. Returns `φ` on that whole grid.
pub fn solve_padded(rho: &GridFunction, config: &SolverConfig) -> Result<(GridFunction, SolveReport)> {
    let grid = rho.grid();
    validate(config, grid)?;
    let boundary_rho_max = check_support(rho)?;

    let t = Instant::now();
    let table = ContinuousEigenvalueTable::new(grid);
    let phi_star = solve_phi_star_with(rho, &table)?;
    let phi_star_time = t.elapsed();

    let t = Instant::now();
    let g = boundary_values_fast(rho, config.thread_count)?;
    let boundary_time = t.elapsed();

    let t = Instant::now();
    let phi_h = HarmonicSolver::new(grid)?.solve(&g, config.order)?;
    let harmonic_time = t.elapsed();

    let phi = phi_star.add_scaled(&phi_h, 1.0)?;
    let report = SolveReport {
        user_grid: grid.clone(),
        padded_grid: grid.clone(),
        phi_star_time,
        boundary_time,
        harmonic_time,
        boundary_rho_max,
    };
    Ok((phi, report))
}

/// For each `D`, solves on the base domain scaled by `D` about its centre
/// (same mesh) and reports `max |φ_D - φ_1|` over the base nodes divided by
/// `max |φ_1|`.
pub fn domain_invariance_study(
    rho: &(dyn Fn(&[f64]) -> f64 + Sync),
    base_grid: &UniformGrid,
    d_values: &[f64],
    config: &SolverConfig,
) -> Result<Vec<(f64, f64)>> {
    let (base, _) = solve(Density::Callable(rho), base_grid, config)?;
    let norm = base.max_abs();
    d_values
        .iter()
        .map(|&d| {
            let extended = scaled_grid(base_grid, d)?;
            let (phi, _) = solve(Density::Callable(rho), &extended, config)?;
            let restricted = restrict_to_subgrid(&phi, base_grid)?;
            let diff = max_norm_difference(&restricted, &base)?;
            Ok((d, if norm > 0.0 { diff / norm } else { diff }))
        })
        .collect()
}

/// Base grid scaled by `d >= 1` about its centre, keeping the mesh width.
pub fn scaled_grid(base: &UniformGrid, d: f64) -> Result<UniformGrid> {
    if !(d >= 1.0) {
        return Err(Error::Config(format!("domain scale must be >= 1, got {d}")));
    }
    let dim = base.dim();
    let mut extra = Vec::with_capacity(dim);
    for s in 0..dim {
        let grow = (d - 1.0) * 0.5 * base.length(s) / base.mesh()[s];
        let whole = grow.round();
        if (grow - whole).abs() > 1e-9 * grow.abs().max(1.0) {
            return Err(Error::Alignment(format!(
                "D = {d}: extension of {grow} panels on axis {s} is not a whole number"
            )));
        }
        extra.push(whole as usize);
    }
    base.extended(&extra, &extra)
}
