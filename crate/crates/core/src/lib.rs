//! High-order free-space Poisson solver on uniform rectangular grids.
//!
//! Computes `φ = ∫ G(|x - s|) ρ(s) ds` at every node of a 1D, 2D or 3D grid,
//! for a smooth `ρ` supported strictly inside the domain, in `O(N log N)`.
//! The potential is assembled from two box problems:
//!
//! * `φ*`, the homogeneous-Dirichlet solution of `Δφ* = ρ`, from a discrete
//!   sine transform with the continuous Laplacian eigenvalues
//!   ([`dirichlet`]);
//! * `φ_H`, a harmonic correction whose boundary data is the Green's-function
//!   integral itself, accumulated with per-slice FFT convolutions
//!   ([`boundary`]) and extended to the interior by a fourth- or sixth-order
//!   compact scheme ([`harmonic`]).
//!
//! ```
//! use fspoisson::{bump::PolyBump, grid::UniformGrid, solver::{solve, Density, SolverConfig}};
//!
//! let grid = UniformGrid::cube(3, -1.0, 1.0, 16).unwrap();
//! let rho = PolyBump::reference_3d(6);
//! let f = |x: &[f64]| rho.evaluate(x);
//! let (phi, _report) = solve(Density::Callable(&f), &grid, &SolverConfig::default()).unwrap();
//! let exact = rho.analytic_potential(&[0.0, 0.0, 0.0]);
//! assert!((phi.get(&[8, 8, 8]) - exact).abs() < 1e-3 * exact.abs());
//! ```

pub mod boundary;
pub mod bump;
pub mod dirichlet;
pub mod dst;
pub mod error;
pub mod greens;
pub mod grid;
pub mod harmonic;
pub mod pgrid;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{BoundaryValues, GridFunction, UniformGrid};
pub use harmonic::HarmonicOrder;
pub use solver::{solve, Density, SolveReport, SolverConfig};
