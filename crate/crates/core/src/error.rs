use thiserror::Error;

/// Errors raised by grid construction and the solver pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("index {index:?} out of range for panels {panels:?}")]
    Index { index: Vec<usize>, panels: Vec<usize> },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("grids are not node-aligned: {0}")]
    Alignment(String),

    #[error("Green's function is singular at r = 0 in {dim}D")]
    Singularity { dim: usize },

    #[error(
        "density does not vanish on the boundary \
         (max boundary |rho| = {boundary_max:e}, max |rho| = {max:e})"
    )]
    SupportViolation { boundary_max: f64, max: f64 },

    #[error("compact operator symbol vanishes at mode {mode:?}")]
    DegenerateOperator { mode: Vec<usize> },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
