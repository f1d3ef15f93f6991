//! Studies and file output behind the `fspoisson` command.

pub mod spec;
pub mod study;

pub use spec::{BumpSpec, OutputFormat, SpecArgs, StudyKind, StudySpec};
pub use study::{
    log_log_slope, run_convergence_study, run_domain_study, run_solve, run_thread_benchmark,
    ConvergenceRow, ConvergenceStudy, ThreadRow,
};
