use anyhow::Result;
use clap::{Parser, Subcommand};
use fspoisson_cli::spec::{SpecArgs, StudyKind, StudySpec};
use fspoisson_cli::study::{self, emit};

#[derive(Parser)]
#[command(name = "fspoisson", version, about = "Free-space Poisson solves and convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and write the potential
    Solve(SpecArgs),
    /// Error against the exact potential over a sequence of grids
    Convergence(SpecArgs),
    /// Difference on the base domain as the domain grows
    Domain(SpecArgs),
    /// Per-phase timings for several thread counts
    Threads(SpecArgs),
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Solve(a) => (StudyKind::Solve, a),
        Command::Convergence(a) => (StudyKind::Convergence, a),
        Command::Domain(a) => (StudyKind::Domain, a),
        Command::Threads(a) => (StudyKind::Threads, a),
    };
    let spec = StudySpec::from_args(kind, args.with_config_file()?)?;
    let out = spec.out.as_deref();
    match kind {
        StudyKind::Solve => {
            let outcome = study::run_solve(&spec)?;
            emit(out, |w| study::write_solution(&spec, &outcome.phi, w))?;
            eprintln!(
                "solved on {:?} (padded {:?}) in {:.3} s",
                outcome.report.user_grid.panels(),
                outcome.report.padded_grid.panels(),
                outcome.report.total_time().as_secs_f64()
            );
            if let Some(e) = outcome.max_rel_err {
                eprintln!("max relative error {e:.3e}");
            }
        }
        StudyKind::Convergence => {
            let result = study::run_convergence_study(&spec)?;
            emit(out, |w| result.write_csv(w))?;
            match result.slope {
                Some(s) => eprintln!("slope {s:.3}"),
                None => eprintln!("slope: fewer than two points in the fit window"),
            }
        }
        StudyKind::Domain => {
            let rows = study::run_domain_study(&spec)?;
            emit(out, |w| study::write_domain_csv(&rows, w))?;
        }
        StudyKind::Threads => {
            let rows = study::run_thread_benchmark(&spec)?;
            emit(out, |w| study::write_threads_csv(&rows, w))?;
            eprintln!("solutions identical for threads {:?}", spec.threads);
        }
    }
    Ok(())
}
