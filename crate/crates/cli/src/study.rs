//! Convergence, domain-expansion and thread-scaling studies.

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use fspoisson::grid::max_norm_difference;
use fspoisson::pgrid::{self, DataEncoding};
use fspoisson::solver::{domain_invariance_study, solve, Density, SolveReport};
use fspoisson::{GridFunction, UniformGrid};

use crate::spec::{OutputFormat, StudySpec};

pub const CONVERGENCE_HEADER: &str = "h,panels,order,diff,max_rel_err,t_phistar_s,t_boundary_s,t_harmonic_s";
pub const DOMAIN_HEADER: &str = "D,max_rel_diff";
pub const THREADS_HEADER: &str = "threads,t_phistar_s,t_boundary_s,t_harmonic_s,t_total_s,speedup";

/// 17 significant digits.
pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub panels: Vec<usize>,
    pub order: u32,
    pub diff: u32,
    pub max_rel_err: f64,
    pub t_phistar: f64,
    pub t_boundary: f64,
    pub t_harmonic: f64,
}

impl ConvergenceRow {
    pub fn csv(&self) -> String {
        let panels = if self.panels.iter().all(|&m| m == self.panels[0]) {
            self.panels[0].to_string()
        } else {
            self.panels.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("x")
        };
        format!(
            "{},{panels},{},{},{},{},{},{}",
            sci(self.h),
            self.order,
            self.diff,
            sci(self.max_rel_err),
            sci(self.t_phistar),
            sci(self.t_boundary),
            sci(self.t_harmonic)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log(err)` against `log(h)` over the fit window.
    pub slope: Option<f64>,
}

impl ConvergenceStudy {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CONVERGENCE_HEADER}")?;
        for r in &self.rows {
            writeln!(w, "{}", r.csv())?;
        }
        Ok(())
    }
}

/// Least-squares slope of `log y` against `log x`; `None` with fewer than two
/// distinct points.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    if lx.len() < 2 {
        return None;
    }
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn relative_error(phi: &GridFunction, exact: &GridFunction) -> Result<f64> {
    Ok(max_norm_difference(phi, exact)? / exact.max_abs())
}

fn secs(d: std::time::Duration) -> f64 {
    d.as_secs_f64()
}

pub fn run_convergence_study(spec: &StudySpec) -> Result<ConvergenceStudy> {
    spec.validate()?;
    let bump = spec.bump.build()?;
    let f = |x: &[f64]| bump.evaluate(x);
    let config = spec.solver_config(spec.threads[0]);
    let mut rows = Vec::with_capacity(spec.grids.len());
    for panels in &spec.grids {
        let grid = spec.grid(panels)?;
        let (phi, report) = solve(Density::Callable(&f), &grid, &config)
            .with_context(|| format!("solve with panels {panels:?}"))?;
        let exact = GridFunction::from_fn(&grid, |x| bump.analytic_potential(x));
        rows.push(ConvergenceRow {
            h: grid.mesh().iter().fold(0.0f64, |m, &h| m.max(h)),
            panels: panels.clone(),
            order: spec.order.as_u32(),
            diff: spec.bump.differentiability(),
            max_rel_err: relative_error(&phi, &exact)?,
            t_phistar: secs(report.phi_star_time),
            t_boundary: secs(report.boundary_time),
            t_harmonic: secs(report.harmonic_time),
        });
    }
    let lo = spec.fit_min_h.unwrap_or(0.0) * (1.0 - 1e-9);
    let hi = spec.fit_max_h.unwrap_or(f64::INFINITY) * (1.0 + 1e-9);
    let (h, e): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.h >= lo && r.h <= hi)
        .map(|r| (r.h, r.max_rel_err))
        .unzip();
    let slope = log_log_slope(&h, &e);
    Ok(ConvergenceStudy { rows, slope })
}

pub fn write_domain_csv<W: Write>(rows: &[(f64, f64)], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{DOMAIN_HEADER}")?;
    for (d, diff) in rows {
        writeln!(w, "{},{}", sci(*d), sci(*diff))?;
    }
    Ok(())
}

pub fn run_domain_study(spec: &StudySpec) -> Result<Vec<(f64, f64)>> {
    spec.validate()?;
    let bump = spec.bump.build()?;
    let f = |x: &[f64]| bump.evaluate(x);
    let grid = spec.grid(&spec.grids[0])?;
    Ok(domain_invariance_study(&f, &grid, &spec.d_values, &spec.solver_config(spec.threads[0]))?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreadRow {
    pub threads: usize,
    pub t_phistar: f64,
    pub t_boundary: f64,
    pub t_harmonic: f64,
    pub t_total: f64,
    pub speedup: f64,
}

pub fn write_threads_csv<W: Write>(rows: &[ThreadRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{THREADS_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.threads,
            sci(r.t_phistar),
            sci(r.t_boundary),
            sci(r.t_harmonic),
            sci(r.t_total),
            sci(r.speedup)
        )?;
    }
    Ok(())
}

/// Solves once per thread count; fails unless every solution is bitwise
/// identical to the first.
pub fn run_thread_benchmark(spec: &StudySpec) -> Result<Vec<ThreadRow>> {
    spec.validate()?;
    let grid = spec.grid(&spec.grids[0])?;
    let samples = load_density(spec, &grid)?;
    let mut reference: Option<(usize, GridFunction)> = None;
    let mut rows: Vec<ThreadRow> = Vec::with_capacity(spec.threads.len());
    for &t in &spec.threads {
        let (phi, report) = solve(Density::Samples(&samples), &grid, &spec.solver_config(t))?;
        match &reference {
            None => reference = Some((t, phi)),
            Some((t0, phi0)) => {
                let same = phi0.values().iter().zip(phi.values()).all(|(a, b)| a.to_bits() == b.to_bits());
                if !same {
                    bail!("solution with {t} threads differs from the one with {t0} threads");
                }
            }
        }
        let total = secs(report.total_time());
        let base = rows.first().map_or(total, |r| r.t_total);
        rows.push(ThreadRow {
            threads: t,
            t_phistar: secs(report.phi_star_time),
            t_boundary: secs(report.boundary_time),
            t_harmonic: secs(report.harmonic_time),
            t_total: total,
            speedup: if t == spec.threads[0] && rows.is_empty() { 1.0 } else { base / total },
        });
    }
    Ok(rows)
}

/// Density samples on `grid`: read from `--rho`, or the bump.
pub fn load_density(spec: &StudySpec, grid: &UniformGrid) -> Result<GridFunction> {
    match &spec.rho {
        Some(path) => {
            let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let rho = pgrid::read(std::io::BufReader::new(file))
                .with_context(|| format!("reading {}", path.display()))?;
            if rho.grid().dim() != spec.dim {
                bail!("{} holds a {}D grid, expected {}D", path.display(), rho.grid().dim(), spec.dim);
            }
            Ok(rho)
        }
        None => {
            let bump = spec.bump.build()?;
            Ok(GridFunction::from_fn(grid, |x| bump.evaluate(x)))
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub phi: GridFunction,
    pub report: SolveReport,
    /// Relative error against the exact potential when the density is the bump.
    pub max_rel_err: Option<f64>,
}

/// Single solve. With `--rho` the samples' own grid is used.
pub fn run_solve(spec: &StudySpec) -> Result<SolveOutcome> {
    spec.validate()?;
    let grid = spec.grid(&spec.grids[0])?;
    let rho = load_density(spec, &grid)?;
    let config = spec.solver_config(spec.threads[0]);
    let (phi, report) = solve(Density::Samples(&rho), rho.grid(), &config)?;
    let max_rel_err = if spec.rho.is_none() {
        let bump = spec.bump.build()?;
        let exact = GridFunction::from_fn(phi.grid(), |x| bump.analytic_potential(x));
        Some(relative_error(&phi, &exact)?)
    } else {
        None
    };
    Ok(SolveOutcome { phi, report, max_rel_err })
}

/// Node coordinates and values, one row per node.
pub fn write_grid_csv<W: Write>(f: &GridFunction, mut w: W) -> std::io::Result<()> {
    let g = f.grid();
    let names = ["x", "y", "z"];
    writeln!(w, "{},phi", names[..g.dim()].join(","))?;
    let shape = g.shape();
    let mut idx = vec![0usize; g.dim()];
    for v in f.values() {
        let coords: Vec<String> = (0..g.dim()).map(|s| sci(g.coord(s, idx[s]))).collect();
        writeln!(w, "{},{}", coords.join(","), sci(*v))?;
        for s in (0..idx.len()).rev() {
            idx[s] += 1;
            if idx[s] < shape[s] {
                break;
            }
            idx[s] = 0;
        }
    }
    Ok(())
}

pub fn write_solution<W: Write>(spec: &StudySpec, phi: &GridFunction, w: W) -> std::io::Result<()> {
    match spec.format {
        OutputFormat::Csv => write_grid_csv(phi, w),
        OutputFormat::Pgrid => {
            let enc = if spec.binary { DataEncoding::Binary } else { DataEncoding::Text };
            pgrid::write(w, phi, enc)
        }
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place only if `body` succeeds.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        body(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit<F>(path: Option<&Path>, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    match path {
        Some(p) => write_atomic(p, body),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{SpecArgs, StudyKind};

    fn small(kind: StudyKind, extra: SpecArgs) -> StudySpec {
        let args = SpecArgs {
            dim: Some(2),
            eps: Some(0.5),
            center: Some(vec![0.1, -0.1]),
            ..extra
        };
        StudySpec::from_args(kind, args).unwrap()
    }

    #[test]
    fn slope_of_power_law() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.powi(4)).collect();
        assert!((log_log_slope(&h, &e).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(log_log_slope(&[0.1], &[1.0]), None);
    }

    #[test]
    fn sci_has_seventeen_digits() {
        assert_eq!(sci(0.1), "1.0000000000000001e-1");
        assert_eq!(sci(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn convergence_rows_and_window() {
        let spec = small(
            StudyKind::Convergence,
            SpecArgs { panels: Some(vec![16, 24, 32]), fit_min_h: Some(0.07), ..Default::default() },
        );
        let study = run_convergence_study(&spec).unwrap();
        assert_eq!(study.rows.len(), 3);
        assert!(study.rows.windows(2).all(|w| w[1].max_rel_err < w[0].max_rel_err));
        let want = log_log_slope(
            &[study.rows[0].h, study.rows[1].h],
            &[study.rows[0].max_rel_err, study.rows[1].max_rel_err],
        );
        assert_eq!(study.slope, want);
        let mut buf = Vec::new();
        study.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CONVERGENCE_HEADER);
        assert!(text.lines().nth(1).unwrap().starts_with("1.2500000000000000e-1,16,6,6,"));
    }

    #[test]
    fn convergence_errors_are_reproducible_and_scale_free() {
        let spec = small(StudyKind::Convergence, SpecArgs { panels: Some(vec![16, 20]), ..Default::default() });
        let a = run_convergence_study(&spec).unwrap();
        let b = run_convergence_study(&spec).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.max_rel_err.to_bits(), y.max_rel_err.to_bits());
        }
    }

    #[test]
    fn domain_study_starts_at_zero() {
        let spec = small(
            StudyKind::Domain,
            SpecArgs { panels: Some(vec![20]), d_list: Some(vec![1.0, 1.2]), ..Default::default() },
        );
        let rows = run_domain_study(&spec).unwrap();
        assert_eq!(rows[0], (1.0, 0.0));
        assert!(rows[1].1 < 1e-3);
    }

    #[test]
    fn single_thread_speedup_is_one() {
        let spec = small(StudyKind::Threads, SpecArgs { panels: Some(vec![16]), ..Default::default() });
        let rows = run_thread_benchmark(&spec).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].speedup, 1.0);
        let spec = small(
            StudyKind::Threads,
            SpecArgs { panels: Some(vec![16]), threads: Some(vec![1, 2, 3]), ..Default::default() },
        );
        assert_eq!(run_thread_benchmark(&spec).unwrap().len(), 3);
    }

    #[test]
    fn atomic_write_leaves_nothing_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let err = write_atomic(&path, |w| {
            writeln!(w, "partial")?;
            Err(std::io::Error::other("boom"))
        });
        assert!(err.is_err());
        assert!(!path.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
        write_atomic(&path, |w| writeln!(w, "ok")).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "ok\n");
    }

    #[test]
    fn grid_csv_lists_every_node() {
        let g = UniformGrid::cube(2, 0.0, 1.0, 2).unwrap();
        let f = GridFunction::from_fn(&g, |x| x[0] + 10.0 * x[1]);
        let mut buf = Vec::new();
        write_grid_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,phi");
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[2], "0.0000000000000000e0,5.0000000000000000e-1,5.0000000000000000e0");
    }
}
