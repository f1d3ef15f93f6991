//! Study parameters from flags and `key = value` config files.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use fspoisson::bump::{reference_center_3d, PolyBump, REFERENCE_EPSILON};
use fspoisson::harmonic::{HarmonicOrder, SIXTH_ORDER_MIN_PANELS};
use fspoisson::solver::{scaled_grid, SolverConfig};
use fspoisson::UniformGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Solve,
    Convergence,
    Domain,
    Threads,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Pgrid,
}

/// Raw, optional parameters. Flags and config files both fill one of these;
/// flags win when the two are merged.
#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// key = value file with any of the options below (without dashes)
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Bounds per axis: a b [c d [e f]]; a single pair applies to every axis
    #[arg(long, num_args = 2..=6, allow_negative_numbers = true)]
    pub domain: Option<Vec<f64>>,
    /// Panels per axis, or a sequence of uniform panel counts for convergence studies
    #[arg(long, num_args = 1..)]
    pub panels: Option<Vec<usize>>,
    /// Mesh widths; each must divide every side length
    #[arg(long = "h-list", num_args = 1..)]
    pub h_list: Option<Vec<f64>>,
    #[arg(long, value_parser = ["4", "6"])]
    pub order: Option<String>,
    /// Continuous derivatives of the test density (p = diff + 1)
    #[arg(long, conflicts_with = "p")]
    pub diff: Option<u32>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, num_args = 1..=3, allow_negative_numbers = true)]
    pub center: Option<Vec<f64>>,
    #[arg(long = "padding-panels")]
    pub padding_panels: Option<usize>,
    /// Round padded panel counts up to 7-smooth integers
    #[arg(long = "fft-friendly")]
    pub fft_friendly: Option<bool>,
    #[arg(long, num_args = 1..)]
    pub threads: Option<Vec<usize>>,
    /// Domain scale factors for domain studies
    #[arg(long = "d-list", num_args = 1..)]
    pub d_list: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write PGRID data as little-endian binary
    #[arg(long = "binary")]
    pub binary: Option<bool>,
    #[arg(long = "fit-min-h")]
    pub fit_min_h: Option<f64>,
    #[arg(long = "fit-max-h")]
    pub fit_max_h: Option<f64>,
    /// Density samples (PGRID) instead of the polynomial bump
    #[arg(long)]
    pub rho: Option<PathBuf>,
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|w| !w.is_empty())
        .map(|w| w.parse().map_err(|_| anyhow!("{key}: cannot parse {w:?}")))
        .collect()
}

fn one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    let mut v = list(key, value)?;
    if v.len() != 1 {
        bail!("{key}: expected a single value, got {value:?}");
    }
    Ok(v.remove(0))
}

impl SpecArgs {
    pub fn parse_config(text: &str, base_dir: &Path) -> Result<Self> {
        let mut out = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", n + 1))?;
            out.set(key.trim(), value.trim(), base_dir)
                .with_context(|| format!("line {}", n + 1))?;
        }
        Ok(out)
    }

    fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> Result<()> {
        let path = || base_dir.join(value);
        match key {
            "dim" => self.dim = Some(one(key, value)?),
            "domain" => self.domain = Some(list(key, value)?),
            "panels" => self.panels = Some(list(key, value)?),
            "h-list" | "h_list" => self.h_list = Some(list(key, value)?),
            "order" => self.order = Some(one::<u32>(key, value)?.to_string()),
            "diff" => self.diff = Some(one(key, value)?),
            "p" => self.p = Some(one(key, value)?),
            "eps" => self.eps = Some(one(key, value)?),
            "center" => self.center = Some(list(key, value)?),
            "padding-panels" | "padding_panels" => self.padding_panels = Some(one(key, value)?),
            "fft-friendly" | "fft_friendly" => self.fft_friendly = Some(one(key, value)?),
            "threads" => self.threads = Some(list(key, value)?),
            "d-list" | "d_list" => self.d_list = Some(list(key, value)?),
            "out" => self.out = Some(path()),
            "format" => {
                self.format = Some(OutputFormat::from_str(value, true).map_err(|e| anyhow!("format: {e}"))?)
            }
            "binary" => self.binary = Some(one(key, value)?),
            "fit-min-h" | "fit_min_h" => self.fit_min_h = Some(one(key, value)?),
            "fit-max-h" | "fit_max_h" => self.fit_max_h = Some(one(key, value)?),
            "rho" => self.rho = Some(path()),
            other => bail!("unknown key {other:?}"),
        }
        Ok(())
    }

    /// Fields set here take precedence over `fallback`.
    pub fn merge(self, fallback: SpecArgs) -> SpecArgs {
        SpecArgs {
            config: self.config.or(fallback.config),
            dim: self.dim.or(fallback.dim),
            domain: self.domain.or(fallback.domain),
            panels: self.panels.or(fallback.panels),
            h_list: self.h_list.or(fallback.h_list),
            order: self.order.or(fallback.order),
            // diff and p name the same quantity
            diff: if self.p.is_some() { self.diff } else { self.diff.or(fallback.diff) },
            p: if self.diff.is_some() { self.p } else { self.p.or(fallback.p) },
            eps: self.eps.or(fallback.eps),
            center: self.center.or(fallback.center),
            padding_panels: self.padding_panels.or(fallback.padding_panels),
            fft_friendly: self.fft_friendly.or(fallback.fft_friendly),
            threads: self.threads.or(fallback.threads),
            d_list: self.d_list.or(fallback.d_list),
            out: self.out.or(fallback.out),
            format: self.format.or(fallback.format),
            binary: self.binary.or(fallback.binary),
            fit_min_h: self.fit_min_h.or(fallback.fit_min_h),
            fit_max_h: self.fit_max_h.or(fallback.fit_max_h),
            rho: self.rho.or(fallback.rho),
        }
    }

    /// Merges in the config file named by `--config`, if any.
    pub fn with_config_file(self) -> Result<SpecArgs> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let file = Self::parse_config(&text, base).with_context(|| format!("in {}", path.display()))?;
        Ok(self.merge(file))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BumpSpec {
    pub epsilon: f64,
    pub p: u32,
    pub center: Vec<f64>,
}

impl BumpSpec {
    pub fn differentiability(&self) -> u32 {
        self.p - 1
    }

    pub fn build(&self) -> Result<PolyBump> {
        Ok(PolyBump::new(self.center.len(), self.epsilon, self.p, &self.center)?)
    }
}

/// A validated study description.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub kind: StudyKind,
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Panel counts per axis, one entry per grid in the study.
    pub grids: Vec<Vec<usize>>,
    pub order: HarmonicOrder,
    pub bump: BumpSpec,
    pub padding_panels: usize,
    pub fft_friendly: bool,
    pub threads: Vec<usize>,
    pub d_values: Vec<f64>,
    pub fit_min_h: Option<f64>,
    pub fit_max_h: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub binary: bool,
    pub rho: Option<PathBuf>,
}

impl StudySpec {
    pub fn from_args(kind: StudyKind, args: SpecArgs) -> Result<Self> {
        let dim = args.dim.unwrap_or(3);
        if !(1..=3).contains(&dim) {
            bail!("dim must be 1, 2 or 3, got {dim}");
        }
        let domain = args.domain.unwrap_or_else(|| vec![-1.0, 1.0]);
        let (lower, upper): (Vec<f64>, Vec<f64>) = match domain.len() {
            2 => (vec![domain[0]; dim], vec![domain[1]; dim]),
            n if n == 2 * dim => (
                domain.iter().step_by(2).copied().collect(),
                domain.iter().skip(1).step_by(2).copied().collect(),
            ),
            n => bail!("--domain needs 2 or {} numbers for dim {dim}, got {n}", 2 * dim),
        };

        let grids = match (args.panels, args.h_list) {
            (Some(_), Some(_)) => bail!("give either --panels or --h-list, not both"),
            (None, Some(hs)) => hs
                .iter()
                .map(|&h| panels_for_h(&lower, &upper, h))
                .collect::<Result<_>>()?,
            (Some(p), None) if kind != StudyKind::Convergence && p.len() == dim && dim > 1 => vec![p],
            (Some(p), None) => p.iter().map(|&m| vec![m; dim]).collect(),
            (None, None) => vec![vec![32; dim]],
        };
        if grids.is_empty() {
            bail!("empty panel sequence");
        }
        if kind != StudyKind::Convergence && grids.len() > 1 {
            bail!("this study takes a single grid, got {} panel counts", grids.len());
        }

        let order = match args.order.as_deref() {
            None | Some("6") => HarmonicOrder::Sixth,
            Some("4") => HarmonicOrder::Fourth,
            Some(o) => bail!("order must be 4 or 6, got {o}"),
        };
        let p = match (args.diff, args.p) {
            (Some(k), None) => k + 1,
            (None, Some(p)) => p,
            (None, None) => 7,
            (Some(_), Some(_)) => bail!("give either --diff or --p, not both"),
        };
        let center = args
            .center
            .unwrap_or_else(|| reference_center_3d()[..dim].to_vec());
        if center.len() != dim {
            bail!("--center needs {dim} coordinates, got {}", center.len());
        }
        let bump = BumpSpec {
            epsilon: args.eps.unwrap_or(REFERENCE_EPSILON),
            p,
            center,
        };
        let spec = Self {
            kind,
            dim,
            lower,
            upper,
            grids,
            order,
            bump,
            padding_panels: args.padding_panels.unwrap_or(0),
            fft_friendly: args.fft_friendly.unwrap_or(false),
            threads: args.threads.unwrap_or_else(|| vec![1]),
            d_values: args.d_list.unwrap_or_else(|| vec![1.0, 1.2, 1.6, 2.0]),
            fit_min_h: args.fit_min_h,
            fit_max_h: args.fit_max_h,
            out: args.out,
            format: args.format.unwrap_or_default(),
            binary: args.binary.unwrap_or(false),
            rho: args.rho,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<()> {
        if self.threads.is_empty() || self.threads.contains(&0) {
            bail!("thread counts must be positive, got {:?}", self.threads);
        }
        if self.d_values.is_empty() {
            bail!("empty D sequence");
        }
        if self.bump.p == 0 {
            bail!("p must be at least 1");
        }
        if self.rho.is_none() {
            self.bump.build()?;
            for s in 0..self.dim {
                let c = self.bump.center[s];
                if c - self.bump.epsilon < self.lower[s] || c + self.bump.epsilon > self.upper[s] {
                    bail!(
                        "density support [{}, {}] on axis {s} leaves the domain [{}, {}]",
                        c - self.bump.epsilon,
                        c + self.bump.epsilon,
                        self.lower[s],
                        self.upper[s]
                    );
                }
            }
        }
        let config = self.solver_config(1);
        for panels in &self.grids {
            let grid = self.grid(panels)?;
            let padded = fspoisson::solver::pad_domain(&grid, &config)?;
            if self.order == HarmonicOrder::Sixth && self.dim > 1 {
                if let Some(m) = padded.panels().iter().find(|&&m| m < SIXTH_ORDER_MIN_PANELS) {
                    bail!("order 6 needs at least {SIXTH_ORDER_MIN_PANELS} panels per axis, got {m}");
                }
            }
        }
        if self.kind == StudyKind::Domain {
            let base = self.grid(&self.grids[0])?;
            for &d in &self.d_values {
                scaled_grid(&base, d).map_err(|e| anyhow!("D = {d}: {e}"))?;
            }
        }
        Ok(())
    }

    pub fn grid(&self, panels: &[usize]) -> Result<UniformGrid> {
        Ok(UniformGrid::new(&self.lower, &self.upper, panels)?)
    }

    pub fn solver_config(&self, threads: usize) -> SolverConfig {
        SolverConfig {
            order: self.order,
            padding_panels: self.padding_panels,
            fft_friendly_expansion: self.fft_friendly,
            thread_count: threads,
        }
    }
}

fn panels_for_h(lower: &[f64], upper: &[f64], h: f64) -> Result<Vec<usize>> {
    if !(h > 0.0 && h.is_finite()) {
        bail!("h values must be positive, got {h}");
    }
    lower
        .iter()
        .zip(upper)
        .map(|(a, b)| {
            let m = (b - a) / h;
            let r = m.round();
            if r < 1.0 || (m - r).abs() > 1e-9 * m {
                bail!("h = {h} does not divide the side length {}", b - a);
            }
            Ok(r as usize)
        })
        .collect()
}
