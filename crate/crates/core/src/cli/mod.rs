//! Command-line front end: JSON configuration in, CSV tables out.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
//! failures (with a JSON diagnostic on stderr).

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

pub use config::{
    schema_json, CommandName, CommandParams, FunctionPreset, OperatorConfig, RouteName, RunConfig,
    Solver,
};

use crate::error::{Error, Result};
use crate::evolution::{composition_check, pde_residual, solve_cauchy, Route};
use crate::heat_kernel::{
    chapman_kolmogorov_check, decay_bound_fit, fk_domination_probe, holder_probe, kernel_registry,
    perturbation_probe, HeatKernel, HolderSample, KernelContext, KernelSample,
};
use crate::log_calculus::{frullani_table, pointwise_log};
use crate::numerics::qmc::unit_ball_points;
use crate::numerics::{Field, Grid, QuadratureSpec};
use crate::operator::{DiscreteOperator, SpectralBasis, SpectralData, TensorSpectral};
use crate::potential::{build_potential, rho_comparison_probe, Potential, RhoSolver};
use crate::probe::BoundProbeReport;
use crate::spectral::{apply_spectral, apply_spectral_complex, build_function, Log};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "schrolog",
    version,
    about = "Logarithmic Schrödinger operator experiments"
)]
pub struct Cli {
    pub command: CommandName,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (default: the config's `output`, else `.`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub verbose: bool,
}

/// A failure tagged with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

impl Failure {
    pub fn diagnostic(&self, command: &str) -> String {
        json!({
            "status": "error",
            "command": command,
            "exit_code": self.code,
            "kind": error_kind(&self.error),
            "message": self.error.to_string(),
        })
        .to_string()
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidGrid(_) => "invalid_grid",
        Error::NonFinite(_) => "non_finite",
        Error::GridMismatch => "grid_mismatch",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::QuadratureNonConvergence { .. } => "quadrature_non_convergence",
        Error::Domain(_) => "domain",
        Error::ZeroBallAverage { .. } => "zero_ball_average",
        Error::UnboundedCriticalRadius => "unbounded_critical_radius",
        Error::CriticalRadiusBelowRange(_) => "critical_radius_below_range",
        Error::SizeCap { .. } => "size_cap",
        Error::Eigensolver(_) => "eigensolver",
        Error::DiagonalSingularity => "diagonal_singularity",
        Error::DegenerateFit(_) => "degenerate_fit",
        Error::UnknownName { .. } => "unknown_name",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
        Error::Csv(_) => "csv",
        Error::Json(_) => "json",
    }
}

fn config_failure(error: Error) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        error,
    }
}

fn run_failure(error: Error) -> Failure {
    let code = match error {
        Error::Config(_) | Error::UnknownName { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    };
    Failure { code, error }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Runs a parsed command line; returns the files written.
pub fn run(cli: &Cli) -> std::result::Result<Vec<PathBuf>, Failure> {
    let cfg = load_config(&cli.config).map_err(config_failure)?;
    if let Some(c) = cfg.command {
        if c != cli.command {
            return Err(config_failure(Error::Config(format!(
                "config is for `{}`, command line asks for `{}`",
                c.as_str(),
                cli.command.as_str()
            ))));
        }
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let base = cli
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let mut ctx = Context::new(cfg, cli.seed, base, cli.verbose).map_err(config_failure)?;
    fs::create_dir_all(&out).map_err(|e| run_failure(e.into()))?;
    let tables = ctx.execute(cli.command).map_err(run_failure)?;
    let mut written = Vec::new();
    for t in tables {
        let path = out.join(&t.name);
        t.write(&path).map_err(run_failure)?;
        ctx.log(&format!("wrote {}", path.display()));
        written.push(path);
    }
    Ok(written)
}

/// A CSV table; numbers are stored pre-formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: Vec<String>) -> Self {
        Self {
            name: name.to_string(),
            header,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn coord_header(prefix: &str, d: usize) -> Vec<String> {
    (0..d).map(|j| format!("{prefix}{j}")).collect()
}

fn coords(x: &[f64]) -> Vec<String> {
    x.iter().map(|&v| num(v)).collect()
}

enum Basis {
    Dense(Arc<SpectralData>),
    Tensor(Arc<TensorSpectral>),
}

struct Context {
    cfg: RunConfig,
    grid: Grid,
    potential: Potential,
    seed: u64,
    base: PathBuf,
    verbose: bool,
    start: Instant,
    basis: Option<Basis>,
}

impl Context {
    fn new(cfg: RunConfig, seed: Option<u64>, base: PathBuf, verbose: bool) -> Result<Self> {
        let grid = cfg.operator.grid()?;
        let potential = build_potential(&cfg.operator.potential, grid.dim())
            .map_err(|e| Error::Config(e.to_string()))?;
        if cfg.operator.solver == Solver::Tensor && !potential.is_separable() {
            return Err(Error::Config(format!(
                "potential `{}` is not separable",
                potential.name()
            )));
        }
        let seed = seed.or(cfg.seed).unwrap_or(0);
        Ok(Self {
            cfg,
            grid,
            potential,
            seed,
            base,
            verbose,
            start: Instant::now(),
            basis: None,
        })
    }

    fn log(&self, msg: &str) {
        if self.verbose {
            eprintln!("[{:8.3}s] {msg}", self.start.elapsed().as_secs_f64());
        }
    }

    fn params(&self) -> &CommandParams {
        &self.cfg.params
    }

    fn quadrature(&self) -> QuadratureSpec {
        self.cfg
            .quadrature
            .unwrap_or_else(|| QuadratureSpec::with_tol(1e-10))
    }

    fn use_tensor(&self) -> bool {
        match self.cfg.operator.solver {
            Solver::Tensor => true,
            Solver::Dense => false,
            Solver::Auto => self.grid.dim() > 1 && self.potential.is_separable(),
        }
    }

    fn basis(&mut self) -> Result<&dyn SpectralBasis> {
        if self.basis.is_none() {
            self.log(&format!("eigendecomposition on {} nodes", self.grid.len()));
            let b = if self.use_tensor() {
                Basis::Tensor(Arc::new(TensorSpectral::from_separable(
                    &self.grid,
                    &self.potential,
                )?))
            } else {
                let op = DiscreteOperator::assemble(&self.grid, &self.potential)?;
                Basis::Dense(Arc::new(op.eigendecompose()?))
            };
            self.basis = Some(b);
            self.log("eigendecomposition done");
        }
        Ok(match self.basis.as_ref().unwrap() {
            Basis::Dense(s) => s.as_ref(),
            Basis::Tensor(t) => t.as_ref(),
        })
    }

    fn kernel(&mut self) -> Result<Arc<dyn HeatKernel>> {
        let default = if self.use_tensor() { "tensor" } else { "eigen" };
        let spec = self
            .params()
            .kernel
            .clone()
            .unwrap_or_else(|| default.to_string());
        let name = crate::registry::split_spec(&spec).0.to_string();
        let mut kctx = KernelContext {
            dim: self.grid.dim(),
            ..Default::default()
        };
        if name == "eigen" || name == "tensor" {
            self.basis()?;
            match self.basis.as_ref().unwrap() {
                Basis::Dense(s) => kctx.spectral = Some(s.clone() as Arc<dyn SpectralBasis>),
                Basis::Tensor(t) => {
                    kctx.spectral = Some(t.clone() as Arc<dyn SpectralBasis>);
                    kctx.axis_factors = Some(t.factors().to_vec());
                }
            }
        }
        kernel_registry().build(&kctx, &spec)
    }

    fn input(&self) -> Result<Field> {
        let preset = self
            .cfg
            .function
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs `function`".into()))?;
        preset.field(&self.grid, &self.base)
    }

    fn center(&self) -> Vec<f64> {
        self.grid
            .lo()
            .iter()
            .zip(self.grid.hi())
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    fn points(&self) -> Result<Vec<Vec<f64>>> {
        let pts = self
            .params()
            .points
            .clone()
            .unwrap_or_else(|| vec![self.center()]);
        for p in &pts {
            if p.len() != self.grid.dim() {
                return Err(Error::Config(format!(
                    "point {p:?} does not have {} coordinates",
                    self.grid.dim()
                )));
            }
        }
        Ok(pts)
    }

    fn snap(&self, x: &[f64]) -> Vec<f64> {
        self.grid
            .point(self.grid.flat_index(&self.grid.nearest_index(x)))
    }

    fn rho_solver(&self) -> RhoSolver {
        RhoSolver {
            tol: self.params().rho_tol.unwrap_or(1e-8),
            seed: self.seed,
            ..RhoSolver::default()
        }
    }

    fn rho(&self, x: &[f64]) -> Result<f64> {
        if let Some(r) = self.potential.known_rho(x) {
            return Ok(r);
        }
        self.rho_solver().solve(&self.potential, x)
    }

    fn execute(&mut self, cmd: CommandName) -> Result<Vec<Table>> {
        self.log(&format!("running {}", cmd.as_str()));
        match cmd {
            CommandName::Spectrum => self.spectrum(),
            CommandName::Rho => self.rho_cmd(),
            CommandName::Apply => self.apply(),
            CommandName::Frullani => self.frullani(),
            CommandName::LogPointwise => self.log_pointwise(),
            CommandName::KernelDump => self.kernel_dump(),
            CommandName::Cauchy => self.cauchy(),
            CommandName::Probes => self.probes(),
        }
    }

    /// Sorted harmonic-oscillator levels `Σ_j (2α_j + 1)`.
    fn harmonic_levels(d: usize, count: usize) -> Vec<f64> {
        let kmax = count;
        let mut levels = Vec::new();
        let mut idx = vec![0usize; d];
        loop {
            let s: usize = idx.iter().sum();
            if s <= kmax {
                levels.push((2 * s + d) as f64);
            }
            let mut j = 0;
            loop {
                if j == d {
                    levels.sort_by(f64::total_cmp);
                    levels.truncate(count);
                    return levels;
                }
                idx[j] += 1;
                if idx[j] <= kmax {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
        }
    }

    fn spectrum(&mut self) -> Result<Vec<Table>> {
        let count = self.params().count.unwrap_or(40);
        let reference = (self.potential.name() == "harmonic")
            .then(|| Self::harmonic_levels(self.grid.dim(), count));
        let basis = self.basis()?;
        let mut lams = basis.eigenvalues().to_vec();
        lams.sort_by(f64::total_cmp);
        let mut t = Table::new(
            "spectrum.csv",
            ["k", "eigenvalue", "reference", "rel_error"]
                .map(String::from)
                .to_vec(),
        );
        for (k, &l) in lams.iter().take(count).enumerate() {
            let (r, e) = match reference.as_ref().and_then(|r| r.get(k)) {
                Some(&r) => (num(r), num((l - r).abs() / r)),
                None => (String::new(), String::new()),
            };
            t.push(vec![(k + 1).to_string(), num(l), r, e]);
        }
        Ok(vec![t])
    }

    fn rho_cmd(&mut self) -> Result<Vec<Table>> {
        let d = self.grid.dim();
        let pts = self.points()?;
        let numeric = d >= 3;
        let solver = RhoSolver {
            prefer_closed_form: false,
            ..self.rho_solver()
        };
        let mut header = coord_header("x", d);
        header.extend(["rho", "closed_form", "rel_error"].map(String::from));
        let mut t = Table::new("rho.csv", header);
        for x in &pts {
            let closed = self.potential.known_rho(x);
            let r = if numeric {
                solver.solve(&self.potential, x)?
            } else {
                closed.ok_or_else(|| {
                    Error::Domain(format!("no critical radius available in dimension {d}"))
                })?
            };
            let mut row = coords(x);
            row.push(num(r));
            match closed {
                Some(c) => {
                    row.push(num(c));
                    row.push(num((r - c).abs() / c));
                }
                None => row.extend([String::new(), String::new()]),
            }
            t.push(row);
        }
        let mut tables = vec![t];
        if numeric {
            let n = self.params().samples.unwrap_or(200);
            let unit = unit_ball_points(d, n, self.seed);
            let mut pairs = Vec::with_capacity(n);
            for (i, p) in unit.iter().enumerate() {
                let x = &pts[i % pts.len()];
                let rx = solver.solve(&self.potential, x)?;
                let y: Vec<f64> = x.iter().zip(p).map(|(a, b)| a + rx * b).collect();
                pairs.push((x.clone(), y));
            }
            let report = rho_comparison_probe(&self.potential, &pairs, &solver)?;
            tables.push(report_table("rho_compare.csv", &[report]));
        }
        Ok(tables)
    }

    fn apply(&mut self) -> Result<Vec<Table>> {
        let f = self.input()?;
        let spec = self
            .params()
            .function
            .clone()
            .unwrap_or_else(|| "log".into());
        let phi = build_function(&spec).map_err(|e| Error::Config(e.to_string()))?;
        let grid = self.grid.clone();
        let basis = self.basis()?;
        let mut header = coord_header("x", grid.dim());
        header.push("f".into());
        let mut t;
        if phi.is_real() {
            let out = apply_spectral(basis, phi.as_ref(), &f)?;
            header.push("value".into());
            t = Table::new("apply.csv", header);
            for (k, (a, b)) in f.values().iter().zip(out.values()).enumerate() {
                let mut row = coords(&grid.point(k));
                row.extend([num(*a), num(*b)]);
                t.push(row);
            }
        } else {
            let out = apply_spectral_complex(basis, phi.as_ref(), &f.to_complex())?;
            header.extend(["re".to_string(), "im".to_string()]);
            t = Table::new("apply.csv", header);
            for (k, (a, b)) in f.values().iter().zip(out.values()).enumerate() {
                let mut row = coords(&grid.point(k));
                row.extend([num(*a), num(b.re), num(b.im)]);
                t.push(row);
            }
        }
        Ok(vec![t])
    }

    fn frullani(&mut self) -> Result<Vec<Table>> {
        let f = self.input()?;
        let ms = self
            .params()
            .m_values
            .clone()
            .unwrap_or_else(|| vec![1e2, 1e3, 1e4, 1e5, 1e6]);
        let basis = self.basis()?;
        let log_f = apply_spectral(basis, &Log, &f)?;
        let table = frullani_table(basis, &f, &ms)?;
        let mut t = Table::new(
            "frullani.csv",
            ["m", "l2_error", "step"].map(String::from).to_vec(),
        );
        for (i, (m, out)) in table.iter().enumerate() {
            let step = if i == 0 {
                String::new()
            } else {
                num(out.sub(&table[i - 1].1)?.l2_norm())
            };
            t.push(vec![num(*m), num(out.sub(&log_f)?.l2_norm()), step]);
        }
        Ok(vec![t])
    }

    fn log_pointwise(&mut self) -> Result<Vec<Table>> {
        let f = self.input()?;
        let radii = self.params().radii.clone().unwrap_or_else(|| vec![1.0]);
        let pts: Vec<Vec<f64>> = self.points()?.iter().map(|x| self.snap(x)).collect();
        let spec = self.quadrature();
        let ev = self.kernel()?;
        let rhos = pts
            .iter()
            .map(|x| self.rho(x))
            .collect::<Result<Vec<_>>>()?;
        let oracle = apply_spectral(self.basis()?, &Log, &f)?;
        let mut header = coord_header("x", self.grid.dim());
        header.extend(
            [
                "r",
                "rho",
                "pointwise",
                "spectral",
                "abs_error",
                "local",
                "far",
                "k_term",
                "k_value",
            ]
            .map(String::from),
        );
        let mut t = Table::new("log_pointwise.csv", header);
        for (x, &rho) in pts.iter().zip(&rhos) {
            let exact = oracle
                .at(x)
                .ok_or_else(|| Error::Domain(format!("{x:?} is not a grid node")))?;
            for &r in &radii {
                self.log(&format!("pointwise log at {x:?}, r = {r}"));
                let res = pointwise_log(ev.as_ref(), rho, &f, x, r, &spec)?;
                let mut row = coords(x);
                row.extend(
                    [
                        r,
                        rho,
                        res.value,
                        exact,
                        (res.value - exact).abs(),
                        res.local_term,
                        res.far_term,
                        res.k_term,
                        res.k.k_value,
                    ]
                    .map(num),
                );
                t.push(row);
            }
        }
        Ok(vec![t])
    }

    fn kernel_dump(&mut self) -> Result<Vec<Table>> {
        let times = self
            .params()
            .times
            .clone()
            .unwrap_or_else(|| vec![0.1, 1.0]);
        let pts = self.points()?;
        let ev = self.kernel()?;
        let d = self.grid.dim();
        let mut header = vec!["t".to_string()];
        header.extend(coord_header("x", d));
        header.extend(coord_header("y", d));
        header.push("kernel".into());
        let mut t = Table::new("kernel_dump.csv", header);
        for &tt in &times {
            for x in &pts {
                let row = ev.row(tt, x, &self.grid)?;
                for (k, v) in row.iter().enumerate() {
                    let mut r = vec![num(tt)];
                    r.extend(coords(x));
                    r.extend(coords(&self.grid.point(k)));
                    r.push(num(*v));
                    t.push(r);
                }
            }
        }
        Ok(vec![t])
    }

    fn cauchy(&mut self) -> Result<Vec<Table>> {
        let f = self.input()?;
        let times = self
            .params()
            .times
            .clone()
            .unwrap_or_else(|| vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        let dt = self.params().dt.unwrap_or(1e-3);
        let theta = self.params().theta;
        let route = match self.params().route.unwrap_or_default() {
            RouteName::Quadrature => Route::Quadrature,
            RouteName::Spectral => Route::Spectral,
        };
        let grid = self.grid.clone();
        let basis = self.basis()?;
        let lam1 = basis
            .eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let mut header = coord_header("x", grid.dim());
        header.push("f".into());
        let mut fields = Vec::new();
        let mut res = Table::new(
            "cauchy_residuals.csv",
            [
                "t",
                "pde_residual",
                "composition",
                "spectral_gap",
                "l2_norm",
                "l2_bound",
                "warning",
            ]
            .map(String::from)
            .to_vec(),
        );
        for &t in &times {
            let step = solve_cauchy(basis, &f, t, route, theta)?;
            header.push(format!("u_t{t}"));
            let h = (1.0 - t).min(t) / 2.0;
            res.push(vec![
                num(t),
                num(pde_residual(basis, &f, t, dt, route)?),
                num(composition_check(
                    basis,
                    &f,
                    t / 2.0,
                    h.min(t / 2.0),
                    route,
                )?),
                step.spectral_gap.map(num).unwrap_or_default(),
                num(step.field.l2_norm()),
                num(lam1.powf(-t) * f.l2_norm()),
                step.warning.clone().unwrap_or_default(),
            ]);
            fields.push(step.field);
        }
        let mut series = Table::new("cauchy.csv", header);
        for k in 0..grid.len() {
            let mut row = coords(&grid.point(k));
            row.push(num(f.values()[k]));
            row.extend(fields.iter().map(|u| num(u.values()[k])));
            series.push(row);
        }
        Ok(vec![series, res])
    }

    fn probes(&mut self) -> Result<Vec<Table>> {
        let d = self.grid.dim();
        let n = self.params().samples.unwrap_or(200);
        let times = self
            .params()
            .times
            .clone()
            .unwrap_or_else(|| vec![0.05, 0.1, 0.5, 1.0]);
        let ev = self.kernel()?;
        let c = self.center();
        let half = self
            .grid
            .lo()
            .iter()
            .zip(self.grid.hi())
            .map(|(a, b)| 0.5 * (b - a))
            .fold(f64::INFINITY, f64::min);
        let radius = 0.4 * half;
        let unit = unit_ball_points(d, 2 * n, self.seed);
        let at = |p: &[f64]| -> Vec<f64> { c.iter().zip(p).map(|(a, b)| a + radius * b).collect() };
        // y stays within 3√t of x so that grid kernels are sampled above
        // their round-off floor.
        let samples: Vec<KernelSample> = (0..n)
            .map(|i| {
                let t = times[i % times.len()];
                let x = at(&unit[i]);
                let y = x
                    .iter()
                    .zip(&unit[n + i])
                    .map(|(a, b)| a + 3.0 * t.sqrt() * b)
                    .collect();
                KernelSample { t, x, y }
            })
            .collect();
        let rho = |x: &[f64]| self.rho(x);
        let mut reports: Vec<BoundProbeReport> = Vec::new();
        self.log("Feynman-Kac domination");
        reports.push(fk_domination_probe(ev.as_ref(), &samples)?);
        self.log("decay bound");
        reports.push(decay_bound_fit(ev.as_ref(), &rho, &[0, 1, 2], &samples)?);
        self.log("Hölder bound");
        let holder: Vec<HolderSample> = samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let scale = 0.5f64.powi((i % 6) as i32) * 0.5 * s.t.sqrt();
                let mut h = vec![0.0; d];
                h[i % d] = scale;
                HolderSample {
                    t: s.t,
                    x: s.x.clone(),
                    h,
                    y: s.y.clone(),
                }
            })
            .collect();
        reports.push(holder_probe(ev.as_ref(), &rho, &holder)?);
        self.log("perturbation bound");
        let xc = self.snap(&c);
        let rho_c = self.rho(&xc)?;
        let t_grid: Vec<f64> = (0..6)
            .map(|k| rho_c * rho_c * 0.5f64.powi(k))
            .rev()
            .collect();
        let ys: Vec<Vec<f64>> = unit
            .iter()
            .take(20)
            .map(|p| xc.iter().zip(p).map(|(a, b)| a + 1.5 * rho_c * b).collect())
            .collect();
        reports.push(perturbation_probe(ev.as_ref(), &xc, rho_c, &t_grid, &ys)?);
        let mut tables = vec![report_table("probes.csv", &reports)];
        if self.basis.is_some() || ev.name() == "eigen" || ev.name() == "tensor" {
            self.log("Chapman-Kolmogorov");
            let mut ck = Table::new(
                "chapman_kolmogorov.csv",
                ["u", "s", "residual"].map(String::from).to_vec(),
            );
            for &u in &times {
                let x = self.snap(&samples[0].x);
                let y = self.snap(&samples[0].y);
                let r = chapman_kolmogorov_check(ev.as_ref(), &self.grid, u, u, &x, &y)?;
                ck.push(vec![num(u), num(u), num(r)]);
            }
            tables.push(ck);
        }
        Ok(tables)
    }
}

fn report_table(name: &str, reports: &[BoundProbeReport]) -> Table {
    let mut t = Table::new(name, ["bound", "key", "value"].map(String::from).to_vec());
    for r in reports {
        let id = serde_json::to_value(r.bound)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        for (k, v) in &r.constants {
            t.push(vec![id.clone(), k.clone(), num(*v)]);
        }
        t.push(vec![
            id.clone(),
            "max_violation".into(),
            num(r.max_violation),
        ]);
        t.push(vec![id, "samples".into(), r.samples.to_string()]);
    }
    t
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    match run(&cli) {
        Ok(_) => 0,
        Err(f) => {
            eprintln!("{}", f.diagnostic(cli.command.as_str()));
            f.code
        }
    }
}
