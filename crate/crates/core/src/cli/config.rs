use std::path::Path;

use schemars::JsonSchema;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::numerics::{Field, Grid, QuadratureSpec};
use crate::operator::{hermite_function, HermiteBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Spectrum,
    Rho,
    Apply,
    Frullani,
    LogPointwise,
    KernelDump,
    Cauchy,
    Probes,
}

impl CommandName {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Rho => "rho",
            Self::Apply => "apply",
            Self::Frullani => "frullani",
            Self::LogPointwise => "log-pointwise",
            Self::KernelDump => "kernel-dump",
            Self::Cauchy => "cauchy",
            Self::Probes => "probes",
        }
    }
}

/// A full run description, read from JSON.
#[derive(Debug, Clone, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must match the subcommand when both are given.
    #[serde(default)]
    pub command: Option<CommandName>,
    pub operator: OperatorConfig,
    #[serde(default)]
    pub function: Option<FunctionPreset>,
    #[serde(default)]
    pub quadrature: Option<QuadratureSpec>,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<String>,
    /// Scrambling seed for quasi-Monte-Carlo samples; `--seed` takes
    /// precedence.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: CommandParams,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Tensor-product eigendecomposition for separable potentials in d > 1,
    /// dense otherwise.
    #[default]
    Auto,
    Dense,
    Tensor,
}

#[derive(Debug, Clone, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    /// Lower box corner; a single value applies to every axis.
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Nodes per axis; its length sets the dimension.
    pub n: Vec<usize>,
    /// Potential preset, e.g. `harmonic`, `one`, `const:m2=2`.
    pub potential: String,
    #[serde(default)]
    pub solver: Solver,
}

impl OperatorConfig {
    pub fn grid(&self) -> Result<Grid> {
        let d = self.n.len();
        let axis = |v: &[f64], what: &str| -> Result<Vec<f64>> {
            match v.len() {
                1 => Ok(vec![v[0]; d]),
                l if l == d => Ok(v.to_vec()),
                l => Err(Error::Config(format!(
                    "`{what}` has {l} entries for a {d}-dimensional grid"
                ))),
            }
        };
        let lo = axis(&self.lo, "lo")?;
        let hi = axis(&self.hi, "hi")?;
        let extents: Vec<(f64, f64)> = lo.into_iter().zip(hi).collect();
        Grid::new(&extents, &self.n).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Initial data / input function on the grid.
#[derive(Debug, Clone, Deserialize, JsonSchema)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionPreset {
    /// `exp(-|x - center|² / width²)`.
    GaussianBump {
        center: Vec<f64>,
        width: f64,
    },
    /// Product Hermite function `h_α`.
    Hermite {
        alpha: Vec<usize>,
    },
    Constant {
        value: f64,
    },
    /// One value per grid node in flat (first axis slowest) order, read from
    /// the last column of a CSV file with a header row.
    Csv {
        path: String,
    },
}

impl FunctionPreset {
    pub fn field(&self, grid: &Grid, base: &Path) -> Result<Field> {
        let d = grid.dim();
        match self {
            Self::GaussianBump { center, width } => {
                if center.len() != d {
                    return Err(Error::Config(format!(
                        "bump center has {} entries, grid has {d} axes",
                        center.len()
                    )));
                }
                if !(*width > 0.0) {
                    return Err(Error::Config("bump width must be positive".into()));
                }
                Ok(Field::from_fn(grid, |x| {
                    let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                    (-r2 / (width * width)).exp()
                }))
            }
            Self::Hermite { alpha } => {
                if alpha.len() != d {
                    return Err(Error::Config(format!(
                        "hermite index has {} entries, grid has {d} axes",
                        alpha.len()
                    )));
                }
                let _ = HermiteBasis::new(d, alpha.iter().sum())?;
                Ok(Field::from_fn(grid, |x| {
                    alpha
                        .iter()
                        .zip(x)
                        .map(|(&a, &xi)| hermite_function(a, xi))
                        .product()
                }))
            }
            Self::Constant { value } => Ok(Field::constant(grid, *value)),
            Self::Csv { path } => {
                let p = base.join(path);
                let mut rdr = csv::Reader::from_path(&p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                let mut values = Vec::with_capacity(grid.len());
                for rec in rdr.records() {
                    let rec = rec.map_err(|e| Error::Config(e.to_string()))?;
                    let last = rec.iter().next_back().unwrap_or("");
                    values.push(last.trim().parse::<f64>().map_err(|_| {
                        Error::Config(format!("bad value `{last}` in {}", p.display()))
                    })?);
                }
                if values.len() != grid.len() {
                    return Err(Error::Config(format!(
                        "{} has {} values, grid has {} nodes",
                        p.display(),
                        values.len(),
                        grid.len()
                    )));
                }
                Field::new(grid.clone(), values)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum RouteName {
    #[default]
    Quadrature,
    Spectral,
}

/// Per-command settings. Unused fields are ignored by other commands.
#[derive(Debug, Clone, Default, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct CommandParams {
    /// `spectrum`: number of eigenvalues (default 40).
    pub count: Option<usize>,
    /// `rho`, `log-pointwise`, `kernel-dump`, `probes`: evaluation points.
    pub points: Option<Vec<Vec<f64>>>,
    /// `apply`: spectral function, e.g. `log`, `power:s=0.5`.
    pub function: Option<String>,
    /// `frullani`: truncations (default 1e2 … 1e6).
    pub m_values: Option<Vec<f64>>,
    /// `log-pointwise`: split radii (default [1]).
    pub radii: Option<Vec<f64>>,
    /// `log-pointwise`, `kernel-dump`, `probes`: heat kernel preset
    /// (default `eigen`, or `tensor` for tensor-product operators).
    pub kernel: Option<String>,
    /// `kernel-dump`, `cauchy`, `probes`: times.
    pub times: Option<Vec<f64>>,
    /// `cauchy`: centered-difference step (default 1e-3).
    pub dt: Option<f64>,
    /// `cauchy`: solution route.
    pub route: Option<RouteName>,
    /// `cauchy`: estimated Lipschitz exponent of the initial data.
    pub theta: Option<f64>,
    /// `rho`, `probes`: number of sampled points or pairs (default 200).
    pub samples: Option<usize>,
    /// `rho`: relative bisection tolerance (default 1e-8).
    pub rho_tol: Option<f64>,
}

pub fn schema_json() -> String {
    let schema = schemars::schema_for!(RunConfig);
    serde_json::to_string_pretty(&schema).expect("schema serializes") + "\n"
}
