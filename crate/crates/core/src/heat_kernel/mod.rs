//! Heat kernels `T_t^V(x, y)` of `e^{-t𝓛_V}` behind a common trait.
//!
//! Closed forms cover `V ≡ 0` (free Gaussian), `V ≡ m²` (shifted Gaussian)
//! and `V = |x|²` (Mehler). Any discrete operator gets an eigenexpansion
//! kernel, and separable operators in several dimensions are handled as
//! tensor products of one-dimensional kernels.

pub mod probes;

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::numerics::Grid;
use crate::operator::{SpectralBasis, SpectralData};
use crate::registry::Registry;

pub use probes::{
    chapman_kolmogorov_check, decay_bound_fit, fk_domination_probe, holder_probe,
    perturbation_probe, HolderSample, KernelSample,
};

pub trait HeatKernel: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    /// `T_t(x, y)`.
    fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64>;

    /// `T_t(1)(x) = ∫ T_t(x, y) dy`.
    fn mass(&self, t: f64, x: &[f64]) -> Result<f64>;

    /// `T_t(1)(x) - 1`, which small-`t` integrals divide by `t`.
    fn mass_deficit(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok(self.mass(t, x)? - 1.0)
    }

    /// `T_t(x, ·)` at every node of `grid`.
    fn row(&self, t: f64, x: &[f64], grid: &Grid) -> Result<Vec<f64>> {
        check_time(t)?;
        let mut out = Vec::with_capacity(grid.len());
        for y in grid.points() {
            out.push(self.eval(t, x, &y)?);
        }
        Ok(out)
    }

    /// Whether values come from an exact closed form.
    fn is_closed_form(&self) -> bool {
        false
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("heat kernel needs t > 0, got {t}")));
    }
    Ok(())
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `T_t(z) = (4πt)^{-d/2} e^{-|z|²/(4t)}`.
pub fn free_kernel(dim: usize, t: f64, r2: f64) -> f64 {
    (4.0 * PI * t).powf(-(dim as f64) / 2.0) * (-r2 / (4.0 * t)).exp()
}

/// `Π_j g(j, x_j, y_j)` at every node `y` of `grid` (first axis slowest).
fn separable_row(grid: &Grid, x: &[f64], g: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = vec![1.0];
    for (j, &xj) in x.iter().enumerate().take(grid.dim()) {
        let f: Vec<f64> = grid.axis_nodes(j).iter().map(|&y| g(xj, y)).collect();
        out = out
            .iter()
            .flat_map(|&a| f.iter().map(move |&b| a * b))
            .collect();
    }
    out
}

/// Heat kernel of `-Δ` on R^d.
#[derive(Debug, Clone, Copy)]
pub struct GaussianFree {
    pub dim: usize,
}

impl HeatKernel for GaussianFree {
    fn name(&self) -> String {
        "free".into()
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        check_time(t)?;
        check_dim(self.dim, x)?;
        check_dim(self.dim, y)?;
        Ok(free_kernel(self.dim, t, dist2(x, y)))
    }
    fn mass(&self, t: f64, _x: &[f64]) -> Result<f64> {
        check_time(t)?;
        Ok(1.0)
    }
    fn row(&self, t: f64, x: &[f64], grid: &Grid) -> Result<Vec<f64>> {
        check_time(t)?;
        check_dim(self.dim, x)?;
        check_dim_grid(self.dim, grid)?;
        Ok(separable_row(grid, x, |a, b| {
            free_kernel(1, t, (a - b) * (a - b))
        }))
    }
    fn is_closed_form(&self) -> bool {
        true
    }
}

/// Heat kernel of `-Δ + m²`: `e^{-m² t} T_t`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedGaussian {
    pub dim: usize,
    pub m2: f64,
}

impl HeatKernel for ShiftedGaussian {
    fn name(&self) -> String {
        format!("shifted:m2={}", self.m2)
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        check_time(t)?;
        check_dim(self.dim, x)?;
        check_dim(self.dim, y)?;
        Ok((-self.m2 * t).exp() * free_kernel(self.dim, t, dist2(x, y)))
    }
    fn mass(&self, t: f64, _x: &[f64]) -> Result<f64> {
        check_time(t)?;
        Ok((-self.m2 * t).exp())
    }
    fn mass_deficit(&self, t: f64, _x: &[f64]) -> Result<f64> {
        check_time(t)?;
        Ok((-self.m2 * t).exp_m1())
    }
    fn row(&self, t: f64, x: &[f64], grid: &Grid) -> Result<Vec<f64>> {
        check_time(t)?;
        check_dim(self.dim, x)?;
        check_dim_grid(self.dim, grid)?;
        let mut r = separable_row(grid, x, |a, b| free_kernel(1, t, (a - b) * (a - b)));
        let e = (-self.m2 * t).exp();
        r.iter_mut().for_each(|v| *v *= e);
        Ok(r)
    }
    fn is_closed_form(&self) -> bool {
        true
    }
}

/// Mehler kernel of `-Δ + |x|²`, a product over axes of
/// `(2π sinh 2t)^{-1/2} exp(-((x² + y²) cosh 2t - 2xy) / (2 sinh 2t))`.
#[derive(Debug, Clone, Copy)]
pub struct Mehler {
    pub dim: usize,
}

fn mehler_1d(t: f64, x: f64, y: f64) -> f64 {
    let s = (2.0 * t).sinh();
    let c = (2.0 * t).cosh();
    // (x² + y²) cosh - 2xy = (x - y)² cosh + 2xy (cosh - 1), stable as t -> 0
    let num = (x - y).powi(2) * c + 2.0 * x * y * (c - 1.0);
    (2.0 * PI * s).powf(-0.5) * (-num / (2.0 * s)).exp()
}

impl HeatKernel for Mehler {
    fn name(&self) -> String {
        "mehler".into()
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        check_time(t)?;
        check_dim(self.dim, x)?;
        check_dim(self.dim, y)?;
        Ok(x.iter().zip(y).map(|(&a, &b)| mehler_1d(t, a, b)).product())
    }
    fn mass(&self, t: f64, x: &[f64]) -> Result<f64> {
        check_time(t)?;
        check_dim(self.dim, x)?;
        let th = (2.0 * t).tanh();
        let c = (2.0 * t).cosh();
        Ok(x.iter()
            .map(|&a| c.powf(-0.5) * (-0.5 * a * a * th).exp())
            .product())
    }
    fn row(&self, t: f64, x: &[f64], grid: &Grid) -> Result<Vec<f64>> {
        check_time(t)?;
        check_dim(self.dim, x)?;
        check_dim_grid(self.dim, grid)?;
        Ok(separable_row(grid, x, |a, b| mehler_1d(t, a, b)))
    }
    fn is_closed_form(&self) -> bool {
        true
    }
}

/// Cubic Lagrange weights on the 4 nodes around `x` along one axis.
fn axis_weights(grid: &Grid, axis: usize, x: f64) -> Vec<(usize, f64)> {
    let n = grid.counts()[axis];
    let h = grid.spacing()[axis];
    let s = (x - grid.lo()[axis]) / h;
    let near = s.round();
    if (s - near).abs() < 1e-12 && near >= 0.0 && (near as usize) < n {
        return vec![(near as usize, 1.0)];
    }
    let base = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    (0..4)
        .map(|a| {
            let i = base + a;
            let w = (0..4)
                .filter(|&b| b != a)
                .map(|b| (s - (base + b) as f64) / (a as f64 - b as f64))
                .product();
            (i, w)
        })
        .collect()
}

/// `Σ_i e^{-λ_i t} φ_i(x) φ_i(y)` over a discrete eigenbasis. Off-node
/// points use cubic interpolation of the eigenfunctions. Modes with
/// `e^{-λ_i t} max|φ|² < 1e-16` are dropped.
pub struct Eigenexpansion {
    basis: Arc<dyn SpectralBasis>,
    ones_coeffs: Vec<f64>,
    max_phi2: f64,
    label: String,
}

impl Eigenexpansion {
    pub fn new(basis: Arc<dyn SpectralBasis>) -> Self {
        let ones = vec![1.0; basis.grid().len()];
        let ones_coeffs = basis.analyze_values(&ones);
        let cv = basis.grid().cell_volume();
        // Orthonormality bounds every |φ_i(x)|² by 1/cell_volume.
        let max_phi2 = 1.0 / cv;
        Self {
            basis,
            ones_coeffs,
            max_phi2,
            label: "eigen".into(),
        }
    }

    pub fn from_spectral(sd: SpectralData) -> Self {
        Self::new(Arc::new(sd))
    }

    pub fn basis(&self) -> &Arc<dyn SpectralBasis> {
        &self.basis
    }

    pub fn grid(&self) -> &Grid {
        self.basis.grid()
    }

    /// Basis values at an arbitrary point of the box.
    pub fn basis_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        let grid = self.basis.grid();
        check_dim(grid.dim(), x)?;
        if !grid.contains(x) {
            return Err(Error::Domain(format!("point {x:?} outside the grid box")));
        }
        let per_axis: Vec<Vec<(usize, f64)>> = (0..grid.dim())
            .map(|j| axis_weights(grid, j, x[j]))
            .collect();
        let mut out = vec![0.0; self.basis.len()];
        let mut combo = vec![0usize; grid.dim()];
        loop {
            let mut w = 1.0;
            let mut idx = Vec::with_capacity(grid.dim());
            for (j, &c) in combo.iter().enumerate() {
                let (i, wj) = per_axis[j][c];
                w *= wj;
                idx.push(i);
            }
            let row = self.basis.basis_at_node(grid.flat_index(&idx));
            for (o, v) in out.iter_mut().zip(row) {
                *o += w * v;
            }
            // odometer over per-axis stencils
            let mut j = grid.dim();
            loop {
                if j == 0 {
                    return Ok(out);
                }
                j -= 1;
                combo[j] += 1;
                if combo[j] < per_axis[j].len() {
                    break;
                }
                combo[j] = 0;
            }
        }
    }

    fn decay(&self, t: f64) -> Vec<f64> {
        self.basis
            .eigenvalues()
            .iter()
            .map(|&l| {
                let e = (-l * t).exp();
                if e * self.max_phi2 < 1e-16 {
                    0.0
                } else {
                    e
                }
            })
            .collect()
    }

    /// `T_t(x, ·)` on the basis grid for the node `k`, and the mass there.
    pub fn node_row(&self, t: f64, k: usize) -> Result<Vec<f64>> {
        check_time(t)?;
        let phi = self.basis.basis_at_node(k);
        let c: Vec<f64> = self.decay(t).iter().zip(&phi).map(|(e, p)| e * p).collect();
        Ok(self.basis.synthesize_values(&c))
    }
}

impl HeatKernel for Eigenexpansion {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn dim(&self) -> usize {
        self.basis.grid().dim()
    }
    fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        check_time(t)?;
        let px = self.basis_at(x)?;
        let py = self.basis_at(y)?;
        Ok(self
            .decay(t)
            .iter()
            .zip(px.iter().zip(&py))
            .map(|(e, (a, b))| e * a * b)
            .sum())
    }
    fn mass(&self, t: f64, x: &[f64]) -> Result<f64> {
        check_time(t)?;
        let px = self.basis_at(x)?;
        Ok(self
            .decay(t)
            .iter()
            .zip(px.iter().zip(&self.ones_coeffs))
            .map(|(e, (a, b))| e * a * b)
            .sum())
    }
    fn mass_deficit(&self, t: f64, x: &[f64]) -> Result<f64> {
        check_time(t)?;
        // Σ_i φ_i(x) <φ_i, 1> = 1 on the grid, so only the expm1 terms remain.
        let px = self.basis_at(x)?;
        Ok(self
            .basis
            .eigenvalues()
            .iter()
            .zip(px.iter().zip(&self.ones_coeffs))
            .map(|(&l, (a, b))| (-l * t).exp_m1() * a * b)
            .sum())
    }
    fn row(&self, t: f64, x: &[f64], grid: &Grid) -> Result<Vec<f64>> {
        check_time(t)?;
        if grid != self.basis.grid() {
            let mut out = Vec::with_capacity(grid.len());
            for y in grid.points() {
                out.push(self.eval(t, x, &y)?);
            }
            return Ok(out);
        }
        let phi = self.basis_at(x)?;
        let c: Vec<f64> = self.decay(t).iter().zip(&phi).map(|(e, p)| e * p).collect();
        Ok(self.basis.synthesize_values(&c))
    }
}

/// `T_t(x, y) = Π_j T^{(j)}_t(x_j, y_j)` for separable potentials.
pub struct TensorProduct {
    factors: Vec<Arc<dyn HeatKernel>>,
}

impl TensorProduct {
    pub fn new(factors: Vec<Arc<dyn HeatKernel>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Domain("tensor-product kernel needs factors".into()));
        }
        if factors.iter().any(|f| f.dim() != 1) {
            return Err(Error::Domain(
                "tensor-product factors must be one-dimensional".into(),
            ));
        }
        Ok(Self { factors })
    }

    /// Tensor product of one-dimensional eigenexpansions.
    pub fn of_eigen(factors: &[Arc<SpectralData>]) -> Result<Self> {
        Self::new(
            factors
                .iter()
                .map(|f| {
                    Arc::new(Eigenexpansion::new(f.clone() as Arc<dyn SpectralBasis>))
                        as Arc<dyn HeatKernel>
                })
                .collect(),
        )
    }

    pub fn factors(&self) -> &[Arc<dyn HeatKernel>] {
        &self.factors
    }
}

impl HeatKernel for TensorProduct {
    fn name(&self) -> String {
        let parts: Vec<String> = self.factors.iter().map(|f| f.name()).collect();
        format!("tensor[{}]", parts.join(","))
    }
    fn dim(&self) -> usize {
        self.factors.len()
    }
    fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        check_time(t)?;
        check_dim(self.dim(), x)?;
        check_dim(self.dim(), y)?;
        let mut p = 1.0;
        for (j, f) in self.factors.iter().enumerate() {
            p *= f.eval(t, &x[j..=j], &y[j..=j])?;
        }
        Ok(p)
    }
    fn mass(&self, t: f64, x: &[f64]) -> Result<f64> {
        check_time(t)?;
        check_dim(self.dim(), x)?;
        let mut p = 1.0;
        for (j, f) in self.factors.iter().enumerate() {
            p *= f.mass(t, &x[j..=j])?;
        }
        Ok(p)
    }
    fn mass_deficit(&self, t: f64, x: &[f64]) -> Result<f64> {
        check_time(t)?;
        check_dim(self.dim(), x)?;
        // Π(1 + d_j) - 1 accumulated without cancellation.
        let mut d = 0.0;
        for (j, f) in self.factors.iter().enumerate() {
            let dj = f.mass_deficit(t, &x[j..=j])?;
            d += dj + d * dj;
        }
        Ok(d)
    }
    fn row(&self, t: f64, x: &[f64], grid: &Grid) -> Result<Vec<f64>> {
        check_time(t)?;
        check_dim(self.dim(), x)?;
        check_dim_grid(self.dim(), grid)?;
        let mut out = vec![1.0];
        for (j, f) in self.factors.iter().enumerate() {
            let r = f.row(t, &x[j..=j], &grid.axis_grid(j))?;
            out = out
                .iter()
                .flat_map(|&a| r.iter().map(move |&b| a * b))
                .collect();
        }
        Ok(out)
    }
    fn is_closed_form(&self) -> bool {
        self.factors.iter().all(|f| f.is_closed_form())
    }
}

fn check_dim_grid(expected: usize, grid: &Grid) -> Result<()> {
    if grid.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: grid.dim(),
        });
    }
    Ok(())
}

/// Inputs a kernel factory may draw on.
#[derive(Clone, Default)]
pub struct KernelContext {
    pub dim: usize,
    pub spectral: Option<Arc<dyn SpectralBasis>>,
    pub axis_factors: Option<Vec<Arc<SpectralData>>>,
}

/// `free`, `shifted:m2=<v>`, `mehler`, `eigen` (needs `spectral`), `tensor`
/// (needs `axis_factors`).
pub fn kernel_registry() -> &'static Registry<KernelContext, Arc<dyn HeatKernel>> {
    static REG: OnceLock<Registry<KernelContext, Arc<dyn HeatKernel>>> = OnceLock::new();
    REG.get_or_init(|| {
        Registry::<KernelContext, Arc<dyn HeatKernel>>::new("heat kernel")
            .with("free", |c, p| {
                p.only(&[])?;
                Ok(Arc::new(GaussianFree { dim: c.dim }) as Arc<dyn HeatKernel>)
            })
            .with("shifted", |c, p| {
                p.only(&["m2"])?;
                let m2 = p.get_f64("m2")?.unwrap_or(1.0);
                Ok(Arc::new(ShiftedGaussian { dim: c.dim, m2 }) as Arc<dyn HeatKernel>)
            })
            .with("mehler", |c, p| {
                p.only(&[])?;
                Ok(Arc::new(Mehler { dim: c.dim }) as Arc<dyn HeatKernel>)
            })
            .with("eigen", |c, p| {
                p.only(&[])?;
                let sd = c
                    .spectral
                    .clone()
                    .ok_or_else(|| Error::Config("eigen kernel needs spectral data".into()))?;
                Ok(Arc::new(Eigenexpansion::new(sd)) as Arc<dyn HeatKernel>)
            })
            .with("tensor", |c, p| {
                p.only(&[])?;
                let f = c.axis_factors.as_ref().ok_or_else(|| {
                    Error::Config("tensor kernel needs per-axis spectral data".into())
                })?;
                Ok(Arc::new(TensorProduct::of_eigen(f)?) as Arc<dyn HeatKernel>)
            })
    })
}
