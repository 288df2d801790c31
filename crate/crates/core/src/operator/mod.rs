//! Finite-difference Schrödinger operators and their spectral data.

pub mod hermite;
pub mod tensor;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::numerics::{ComplexField, Field, Grid};
use crate::potential::Potential;

pub use hermite::{
    harmonic_log_apply, hermite_coefficients, hermite_function, HermiteBasis, HermiteCoefficients,
};
pub use tensor::TensorSpectral;

/// Default cap on the number of unknowns for dense eigendecomposition.
pub const DEFAULT_SIZE_CAP: usize = 20_000;

/// `-Δ + V` on a grid: second-order central differences with homogeneous
/// Dirichlet data just outside the box, plus diagonal `V`. Stored as the
/// stencil; [`DiscreteOperator::to_dense`] gives the symmetric matrix.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Grid,
    potential: Potential,
    diagonal: Vec<f64>,
    inv_h2: Vec<f64>,
}

impl DiscreteOperator {
    pub fn assemble(grid: &Grid, potential: &Potential) -> Result<Self> {
        Self::assemble_capped(grid, potential, DEFAULT_SIZE_CAP)
    }

    pub fn assemble_capped(grid: &Grid, potential: &Potential, cap: usize) -> Result<Self> {
        if potential.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: potential.dim(),
            });
        }
        if grid.len() > cap {
            return Err(Error::SizeCap {
                size: grid.len(),
                cap,
            });
        }
        let inv_h2: Vec<f64> = grid.spacing().iter().map(|h| 1.0 / (h * h)).collect();
        let lap_diag: f64 = inv_h2.iter().map(|v| 2.0 * v).sum();
        let mut diagonal = Vec::with_capacity(grid.len());
        for (k, x) in grid.points().enumerate() {
            let v = potential.eval(&x);
            if !v.is_finite() {
                return Err(Error::NonFinite(k));
            }
            diagonal.push(lap_diag + v);
        }
        Ok(Self {
            grid: grid.clone(),
            potential: potential.clone(),
            diagonal,
            inv_h2,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn size(&self) -> usize {
        self.diagonal.len()
    }

    fn strides(&self) -> Vec<usize> {
        let counts = self.grid.counts();
        let mut s = vec![1; counts.len()];
        for j in (0..counts.len().saturating_sub(1)).rev() {
            s[j] = s[j + 1] * counts[j + 1];
        }
        s
    }

    /// Matrix-vector product `A f`.
    pub fn apply(&self, f: &Field) -> Result<Field> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let counts = self.grid.counts();
        let strides = self.strides();
        let v = f.values();
        let mut out = vec![0.0; v.len()];
        for (k, o) in out.iter_mut().enumerate() {
            let mut acc = self.diagonal[k] * v[k];
            let idx = self.grid.multi_index(k);
            for j in 0..counts.len() {
                if idx[j] > 0 {
                    acc -= self.inv_h2[j] * v[k - strides[j]];
                }
                if idx[j] + 1 < counts[j] {
                    acc -= self.inv_h2[j] * v[k + strides[j]];
                }
            }
            *o = acc;
        }
        Field::new(self.grid.clone(), out)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        let counts = self.grid.counts();
        let strides = self.strides();
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            m[(k, k)] = self.diagonal[k];
            let idx = self.grid.multi_index(k);
            for j in 0..counts.len() {
                if idx[j] + 1 < counts[j] {
                    let l = k + strides[j];
                    m[(k, l)] = -self.inv_h2[j];
                    m[(l, k)] = -self.inv_h2[j];
                }
            }
        }
        m
    }

    /// Full eigendecomposition, eigenvalues ascending, eigenvectors
    /// orthonormal in the grid inner product with the first significant
    /// component positive.
    pub fn eigendecompose(&self) -> Result<SpectralData> {
        let n = self.size();
        let eig = SymmetricEigen::try_new(self.to_dense(), 1e-15, 10_000)
            .ok_or_else(|| Error::Eigensolver("symmetric QR iteration did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let scale = 1.0 / self.grid.cell_volume().sqrt();
        let mut vectors = DMatrix::zeros(n, n);
        let mut values = Vec::with_capacity(n);
        for (col, &src) in order.iter().enumerate() {
            let v = eig.eigenvectors.column(src);
            let vmax = v.amax();
            let first = v
                .iter()
                .find(|x| x.abs() > 1e-8 * vmax)
                .copied()
                .unwrap_or(1.0);
            let sign = if first < 0.0 { -scale } else { scale };
            vectors.column_mut(col).copy_from(&(v * sign));
            values.push(eig.eigenvalues[src]);
        }
        if values.iter().any(|l| !l.is_finite()) {
            return Err(Error::Eigensolver("non-finite eigenvalue".into()));
        }
        Ok(SpectralData {
            grid: self.grid.clone(),
            eigenvalues: values,
            eigenvectors: vectors,
        })
    }
}

/// Assemble `-Δ + V` on `grid`.
pub fn assemble(grid: &Grid, potential: &Potential) -> Result<DiscreteOperator> {
    DiscreteOperator::assemble(grid, potential)
}

/// Eigendecomposition of an assembled operator.
pub fn eigendecompose(op: &DiscreteOperator) -> Result<SpectralData> {
    op.eigendecompose()
}

/// A complete orthonormal eigenbasis of a discrete operator on a grid. The
/// spectral calculus and the eigenexpansion kernels work through this trait
/// so a dense decomposition and a Kronecker-sum of 1D decompositions are
/// interchangeable.
pub trait SpectralBasis: Send + Sync {
    fn grid(&self) -> &Grid;

    /// Eigenvalue of each basis function, in coefficient order.
    fn eigenvalues(&self) -> &[f64];

    /// Coefficients `c_i = <f, φ_i>`.
    fn analyze_values(&self, f: &[f64]) -> Vec<f64>;

    /// `Σ c_i φ_i` as nodal values.
    fn synthesize_values(&self, c: &[f64]) -> Vec<f64>;

    fn len(&self) -> usize {
        self.eigenvalues().len()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values of every basis function at node `k`, in coefficient order.
    fn basis_at_node(&self, k: usize) -> Vec<f64>;

    /// `Σ_y φ_i(y) h^d` over the nodes `y` in `nodes`, per basis function.
    fn basis_sums(&self, nodes: &[usize]) -> Vec<f64> {
        let mut ind = vec![0.0; self.grid().len()];
        for &k in nodes {
            ind[k] = 1.0;
        }
        self.analyze_values(&ind)
    }

    fn analyze(&self, f: &Field) -> Result<Vec<f64>> {
        if f.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(self.analyze_values(f.values()))
    }

    fn synthesize(&self, c: &[f64]) -> Result<Field> {
        if c.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: c.len(),
            });
        }
        Field::new(self.grid().clone(), self.synthesize_values(c))
    }

    fn analyze_complex(&self, f: &ComplexField) -> Result<Vec<num_complex::Complex64>> {
        if f.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        let re: Vec<f64> = f.values().iter().map(|v| v.re).collect();
        let im: Vec<f64> = f.values().iter().map(|v| v.im).collect();
        let (a, b) = (self.analyze_values(&re), self.analyze_values(&im));
        Ok(a.into_iter()
            .zip(b)
            .map(|(x, y)| num_complex::Complex64::new(x, y))
            .collect())
    }

    fn synthesize_complex(&self, c: &[num_complex::Complex64]) -> Result<ComplexField> {
        if c.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: c.len(),
            });
        }
        let re: Vec<f64> = c.iter().map(|v| v.re).collect();
        let im: Vec<f64> = c.iter().map(|v| v.im).collect();
        let (a, b) = (self.synthesize_values(&re), self.synthesize_values(&im));
        ComplexField::new(
            self.grid().clone(),
            a.into_iter()
                .zip(b)
                .map(|(x, y)| num_complex::Complex64::new(x, y))
                .collect(),
        )
    }
}

/// Eigenvalues (ascending) and grid-orthonormal eigenvectors of a discrete
/// operator: the discrete stand-in for its spectral measure.
#[derive(Debug, Clone)]
pub struct SpectralData {
    grid: Grid,
    eigenvalues: Vec<f64>,
    /// Column `i` holds φ_i at every node.
    eigenvectors: DMatrix<f64>,
}

impl SpectralData {
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> Field {
        Field::new(
            self.grid.clone(),
            self.eigenvectors.column(i).iter().copied().collect(),
        )
        .expect("eigenvector length matches grid")
    }

    /// `max_i |A φ_i - λ_i φ_i| / (|λ_i| |φ_i|)` (Euclidean norms).
    pub fn max_residual(&self, op: &DiscreteOperator) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..self.eigenvalues.len() {
            let phi = self.eigenvector(i);
            let a = op.apply(&phi)?;
            let l = self.eigenvalues[i];
            let r: f64 = a
                .values()
                .iter()
                .zip(phi.values())
                .map(|(x, y)| (x - l * y).powi(2))
                .sum::<f64>()
                .sqrt();
            let n: f64 = phi.values().iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max(r / (l.abs() * n));
        }
        Ok(worst)
    }

    /// Max deviation of the grid Gram matrix from the identity.
    pub fn gram_error(&self) -> f64 {
        let g = self.eigenvectors.transpose() * &self.eigenvectors * self.grid.cell_volume();
        let n = g.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }
}

impl SpectralBasis for SpectralData {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn analyze_values(&self, f: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(f);
        let c = self.eigenvectors.tr_mul(&v) * self.grid.cell_volume();
        c.as_slice().to_vec()
    }

    fn synthesize_values(&self, c: &[f64]) -> Vec<f64> {
        let c = DVector::from_column_slice(c);
        (&self.eigenvectors * c).as_slice().to_vec()
    }

    fn basis_at_node(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.row(k).iter().copied().collect()
    }
}
