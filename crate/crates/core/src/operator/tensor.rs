use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::Grid;
use crate::operator::{DiscreteOperator, SpectralBasis, SpectralData};
use crate::potential::Potential;

/// Spectral data of a separable operator `A_1 ⊕ ... ⊕ A_d` on a product grid,
/// kept as its one-dimensional factors. Eigenvalues are sums of factor
/// eigenvalues; eigenfunctions are tensor products. Coefficients are laid out
/// row-major over the factor mode indices.
#[derive(Debug, Clone)]
pub struct TensorSpectral {
    grid: Grid,
    factors: Vec<Arc<SpectralData>>,
    eigenvalues: Vec<f64>,
}

/// Apply `mat` (rows × n_axis) along `axis` of a row-major tensor.
fn mode_product(
    data: &[f64],
    shape: &[usize],
    axis: usize,
    mat: &DMatrix<f64>,
    transpose: bool,
) -> (Vec<f64>, Vec<usize>) {
    let (rows, cols) = if transpose {
        (mat.ncols(), mat.nrows())
    } else {
        (mat.nrows(), mat.ncols())
    };
    assert_eq!(cols, shape[axis]);
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; outer * rows * inner];
    let m = |r: usize, c: usize| if transpose { mat[(c, r)] } else { mat[(r, c)] };
    for o in 0..outer {
        let src = &data[o * cols * inner..(o + 1) * cols * inner];
        let dst = &mut out[o * rows * inner..(o + 1) * rows * inner];
        for r in 0..rows {
            let drow = &mut dst[r * inner..(r + 1) * inner];
            for c in 0..cols {
                let w = m(r, c);
                if w == 0.0 {
                    continue;
                }
                let srow = &src[c * inner..(c + 1) * inner];
                for (d, s) in drow.iter_mut().zip(srow) {
                    *d += w * s;
                }
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[axis] = rows;
    (out, new_shape)
}

impl TensorSpectral {
    pub fn new(factors: Vec<Arc<SpectralData>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Domain(
                "tensor spectral data needs at least one factor".into(),
            ));
        }
        let mut extents = Vec::new();
        let mut counts = Vec::new();
        for f in &factors {
            let g = f.grid();
            if g.dim() != 1 {
                return Err(Error::Domain(
                    "tensor factors must be one-dimensional".into(),
                ));
            }
            extents.push((g.lo()[0], g.hi()[0]));
            counts.push(g.counts()[0]);
        }
        let grid = Grid::new(&extents, &counts)?;
        let mut eigenvalues = vec![0.0];
        for f in &factors {
            let next: Vec<f64> = eigenvalues
                .iter()
                .flat_map(|&a| f.eigenvalues().iter().map(move |&b| a + b))
                .collect();
            eigenvalues = next;
        }
        Ok(Self {
            grid,
            factors,
            eigenvalues,
        })
    }

    /// Decomposes each axis of a separable potential on `grid`.
    pub fn from_separable(grid: &Grid, potential: &Potential) -> Result<Self> {
        if potential.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: potential.dim(),
            });
        }
        let mut factors = Vec::with_capacity(grid.dim());
        for j in 0..grid.dim() {
            let vj = potential.axis_potential(j).ok_or_else(|| {
                Error::Domain(format!("potential `{}` is not separable", potential.name()))
            })?;
            let op = DiscreteOperator::assemble(&grid.axis_grid(j), &vj)?;
            factors.push(Arc::new(op.eigendecompose()?));
        }
        Self::new(factors)
    }

    pub fn factors(&self) -> &[Arc<SpectralData>] {
        &self.factors
    }

    fn shape(&self) -> Vec<usize> {
        self.grid.counts().to_vec()
    }
}

impl SpectralBasis for TensorSpectral {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn analyze_values(&self, f: &[f64]) -> Vec<f64> {
        let mut data = f.to_vec();
        let mut shape = self.shape();
        for (j, fac) in self.factors.iter().enumerate() {
            let h = fac.grid().cell_volume();
            let (d, s) = mode_product(&data, &shape, j, fac.eigenvectors(), true);
            data = d.into_iter().map(|v| v * h).collect();
            shape = s;
        }
        data
    }

    fn synthesize_values(&self, c: &[f64]) -> Vec<f64> {
        let mut data = c.to_vec();
        let mut shape = self.shape();
        for (j, fac) in self.factors.iter().enumerate() {
            let (d, s) = mode_product(&data, &shape, j, fac.eigenvectors(), false);
            data = d;
            shape = s;
        }
        data
    }

    fn basis_at_node(&self, k: usize) -> Vec<f64> {
        let idx = self.grid.multi_index(k);
        let mut out = vec![1.0];
        for (fac, &i) in self.factors.iter().zip(&idx) {
            let row = fac.basis_at_node(i);
            out = out
                .iter()
                .flat_map(|&a| row.iter().map(move |&b| a * b))
                .collect();
        }
        out
    }
}
