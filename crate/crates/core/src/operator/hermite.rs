//! Exact eigensystem of the harmonic oscillator `H = -Δ + |x|²`:
//! `H h_α = (2|α| + d) h_α` with tensor-product Hermite functions.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::{Field, Grid};

/// Normalized Hermite function `h_ℓ(u)` via the three-term recurrence
/// `h_{ℓ+1} = u sqrt(2/(ℓ+1)) h_ℓ - sqrt(ℓ/(ℓ+1)) h_{ℓ-1}`.
pub fn hermite_function(l: usize, u: f64) -> f64 {
    hermite_functions(l, u)[l]
}

/// `[h_0(u), ..., h_lmax(u)]`.
pub fn hermite_functions(lmax: usize, u: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(lmax + 1);
    let h0 = PI.powf(-0.25) * (-0.5 * u * u).exp();
    out.push(h0);
    if lmax == 0 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * u * h0);
    for l in 1..lmax {
        let lf = l as f64;
        let next = u * (2.0 / (lf + 1.0)).sqrt() * out[l] - (lf / (lf + 1.0)).sqrt() * out[l - 1];
        out.push(next);
    }
    out
}

/// Multi-indices `α ∈ N^d` with `|α| <= max_degree`, in graded order.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteBasis {
    dim: usize,
    max_degree: usize,
    indices: Vec<Vec<usize>>,
}

impl HermiteBasis {
    pub fn new(dim: usize, max_degree: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("Hermite basis needs dim >= 1".into()));
        }
        if max_degree > 500 {
            return Err(Error::Domain(
                "Hermite degree above 500 is outside the stable range".into(),
            ));
        }
        let mut indices = Vec::new();
        for s in 0..=max_degree {
            compositions(s, dim, &mut Vec::new(), &mut indices);
        }
        Ok(Self {
            dim,
            max_degree,
            indices,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Harmonic-oscillator eigenvalue `2|α| + d`.
    pub fn eigenvalue(&self, alpha: &[usize]) -> f64 {
        (2 * alpha.iter().sum::<usize>() + self.dim) as f64
    }

    pub fn position(&self, alpha: &[usize]) -> Option<usize> {
        self.indices.iter().position(|a| a == alpha)
    }

    /// `h_α(x) = Π_j h_{α_j}(x_j)`.
    pub fn eval(&self, alpha: &[usize], x: &[f64]) -> f64 {
        alpha
            .iter()
            .zip(x)
            .map(|(&a, &xj)| hermite_function(a, xj))
            .product()
    }
}

fn compositions(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        let mut v = prefix.clone();
        v.push(total);
        out.push(v);
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// Hermite coefficients of a grid field with a truncation diagnostic
/// `1 - Σ c_α² / |f|²`.
#[derive(Debug, Clone)]
pub struct HermiteCoefficients {
    pub coeffs: Vec<f64>,
    pub truncation: f64,
    pub warning: Option<String>,
}

fn axis_table(grid: &Grid, axis: usize, lmax: usize) -> DMatrix<f64> {
    let nodes = grid.axis_nodes(axis);
    let mut m = DMatrix::zeros(lmax + 1, nodes.len());
    for (i, &u) in nodes.iter().enumerate() {
        for (l, v) in hermite_functions(lmax, u).into_iter().enumerate() {
            m[(l, i)] = v;
        }
    }
    m
}

fn tensor_apply(
    data: &[f64],
    shape: &[usize],
    axis: usize,
    mat: &DMatrix<f64>,
) -> (Vec<f64>, Vec<usize>) {
    let (rows, cols) = (mat.nrows(), mat.ncols());
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; outer * rows * inner];
    for o in 0..outer {
        for r in 0..rows {
            for c in 0..cols {
                let w = mat[(r, c)];
                if w == 0.0 {
                    continue;
                }
                let s = o * cols * inner + c * inner;
                let d = o * rows * inner + r * inner;
                for k in 0..inner {
                    out[d + k] += w * data[s + k];
                }
            }
        }
    }
    let mut ns = shape.to_vec();
    ns[axis] = rows;
    (out, ns)
}

/// `c_α = ∫ h_α f` by tensor-product grid quadrature.
pub fn hermite_coefficients(f: &Field, basis: &HermiteBasis) -> Result<HermiteCoefficients> {
    let grid = f.grid();
    if grid.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: grid.dim(),
        });
    }
    let lmax = basis.max_degree();
    let mut data = f.values().to_vec();
    let mut shape = grid.counts().to_vec();
    for j in 0..grid.dim() {
        let t = axis_table(grid, j, lmax) * grid.spacing()[j];
        let (d, s) = tensor_apply(&data, &shape, j, &t);
        data = d;
        shape = s;
    }
    let index_of = |alpha: &[usize]| alpha.iter().fold(0, |acc, &a| acc * (lmax + 1) + a);
    let coeffs: Vec<f64> = basis.indices().iter().map(|a| data[index_of(a)]).collect();
    let norm2 = f.l2_norm().powi(2);
    let captured: f64 = coeffs.iter().map(|c| c * c).sum();
    let truncation = if norm2 > 0.0 {
        1.0 - captured / norm2
    } else {
        0.0
    };
    let mut warnings = Vec::new();
    if truncation > 0.01 {
        warnings.push(format!(
            "truncation diagnostic {truncation:.3e} exceeds 0.01"
        ));
    }
    let edge = boundary_max(f);
    if edge > 1e-14 * f.sup_norm().max(1e-300) && edge > 1e-14 {
        warnings.push(format!(
            "field does not decay at the box boundary (max {edge:.3e})"
        ));
    }
    Ok(HermiteCoefficients {
        coeffs,
        truncation,
        warning: if warnings.is_empty() {
            None
        } else {
            Some(warnings.join("; "))
        },
    })
}

fn boundary_max(f: &Field) -> f64 {
    let g = f.grid();
    let mut m: f64 = 0.0;
    for k in 0..g.len() {
        let idx = g.multi_index(k);
        if idx
            .iter()
            .zip(g.counts())
            .any(|(&i, &n)| i == 0 || i + 1 == n)
        {
            m = m.max(f.values()[k].abs());
        }
    }
    m
}

/// Synthesizes `Σ c_α h_α` on `grid`.
pub fn hermite_synthesize(coeffs: &[f64], basis: &HermiteBasis, grid: &Grid) -> Result<Field> {
    if coeffs.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: coeffs.len(),
        });
    }
    let lmax = basis.max_degree();
    let d = basis.dim();
    let mut data = vec![0.0; (lmax + 1).pow(d as u32)];
    for (a, &c) in basis.indices().iter().zip(coeffs) {
        let k = a.iter().fold(0, |acc, &v| acc * (lmax + 1) + v);
        data[k] = c;
    }
    let mut shape = vec![lmax + 1; d];
    for j in 0..d {
        let t = axis_table(grid, j, lmax).transpose();
        let (nd, ns) = tensor_apply(&data, &shape, j, &t);
        data = nd;
        shape = ns;
    }
    Field::new(grid.clone(), data)
}

/// Result of applying a function of the harmonic oscillator through the
/// Hermite expansion.
#[derive(Debug, Clone)]
pub struct HermiteApply {
    pub field: Field,
    pub truncation: f64,
    pub warning: Option<String>,
}

/// `φ(H) f = Σ_α φ(2|α| + d) c_α(f) h_α`.
pub fn harmonic_apply(
    basis: &HermiteBasis,
    f: &Field,
    phi: impl Fn(f64) -> f64,
) -> Result<HermiteApply> {
    let hc = hermite_coefficients(f, basis)?;
    let scaled: Vec<f64> = basis
        .indices()
        .iter()
        .zip(&hc.coeffs)
        .map(|(a, &c)| phi(basis.eigenvalue(a)) * c)
        .collect();
    Ok(HermiteApply {
        field: hermite_synthesize(&scaled, basis, f.grid())?,
        truncation: hc.truncation,
        warning: hc.warning,
    })
}

/// `(log H) f = Σ_k log(2k + d) Σ_{|α| = k} c_α h_α`.
pub fn harmonic_log_apply(basis: &HermiteBasis, f: &Field) -> Result<HermiteApply> {
    harmonic_apply(basis, f, f64::ln)
}
