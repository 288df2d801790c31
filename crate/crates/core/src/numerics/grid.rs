use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor-product grid on a box in R^d. Nodes are `lo_j + i * h_j`, both
/// endpoints included. Flattened indices are row-major: the last axis varies
/// fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    counts: Vec<usize>,
    spacing: Vec<f64>,
    cell_volume: f64,
}

impl Grid {
    pub fn new(extents: &[(f64, f64)], counts: &[usize]) -> Result<Self> {
        if extents.is_empty() {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if extents.len() != counts.len() {
            return Err(Error::InvalidGrid(format!(
                "{} extents but {} counts",
                extents.len(),
                counts.len()
            )));
        }
        let mut spacing = Vec::with_capacity(counts.len());
        for (j, (&(lo, hi), &n)) in extents.iter().zip(counts).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidGrid(format!("axis {j}: non-finite extent")));
            }
            if hi <= lo {
                return Err(Error::InvalidGrid(format!("axis {j}: extent not ordered")));
            }
            if n < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {j}: need at least 3 nodes, got {n}"
                )));
            }
            spacing.push((hi - lo) / (n - 1) as f64);
        }
        let cell_volume = spacing.iter().product();
        Ok(Self {
            lo: extents.iter().map(|e| e.0).collect(),
            hi: extents.iter().map(|e| e.1).collect(),
            counts: counts.to_vec(),
            spacing,
            cell_volume,
        })
    }

    /// Cube `[lo, hi]^dim` with `n` nodes per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(&vec![(lo, hi); dim], &vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `i` on `axis`.
    pub fn node(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.counts[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + i as f64 * self.spacing[axis]
        }
    }

    pub fn axis_nodes(&self, axis: usize) -> Vec<f64> {
        (0..self.counts[axis]).map(|i| self.node(axis, i)).collect()
    }

    /// One-dimensional grid along `axis`.
    pub fn axis_grid(&self, axis: usize) -> Grid {
        Grid::new(&[(self.lo[axis], self.hi[axis])], &[self.counts[axis]])
            .expect("axis of a valid grid is valid")
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for j in (0..self.dim()).rev() {
            idx[j] = flat % self.counts[j];
            flat /= self.counts[j];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.counts)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(j, &i)| self.node(j, i))
            .collect()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }

    /// Flat index of the node at `x`, if `x` is a node up to `1e-9 * h`.
    pub fn node_index(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let mut idx = Vec::with_capacity(self.dim());
        for (j, &xj) in x.iter().enumerate() {
            let s = (xj - self.lo[j]) / self.spacing[j];
            let i = s.round();
            if (s - i).abs() > 1e-9 || i < 0.0 || i as usize >= self.counts[j] {
                return None;
            }
            idx.push(i as usize);
        }
        Some(self.flat_index(&idx))
    }

    /// Nearest node along each axis (clamped into the box).
    pub fn nearest_index(&self, x: &[f64]) -> Vec<usize> {
        x.iter()
            .enumerate()
            .map(|(j, &xj)| {
                let s = ((xj - self.lo[j]) / self.spacing[j]).round();
                s.clamp(0.0, (self.counts[j] - 1) as f64) as usize
            })
            .collect()
    }

    /// Distance from `x` to the nearest face of the box (negative outside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(j, &xj)| (xj - self.lo[j]).min(self.hi[j] - xj))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.boundary_distance(x) >= 0.0
    }
}
