#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schrolog::numerics::Grid;
use schrolog::operator::{DiscreteOperator, SpectralData};
use schrolog::potential::Potential;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn spectral_1d(lo: f64, hi: f64, n: usize, v: Potential) -> Arc<SpectralData> {
    let grid = Grid::cube(1, lo, hi, n).unwrap();
    let op = DiscreteOperator::assemble(&grid, &v).unwrap();
    Arc::new(op.eigendecompose().unwrap())
}

/// Harmonic oscillator on [-12, 12] with 1024 nodes.
pub fn harmonic_1024() -> Arc<SpectralData> {
    spectral_1d(-12.0, 12.0, 1024, Potential::harmonic(1).unwrap())
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

pub fn point(rng: &mut ChaCha8Rng, dim: usize, r: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-r..r)).collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
