//! Logarithmic Schrödinger operators `log(-Δ + V)`.
//!
//! The crate evaluates `log 𝓛_V` and the related functions of `𝓛_V = -Δ + V`
//! (real, negative and imaginary powers, heat semigroup) through three
//! independent routes: the discrete spectral calculus of a finite-difference
//! operator, time integrals of the heat semigroup, and a pointwise integral
//! formula built from the time-integrated heat kernel and a correction
//! function `K(x)` that depends on the critical radius `ρ(x)` of `V`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod evolution;
pub mod heat_kernel;
pub mod log_calculus;
pub mod numerics;
pub mod operator;
pub mod potential;
pub mod probe;
pub mod registry;
pub mod spectral;

pub use error::{Error, Result};
