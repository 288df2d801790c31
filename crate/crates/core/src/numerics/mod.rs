//! Grids, fields, time quadrature and special functions.

pub mod field;
pub mod grid;
pub mod qmc;
pub mod quadrature;
pub mod special;

pub use field::{ComplexField, Field, Scalar};
pub use grid::Grid;
pub use quadrature::{
    improper_time_quadrature, time_quadrature, time_quadrature_vec, QuadratureOutcome,
    QuadratureSpec,
};
pub use special::{bessel_k_half_integer, euler_gamma, gamma_function, gamma_of_negative};
