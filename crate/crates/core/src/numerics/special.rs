//! Special functions: Γ, half-integer modified Bessel K, Euler-Mascheroni γ.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::numerics::quadrature::{time_quadrature, QuadratureSpec};

// Lanczos coefficients, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos(x: f64) -> f64 {
    // Γ(x) for x >= 1/2.
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Γ(x) for `x > 0`. Callers needing negative non-integer arguments use the
/// recurrence explicitly (see [`gamma_of_negative`]).
pub fn gamma_function(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "gamma_function requires x > 0, got {x}"
        )));
    }
    if x < 0.5 {
        // Reflection keeps the Lanczos sum in its accurate range.
        Ok(PI / ((PI * x).sin() * lanczos(1.0 - x)))
    } else if x > 171.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(lanczos(x))
    }
}

/// Γ(-s) = -Γ(1 - s)/s for `s ∈ (0, 1)`.
pub fn gamma_of_negative(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!(
            "gamma_of_negative requires s in (0,1), got {s}"
        )));
    }
    Ok(-gamma_function(1.0 - s)? / s)
}

/// K_{m+1/2}(z) for integer `m >= 0` and `z > 0`, by upward recurrence from
/// K_{1/2}(z) = sqrt(π/(2z)) e^{-z}.
pub fn bessel_k_half_integer(m: usize, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!(
            "bessel_k_half_integer requires z > 0, got {z}"
        )));
    }
    let k_half = (PI / (2.0 * z)).sqrt() * (-z).exp();
    // K_{-1/2} = K_{1/2}
    let (mut prev, mut cur) = (k_half, k_half);
    let mut nu = 0.5;
    for _ in 0..m {
        let next = prev + 2.0 * nu / z * cur;
        prev = cur;
        cur = next;
        nu += 1.0;
    }
    Ok(cur)
}

/// Euler-Mascheroni constant, computed once from the harmonic sum with
/// Euler-Maclaurin corrections.
pub fn euler_gamma() -> f64 {
    static GAMMA: OnceLock<f64> = OnceLock::new();
    *GAMMA.get_or_init(|| harmonic_gamma(10_000))
}

/// `H_n - ln n` with Euler-Maclaurin corrections through `n^{-8}`.
pub fn harmonic_gamma(n: u64) -> f64 {
    let h: f64 = (1..=n).rev().map(|k| 1.0 / k as f64).sum();
    let x = n as f64;
    let x2 = x * x;
    h - x.ln() - 1.0 / (2.0 * x) + 1.0 / (12.0 * x2) - 1.0 / (120.0 * x2 * x2)
        + 1.0 / (252.0 * x2 * x2 * x2)
        - 1.0 / (240.0 * x2 * x2 * x2 * x2)
}

/// `F(z) = ln z + ∫_0^z (e^{-t} - 1)/t dt + ∫_z^∞ e^{-t}/t dt`, which equals
/// `-γ` for every `z > 0`.
pub fn euler_identity(z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!(
            "euler_identity requires z > 0, got {z}"
        )));
    }
    let spec = QuadratureSpec::default();
    let near = time_quadrature(|t| (-t).exp_m1() / t, 0.0, z, &spec)?;
    let far = time_quadrature(|t| (-t).exp() / t, z, f64::INFINITY, &spec)?;
    Ok(z.ln() + near + far)
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / gamma_function(h + 1.0).expect("positive argument")
}
