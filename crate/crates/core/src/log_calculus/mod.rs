//! Semigroup-integral representations of `log 𝓛`, `𝓛^α` and `𝓛^{-α}`, and
//! the pointwise formula for `(log 𝓛) f(x)`.
//!
//! The operator-level integrals are evaluated mode by mode: applying the
//! heat semigroup to `f` and integrating in `t` is the same linear map as
//! integrating the scalar multipliers `e^{-λ_i t}` and synthesizing once.

pub mod pointwise;

use crate::error::{Error, Result};
use crate::numerics::{
    gamma_function, gamma_of_negative, time_quadrature_vec, Field, QuadratureSpec,
};
use crate::operator::SpectralBasis;
use crate::spectral::{apply_spectral, Log, NegPower, Power};

pub use pointwise::{
    ball_weights, extended_pointwise, k_function, pointwise_log, time_kernel_g, time_kernel_row,
    KFunctionResult, PointwiseLogResult, TimeWeight,
};

/// Distinct eigenvalues (to relative 1e-14) and the map back to modes, so
/// degenerate tensor spectra are integrated once per value.
fn distinct(lams: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..lams.len()).collect();
    order.sort_by(|&a, &b| lams[a].total_cmp(&lams[b]));
    let mut values: Vec<f64> = Vec::new();
    let mut map = vec![0; lams.len()];
    for i in order {
        match values.last() {
            Some(&v) if (lams[i] - v).abs() <= 1e-14 * v.abs() => {}
            _ => values.push(lams[i]),
        }
        map[i] = values.len() - 1;
    }
    (values, map)
}

/// `∫_a^b g(t, λ) dt` for every `λ` in `lams`.
pub(crate) fn mode_quadrature(
    lams: &[f64],
    g: impl Fn(f64, f64) -> f64,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<Vec<f64>> {
    let (values, map) = distinct(lams);
    let out = time_quadrature_vec(
        values.len(),
        |t, o| {
            for (oi, &l) in o.iter_mut().zip(&values) {
                *oi = g(t, l);
            }
        },
        a,
        b,
        spec,
    )?;
    Ok(map.iter().map(|&k| out.value[k]).collect())
}

pub(crate) fn synthesize_with(basis: &dyn SpectralBasis, f: &Field, m: &[f64]) -> Result<Field> {
    let c = basis.analyze(f)?;
    let c: Vec<f64> = c.iter().zip(m).map(|(a, b)| a * b).collect();
    basis.synthesize(&c)
}

/// `∫_{1/m}^m (e^{-t} - e^{-λ t})/t dt` for each `λ`.
pub fn frullani_multipliers(lams: &[f64], m: f64, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    if !(m >= 2.0) {
        return Err(Error::Domain(format!(
            "Frullani truncation needs m >= 2, got {m}"
        )));
    }
    mode_quadrature(
        lams,
        // e^{-t}(1 - e^{-(λ-1)t}) is accurate for λ near 1
        |t, l| {
            let a = (l - 1.0) * t;
            if a.abs() < 1.0 {
                -(-t).exp() * (-a).exp_m1() / t
            } else {
                ((-t).exp() - (-l * t).exp()) / t
            }
        },
        1.0 / m,
        m,
        spec,
    )
}

/// `∫_{1/m}^m (e^{-t} f - T_t f)/t dt`.
pub fn frullani_apply(basis: &dyn SpectralBasis, f: &Field, m: f64) -> Result<Field> {
    let w = frullani_multipliers(basis.eigenvalues(), m, &QuadratureSpec::with_tol(1e-13))?;
    synthesize_with(basis, f, &w)
}

/// `frullani_apply` for each truncation in `ms`, so convergence in `m` can be
/// observed.
pub fn frullani_table(
    basis: &dyn SpectralBasis,
    f: &Field,
    ms: &[f64],
) -> Result<Vec<(f64, Field)>> {
    ms.iter()
        .map(|&m| Ok((m, frullani_apply(basis, f, m)?)))
        .collect()
}

/// Split point below which the small-`t` pieces of the power integrals are
/// summed as power series; `λ τ <= 1` keeps those series short.
fn series_split(lams: &[f64]) -> f64 {
    let lmax = lams.iter().copied().fold(0.0, f64::max);
    (1.0 / lmax).min(1.0)
}

/// `Σ_{k≥1} (-λ)^k τ^{k+p} / (k! (k+p))`, i.e. `∫_0^τ (e^{-λt} - 1) t^{p-1} dt`.
fn series_tail(l: f64, tau: f64, p: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        term *= -l * tau / k as f64;
        let add = term * tau.powf(p) / (k as f64 + p);
        sum += add;
        if add.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `(1/Γ(-α)) ∫_0^∞ (e^{-λt} - 1) t^{-1-α} dt`, which equals `λ^α`.
pub fn frac_power_multipliers(lams: &[f64], alpha: f64, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "fractional power needs alpha in (0, 1), got {alpha}"
        )));
    }
    let tau = series_split(lams);
    let mid = mode_quadrature(
        lams,
        |t, l| (-l * t).exp_m1() * t.powf(-1.0 - alpha),
        tau,
        1.0,
        spec,
    )?;
    let far = mode_quadrature(
        lams,
        |t, l| (-l * t).exp() * t.powf(-1.0 - alpha),
        1.0,
        f64::INFINITY,
        spec,
    )?;
    let g = gamma_of_negative(alpha)?;
    Ok(lams
        .iter()
        .zip(mid.iter().zip(&far))
        .map(|(&l, (m, fa))| (series_tail(l, tau, -alpha) + m + fa - 1.0 / alpha) / g)
        .collect())
}

/// `𝓛^α f = (1/Γ(-α)) ∫_0^∞ (T_t f - f) t^{-1-α} dt` for `α ∈ (0, 1)`.
pub fn heat_frac_power(basis: &dyn SpectralBasis, f: &Field, alpha: f64) -> Result<Field> {
    let m = frac_power_multipliers(basis.eigenvalues(), alpha, &QuadratureSpec::with_tol(1e-13))?;
    synthesize_with(basis, f, &m)
}

/// `(1/Γ(α)) ∫_0^∞ e^{-λt} t^{α-1} dt`, which equals `λ^{-α}`.
pub fn neg_power_multipliers(lams: &[f64], alpha: f64, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "negative power needs alpha > 0, got {alpha}"
        )));
    }
    let tau = series_split(lams);
    let far = mode_quadrature(
        lams,
        |t, l| (-l * t).exp() * t.powf(alpha - 1.0),
        tau,
        f64::INFINITY,
        spec,
    )?;
    let g = gamma_function(alpha)?;
    Ok(lams
        .iter()
        .zip(&far)
        .map(|(&l, fa)| (tau.powf(alpha) / alpha + series_tail(l, tau, alpha) + fa) / g)
        .collect())
}

/// `𝓛^{-α} f = (1/Γ(α)) ∫_0^∞ T_t f t^{α-1} dt` for `α > 0`.
pub fn heat_neg_power(basis: &dyn SpectralBasis, f: &Field, alpha: f64) -> Result<Field> {
    let m = neg_power_multipliers(basis.eigenvalues(), alpha, &QuadratureSpec::with_tol(1e-13))?;
    synthesize_with(basis, f, &m)
}

/// Grid `L^p` errors `‖(𝓛^s f - f)/s - (log 𝓛) f‖_p` for each `s`; `p` is 2 or
/// infinity.
pub fn lp_limit_probe(
    basis: &dyn SpectralBasis,
    f: &Field,
    p: f64,
    s_list: &[f64],
) -> Result<Vec<f64>> {
    if !(p == 2.0 || p == f64::INFINITY) {
        return Err(Error::Domain(format!(
            "L^p limit probe supports p = 2 or infinity, got {p}"
        )));
    }
    let log_f = apply_spectral(basis, &Log, f)?;
    s_list
        .iter()
        .map(|&s| {
            let fs = apply_spectral(basis, &Power::new(s)?, f)?;
            let q = fs.sub(f)?.scale(1.0 / s).sub(&log_f)?;
            Ok(q.lp_norm(p))
        })
        .collect()
}

/// `‖-(𝓛^{-h} f - f)/h - (log 𝓛) f‖₂` for each `h`.
pub fn left_derivative_probe(
    basis: &dyn SpectralBasis,
    f: &Field,
    h_list: &[f64],
) -> Result<Vec<f64>> {
    let log_f = apply_spectral(basis, &Log, f)?;
    h_list
        .iter()
        .map(|&h| {
            let fh = apply_spectral(basis, &NegPower::new(h)?, f)?;
            Ok(fh.sub(f)?.scale(-1.0 / h).sub(&log_f)?.l2_norm())
        })
        .collect()
}
