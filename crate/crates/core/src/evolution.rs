//! The logarithmic Cauchy problem `∂_t u = -(log 𝓛) u`, `u(·,0) = f`, whose
//! solution is `u(·,t) = 𝓛^{-t} f`, and the `Lip_V^θ` diagnostics that go
//! with it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::heat_kernel::HeatKernel;
use crate::log_calculus::{mode_quadrature, synthesize_with};
use crate::numerics::{gamma_function, Field, Grid, QuadratureSpec};
use crate::operator::SpectralBasis;
use crate::spectral::{apply_spectral, neg_power_apply, Log};

/// Below this time the `1/Γ(t)` prefactor and the `z^{t-1}` tail make the
/// quadrature route impractical.
pub const MIN_QUADRATURE_TIME: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Spectral,
    Quadrature,
}

/// Sampled `Lip_V^θ` statistics. Both suprema are taken over a finite
/// sample, so they are lower bounds for the true values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipVReport {
    pub theta: f64,
    /// `max |f(x)| ρ(x)^{-θ}` over grid nodes.
    pub weighted_sup: f64,
    /// `max |f(x+h) - f(x)| / |h|^θ` over the sampled pairs.
    pub holder_seminorm: f64,
    pub weighted_finite: bool,
    pub holder_finite: bool,
    pub pairs: usize,
}

impl LipVReport {
    pub fn norm(&self) -> f64 {
        self.weighted_sup + self.holder_seminorm
    }
}

/// Node pairs `(x, x + h)` on which the Hölder quotient is sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct LipSample {
    pub pairs: Vec<(usize, usize)>,
}

impl LipSample {
    /// All pairs along each axis with separation up to `max_steps` nodes.
    pub fn axis_pairs(grid: &Grid, max_steps: usize) -> Self {
        let mut pairs = Vec::new();
        for k in 0..grid.len() {
            let idx = grid.multi_index(k);
            for j in 0..grid.dim() {
                for s in 1..=max_steps {
                    if idx[j] + s < grid.counts()[j] {
                        let mut other = idx.clone();
                        other[j] += s;
                        pairs.push((k, grid.flat_index(&other)));
                    }
                }
            }
        }
        Self { pairs }
    }

    /// `count` random pairs with per-axis offsets of at most `max_steps`
    /// nodes.
    pub fn random(grid: &Grid, count: usize, max_steps: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(count);
        while pairs.len() < count {
            let k = rng.gen_range(0..grid.len());
            let mut idx = grid.multi_index(k);
            for (j, i) in idx.iter_mut().enumerate() {
                let off = rng.gen_range(-(max_steps as i64)..=max_steps as i64);
                *i = (*i as i64 + off).clamp(0, grid.counts()[j] as i64 - 1) as usize;
            }
            let other = grid.flat_index(&idx);
            if other != k {
                pairs.push((k, other));
            }
        }
        Self { pairs }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Sampled `Lip_V^θ` statistics of `f`. The Hölder part divides by `|h|^θ`.
pub fn lipv_seminorm(
    f: &Field,
    rho: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
    theta: f64,
    sample: &LipSample,
) -> Result<LipVReport> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!(
            "theta must lie in (0, 1), got {theta}"
        )));
    }
    let grid = f.grid();
    let weights: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| Ok(f.values()[k].abs() * rho(&grid.point(k))?.powf(-theta)))
        .collect::<Result<_>>()?;
    let weighted_sup = weights.iter().copied().fold(0.0, f64::max);
    let holder_seminorm = sample
        .pairs
        .iter()
        .map(|&(a, b)| {
            let h = dist(&grid.point(a), &grid.point(b));
            (f.values()[a] - f.values()[b]).abs() / h.powf(theta)
        })
        .fold(0.0, f64::max);
    Ok(LipVReport {
        theta,
        weighted_sup,
        holder_seminorm,
        weighted_finite: weighted_sup.is_finite(),
        holder_finite: holder_seminorm.is_finite(),
        pairs: sample.pairs.len(),
    })
}

/// `u(·,t)` with per-route diagnostics.
#[derive(Debug, Clone)]
pub struct CauchyStep {
    pub t: f64,
    pub field: Field,
    pub route: Route,
    /// Relative L² distance to the spectral solution (quadrature route only).
    pub spectral_gap: Option<f64>,
    pub warning: Option<String>,
}

/// Smallest quadrature node in `z`; below it `z^{t-1}` would overflow.
const Z_FLOOR: f64 = 1e-200;

/// Lower cut `z_min = max(ε^{1/t}, Z_FLOOR)` of the `z` integral.
fn z_min(t: f64) -> f64 {
    (f64::EPSILON.ln() / t).exp().max(Z_FLOOR)
}

/// `∫_0^a e^{-λz} z^{t-1} dz` by its power series, for `λa` well below 1.
fn head(lam: f64, a: f64, t: f64) -> f64 {
    let x = -lam * a;
    let mut term = a.powf(t);
    let mut sum = term / t;
    for k in 1..40 {
        term *= x / k as f64;
        let add = term / (k as f64 + t);
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `(1/Γ(t)) ∫_0^∞ e^{-λz} z^{t-1} dz` per eigenvalue: quadrature above
/// `z_min`, power series below.
pub fn cauchy_multipliers(lams: &[f64], t: f64, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    if t < MIN_QUADRATURE_TIME {
        return Err(Error::Domain(format!(
            "quadrature route needs t >= {MIN_QUADRATURE_TIME} (got {t}); use the spectral route"
        )));
    }
    let a = z_min(t);
    let g = gamma_function(t)?;
    let m = mode_quadrature(
        lams,
        |z, l| (-l * z).exp() * z.powf(t - 1.0),
        a,
        f64::INFINITY,
        spec,
    )?;
    Ok(m.into_iter()
        .zip(lams)
        .map(|(v, &l)| (v + head(l, a, t)) / g)
        .collect())
}

fn check_time(t: f64, theta: Option<f64>) -> Result<Option<String>> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!(
            "evolution time must lie in (0, 1), got {t}"
        )));
    }
    Ok(theta
        .filter(|&th| t >= 1.0 - th)
        .map(|th| format!("t = {t} is outside (0, 1 - theta) for theta = {th}")))
}

/// `u(·,t) = 𝓛^{-t} f` by the chosen route. `theta`, when given, is the
/// estimated Lipschitz exponent of `f`; times beyond `1 - θ` are solved but
/// carry a warning.
pub fn solve_cauchy(
    basis: &dyn SpectralBasis,
    f: &Field,
    t: f64,
    route: Route,
    theta: Option<f64>,
) -> Result<CauchyStep> {
    let warning = check_time(t, theta)?;
    let spectral = neg_power_apply(basis, t, f)?;
    match route {
        Route::Spectral => Ok(CauchyStep {
            t,
            field: spectral,
            route,
            spectral_gap: None,
            warning,
        }),
        Route::Quadrature => {
            let m = cauchy_multipliers(basis.eigenvalues(), t, &QuadratureSpec::with_tol(1e-13))?;
            let field = synthesize_with(basis, f, &m)?;
            let norm = spectral.l2_norm();
            let gap = field.sub(&spectral)?.l2_norm() / if norm > 0.0 { norm } else { 1.0 };
            Ok(CauchyStep {
                t,
                field,
                route,
                spectral_gap: Some(gap),
                warning,
            })
        }
    }
}

/// `u(x,t) = (1/Γ(t)) ∫_0^∞ T_z f(x) z^{t-1} dz` from kernel rows on the grid
/// of `f`; `x` must be a grid node. For closed-form kernels the row is
/// renormalized to the kernel mass, which keeps `T_z f(x) -> f(x)` once the Gaussian is narrower than a cell.
pub fn solve_cauchy_pointwise(
    ev: &dyn HeatKernel,
    f: &Field,
    x: &[f64],
    t: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_time(t, None)?;
    if t < MIN_QUADRATURE_TIME {
        return Err(Error::Domain(format!(
            "quadrature route needs t >= {MIN_QUADRATURE_TIME} (got {t}); use the spectral route"
        )));
    }
    let grid = f.grid();
    let cv = grid.cell_volume();
    let normalize = ev.is_closed_form();
    let mut err = None;
    let a = z_min(t);
    let fx = f
        .grid()
        .node_index(x)
        .map(|k| f.values()[k])
        .ok_or_else(|| Error::Domain(format!("{x:?} is not a grid node")))?;
    let g = gamma_function(t)?;
    let value = crate::numerics::time_quadrature(
        |z| {
            let tz = (|| -> Result<f64> {
                let row = ev.row(z, x, grid)?;
                let s: f64 = row.iter().zip(f.values()).map(|(k, v)| k * v).sum::<f64>() * cv;
                if normalize {
                    let total: f64 = row.iter().sum::<f64>() * cv;
                    if total > 0.0 {
                        return Ok(s / total * ev.mass(z, x)?);
                    }
                }
                Ok(s)
            })();
            match tz {
                Ok(v) => v * z.powf(t - 1.0),
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        },
        a,
        f64::INFINITY,
        spec,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    // T_z f(x) = f(x) + O(z) below the cut.
    Ok((value + fx * a.powf(t) / t) / g)
}

/// Solutions at several times, computed in parallel.
#[derive(Debug, Clone)]
pub struct EvolutionSolution {
    pub times: Vec<f64>,
    pub steps: Vec<CauchyStep>,
}

impl EvolutionSolution {
    pub fn fields(&self) -> impl Iterator<Item = &Field> {
        self.steps.iter().map(|s| &s.field)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.steps
            .iter()
            .filter_map(|s| s.warning.clone())
            .collect()
    }
}

pub fn evolve(
    basis: &dyn SpectralBasis,
    f: &Field,
    times: &[f64],
    route: Route,
    theta: Option<f64>,
) -> Result<EvolutionSolution> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "evolution times must be strictly increasing".into(),
        ));
    }
    let steps = times
        .par_iter()
        .map(|&t| solve_cauchy(basis, f, t, route, theta))
        .collect::<Result<Vec<_>>>()?;
    for s in &steps {
        s.field.check_finite()?;
    }
    Ok(EvolutionSolution {
        times: times.to_vec(),
        steps,
    })
}

/// `‖(u(t+δ) - u(t-δ))/(2δ) + (log 𝓛) u(t)‖₂`.
pub fn pde_residual(
    basis: &dyn SpectralBasis,
    f: &Field,
    t: f64,
    dt: f64,
    route: Route,
) -> Result<f64> {
    if !(dt > 0.0 && t - dt > 0.0) {
        return Err(Error::Domain(format!(
            "need 0 < t - dt, got t = {t}, dt = {dt}"
        )));
    }
    let up = solve_cauchy(basis, f, t + dt, route, None)?.field;
    let um = solve_cauchy(basis, f, t - dt, route, None)?.field;
    let u = solve_cauchy(basis, f, t, route, None)?.field;
    let du = up.sub(&um)?.scale(0.5 / dt);
    let log_u = apply_spectral(basis, &Log, &u)?;
    Ok(du.axpby(1.0, &log_u, 1.0)?.l2_norm())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialLimit {
    pub times: Vec<f64>,
    /// `max_x |u(x,t) - f(x)|` over the probe points, per time.
    pub errors: Vec<f64>,
    /// Errors strictly decrease over the second half of `times`.
    pub monotone_tail: bool,
}

fn initial_limit(times: &[f64], errors: Vec<f64>) -> InitialLimit {
    let tail = &errors[errors.len() / 2..];
    let start = if tail.len() < 2 && errors.len() >= 2 {
        errors.len() - 2
    } else {
        errors.len() / 2
    };
    InitialLimit {
        times: times.to_vec(),
        monotone_tail: errors[start..].windows(2).all(|w| w[1] < w[0]),
        errors,
    }
}

/// `|u(x,t) - f(x)|` at grid nodes `points` as `t` runs down `t_list`.
pub fn initial_limit_probe(
    basis: &dyn SpectralBasis,
    f: &Field,
    t_list: &[f64],
    points: &[usize],
    route: Route,
) -> Result<InitialLimit> {
    let errors = t_list
        .iter()
        .map(|&t| {
            let u = solve_cauchy(basis, f, t, route, None)?.field;
            Ok(points
                .iter()
                .map(|&k| (u.values()[k] - f.values()[k]).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(initial_limit(t_list, errors))
}

/// The same probe through the kernel route at a single node `x`.
pub fn initial_limit_probe_pointwise(
    ev: &dyn HeatKernel,
    f: &Field,
    t_list: &[f64],
    x: &[f64],
    spec: &QuadratureSpec,
) -> Result<InitialLimit> {
    let fx = f
        .grid()
        .node_index(x)
        .map(|k| f.values()[k])
        .ok_or_else(|| Error::Domain(format!("{x:?} is not a grid node")))?;
    let errors = t_list
        .iter()
        .map(|&t| Ok((solve_cauchy_pointwise(ev, f, x, t, spec)? - fx).abs()))
        .collect::<Result<Vec<_>>>()?;
    Ok(initial_limit(t_list, errors))
}

/// `‖𝓛^{-h}(𝓛^{-t} f) - 𝓛^{-(t+h)} f‖₂`; a zero time acts as the identity.
pub fn composition_check(
    basis: &dyn SpectralBasis,
    f: &Field,
    t: f64,
    h: f64,
    route: Route,
) -> Result<f64> {
    let step = |g: &Field, s: f64| -> Result<Field> {
        if s == 0.0 {
            Ok(g.clone())
        } else {
            Ok(solve_cauchy(basis, g, s, route, None)?.field)
        }
    };
    let nested = step(&step(f, t)?, h)?;
    let direct = step(f, t + h)?;
    Ok(nested.sub(&direct)?.l2_norm())
}

/// Sup-norm moduli of `u` and `∂_t u = -(log 𝓛) u` between consecutive
/// times of a solution.
pub fn time_moduli(
    basis: &dyn SpectralBasis,
    sol: &EvolutionSolution,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let du: Vec<Field> = sol
        .fields()
        .map(|u| apply_spectral(basis, &Log, u))
        .collect::<Result<_>>()?;
    let mut mu = Vec::new();
    let mut mdu = Vec::new();
    for k in 1..sol.steps.len() {
        mu.push(sol.steps[k].field.sub(&sol.steps[k - 1].field)?.sup_norm());
        mdu.push(du[k].sub(&du[k - 1])?.sup_norm());
    }
    Ok((mu, mdu))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipMappingReport {
    pub alpha: f64,
    pub input: LipVReport,
    /// `𝓛^{-α} f` measured at exponent `θ + 2α`.
    pub output: LipVReport,
    pub ratio: f64,
    /// `(s, ‖𝓛^{-s} f‖_{θ+s} / ‖f‖_θ)` for each sampled `s`.
    pub constants: Vec<(f64, f64)>,
    pub all_finite: bool,
}

/// Measures `Lip_V` norms of `f` and of `𝓛^{-α} f` and of `𝓛^{-s} f` for
/// `s` in `s_list`. Exponents that reach 1 are skipped in the `s` scan;
/// `θ + 2α` itself must stay below 1.
pub fn lip_mapping_probe(
    basis: &dyn SpectralBasis,
    f: &Field,
    alpha: f64,
    theta: f64,
    rho: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
    sample: &LipSample,
    s_list: &[f64],
) -> Result<LipMappingReport> {
    let input = lipv_seminorm(f, rho, theta, sample)?;
    let out_theta = theta + 2.0 * alpha;
    let output = lipv_seminorm(&neg_power_apply(basis, alpha, f)?, rho, out_theta, sample)?;
    let base = input.norm();
    let scale = if base > 0.0 { base } else { 1.0 };
    let constants = s_list
        .iter()
        .filter(|&&s| theta + s < 1.0)
        .map(|&s| {
            let r = lipv_seminorm(&neg_power_apply(basis, s, f)?, rho, theta + s, sample)?;
            Ok((s, r.norm() / scale))
        })
        .collect::<Result<Vec<_>>>()?;
    let all_finite = [&input, &output]
        .iter()
        .all(|r| r.weighted_finite && r.holder_finite)
        && constants.iter().all(|c| c.1.is_finite());
    Ok(LipMappingReport {
        alpha,
        ratio: output.norm() / scale,
        input,
        output,
        constants,
        all_finite,
    })
}
