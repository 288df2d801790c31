//! Empirical probes of the heat-kernel bounds. Each probe fits the free
//! constants of a bound on a sample and reports the worst violation.

use rayon::prelude::*;

use super::{free_kernel, GaussianFree, HeatKernel};
use crate::error::{Error, Result};
use crate::numerics::Grid;
use crate::probe::{BoundId, BoundProbeReport};

/// A point `(t, x, y)` at which a kernel bound is tested.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// A point `(t, x, h, y)` for the Hölder bound.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderSample {
    pub t: f64,
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    pub y: Vec<f64>,
}

fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `|Σ_z K(u, z, y) K(s, x, z) h^d - K(u + s, x, y)|` on `grid`.
pub fn chapman_kolmogorov_check(
    ev: &dyn HeatKernel,
    grid: &Grid,
    u: f64,
    s: f64,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    let ry = ev.row(u, y, grid)?;
    let rx = ev.row(s, x, grid)?;
    let conv: f64 = ry.iter().zip(&rx).map(|(a, b)| a * b).sum::<f64>() * grid.cell_volume();
    Ok((conv - ev.eval(u + s, x, y)?).abs())
}

/// Checks `0 ≤ T_t^V(x, y) ≤ T_t(x - y)`. The violation of a sample is
/// `max(T^V - T, -T^V, 0)·t^{d/2}`, so the finite-difference tolerance
/// `1e-6·t^{-d/2}` becomes a plain `1e-6` threshold on `max_violation`.
pub fn fk_domination_probe(
    ev: &dyn HeatKernel,
    samples: &[KernelSample],
) -> Result<BoundProbeReport> {
    let d = ev.dim();
    let rows: Vec<(f64, f64, f64)> = samples
        .par_iter()
        .map(|s| {
            let k = ev.eval(s.t, &s.x, &s.y)?;
            let free = free_kernel(d, s.t, dist2(&s.x, &s.y));
            Ok((k - free, -k, s.t.powf(d as f64 / 2.0)))
        })
        .collect::<Result<_>>()?;
    let mut report = BoundProbeReport::new(
        BoundId::FkDomination,
        samples.len(),
        format!("0 <= T_t^V <= T_t for kernel {}", ev.name()),
    );
    let max_excess = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let max_negative = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    report.set("max_excess", max_excess);
    report.set("max_negative", max_negative);
    report.set("tol_fd_scaled", 1e-6);
    report.max_violation = rows
        .iter()
        .map(|r| r.0.max(r.1).max(0.0) * r.2)
        .fold(0.0, f64::max);
    Ok(report)
}

/// Smallest `C_N` with
/// `T_t^V(x, y) ≤ C_N t^{-d/2} e^{-|x-y|²/(5t)} (1 + √t/ρ(x) + √t/ρ(y))^{-N}`
/// on every sample, for each `N` in `ns`.
pub fn decay_bound_fit(
    ev: &dyn HeatKernel,
    rho: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
    ns: &[u32],
    samples: &[KernelSample],
) -> Result<BoundProbeReport> {
    let d = ev.dim() as f64;
    let rows: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|s| {
            let k = ev.eval(s.t, &s.x, &s.y)?;
            let base = k * s.t.powf(d / 2.0) * (dist2(&s.x, &s.y) / (5.0 * s.t)).exp();
            let st = s.t.sqrt();
            let factor = 1.0 + st / rho(&s.x)? + st / rho(&s.y)?;
            Ok((base, factor))
        })
        .collect::<Result<_>>()?;
    let mut report = BoundProbeReport::new(
        BoundId::Decay,
        samples.len(),
        format!(
            "Gaussian decay with critical-radius factor for kernel {}",
            ev.name()
        ),
    );
    for &n in ns {
        let c = rows
            .iter()
            .map(|(b, f)| b * f.powi(n as i32))
            .fold(0.0, f64::max);
        if !c.is_finite() {
            return Err(Error::NonFinite(0));
        }
        report.set(&format!("C_{n}"), c);
    }
    Ok(report)
}

/// Gaussian exponent and power of the critical-radius factor used by the
/// Hölder envelope.
const HOLDER_C: f64 = 1.0 / 8.0;
const HOLDER_N: i32 = 1;

/// Fits `η` and `C` in
/// `|T_t(x+h, y) - T_t(x, y)| ≤ C t^{-d/2} (|h|/√t)^η e^{-c|x-y|²/t} (1 + √t/ρ(x) + √t/ρ(y))^{-N}`.
///
/// `η` is the slope of the per-decade maxima of the normalized difference
/// against `|h|/√t`, clipped to `(0, 2]`; `C` is then the smallest constant
/// covering every sample.
pub fn holder_probe(
    ev: &dyn HeatKernel,
    rho: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
    samples: &[HolderSample],
) -> Result<BoundProbeReport> {
    let d = ev.dim() as f64;
    for s in samples {
        if norm(&s.h) >= s.t.sqrt() {
            return Err(Error::Domain(format!(
                "Hölder sample with |h| = {} >= sqrt(t) = {}",
                norm(&s.h),
                s.t.sqrt()
            )));
        }
    }
    // (log10 |h|/√t, normalized |ΔK|)
    let rows: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|s| {
            let xh: Vec<f64> = s.x.iter().zip(&s.h).map(|(a, b)| a + b).collect();
            let diff = (ev.eval(s.t, &xh, &s.y)? - ev.eval(s.t, &s.x, &s.y)?).abs();
            let st = s.t.sqrt();
            let factor = 1.0 + st / rho(&s.x)? + st / rho(&s.y)?;
            let env = s.t.powf(-d / 2.0)
                * (-HOLDER_C * dist2(&s.x, &s.y) / s.t).exp()
                * factor.powi(-HOLDER_N);
            Ok(((norm(&s.h) / st).log10(), diff / env))
        })
        .collect::<Result<_>>()?;
    let active: Vec<(f64, f64)> = rows
        .iter()
        .copied()
        .filter(|(l, q)| l.is_finite() && *q > 0.0)
        .collect();
    let mut report = BoundProbeReport::new(
        BoundId::Holder,
        samples.len(),
        format!("Hölder continuity in x for kernel {}", ev.name()),
    );
    report.set("c", HOLDER_C);
    report.set("N", HOLDER_N as f64);
    if active.is_empty() {
        report.notes.push("all differences vanish".into());
        report.set("C", 0.0);
        return Ok(report);
    }
    let mut bins: std::collections::BTreeMap<i64, f64> = std::collections::BTreeMap::new();
    for &(l, q) in &active {
        let key = (l * 2.0).floor() as i64;
        let e = bins.entry(key).or_insert(f64::NEG_INFINITY);
        *e = e.max(q.log10());
    }
    if bins.len() < 2 {
        return Err(Error::DegenerateFit(
            "Hölder fit needs |h|/sqrt(t) spread over at least two half-decades".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = bins
        .iter()
        .map(|(&k, &v)| ((k as f64 + 0.5) / 2.0, v))
        .collect();
    let (slope, _, _) = least_squares(&pts);
    let eta = slope.clamp(1e-3, 2.0);
    let c = active
        .iter()
        .map(|&(l, q)| q / 10f64.powf(eta * l))
        .fold(0.0, f64::max);
    report.set("eta", eta);
    report.set("C", c);
    Ok(report)
}

/// Slope, intercept and RMS residual of a least-squares line.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icept = my - slope * mx;
    let rms = (pts
        .iter()
        .map(|p| (p.1 - icept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, icept, rms)
}

/// Fits `δ` and a Gaussian envelope `ω(z) = C e^{-|z|²/6}` in
/// `|T_t^V(x, y) - T_t(x - y)| ≤ (√t/ρ(x))^δ t^{-d/2} ω((x - y)/√t)` for
/// `t` in `t_grid ⊂ (0, ρ(x)²]`, with the supremum over `ys`.
pub fn perturbation_probe(
    ev: &dyn HeatKernel,
    x: &[f64],
    rho_x: f64,
    t_grid: &[f64],
    ys: &[Vec<f64>],
) -> Result<BoundProbeReport> {
    if t_grid.len() < 4 {
        return Err(Error::DegenerateFit(format!(
            "perturbation fit needs at least 4 t-points, got {}",
            t_grid.len()
        )));
    }
    if !(rho_x > 0.0) || !rho_x.is_finite() {
        return Err(Error::Domain(format!(
            "critical radius must be positive, got {rho_x}"
        )));
    }
    if let Some(&t) = t_grid
        .iter()
        .find(|&&t| !(t > 0.0) || t > rho_x * rho_x * (1.0 + 1e-12))
    {
        return Err(Error::Domain(format!("t = {t} outside (0, rho(x)^2]")));
    }
    let free = GaussianFree { dim: ev.dim() };
    let d = ev.dim() as f64;
    // per t: (sup_y |diff| t^{d/2}, per-y (|diff| t^{d/2}, |x-y|²/t))
    let per_t: Vec<(f64, Vec<(f64, f64)>)> = t_grid
        .par_iter()
        .map(|&t| {
            let mut rows = Vec::with_capacity(ys.len());
            for y in ys {
                let diff = (ev.eval(t, x, y)? - free.eval(t, x, y)?).abs() * t.powf(d / 2.0);
                rows.push((diff, dist2(x, y) / t));
            }
            let sup = rows.iter().map(|r| r.0).fold(0.0, f64::max);
            Ok((sup, rows))
        })
        .collect::<Result<_>>()?;
    let mut report = BoundProbeReport::new(
        BoundId::Perturbation,
        t_grid.len() * ys.len(),
        format!(
            "perturbation of the free kernel at x = {x:?}, rho = {rho_x}, Gaussian envelope exp(-|z|^2/6)"
        ),
    );
    report.set("rho", rho_x);
    let scale = 1e-14 * per_t.iter().map(|p| p.0).fold(0.0, f64::max).max(1e-300);
    if per_t.iter().all(|p| p.0 <= 1e-300) {
        report
            .notes
            .push("identical kernels: delta fit skipped".into());
        return Ok(report);
    }
    let pts: Vec<(f64, f64)> = t_grid
        .iter()
        .zip(&per_t)
        .filter(|(_, p)| p.0 > scale)
        .map(|(&t, p)| ((t.sqrt() / rho_x).ln(), p.0.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::DegenerateFit(
            "fewer than 4 t-points with a nonzero difference".into(),
        ));
    }
    let (slope, _, rms) = least_squares(&pts);
    let delta = slope;
    let c_omega = t_grid
        .iter()
        .zip(&per_t)
        .flat_map(|(&t, p)| {
            let r = (t.sqrt() / rho_x).powf(delta);
            p.1.iter()
                .map(move |&(diff, z2)| diff * (z2 / 6.0).exp() / r)
        })
        .fold(0.0, f64::max);
    report.set("delta", delta);
    report.set("fit_residual", rms);
    report.set("C_omega", c_omega);
    if delta <= 0.0 {
        report
            .notes
            .push(format!("fitted delta {delta} is not positive"));
    }
    Ok(report)
}
