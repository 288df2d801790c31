//! The time-integrated kernel `G(x, y) = ∫_0^∞ T_t(x, y)/t dt`, the
//! correction `K(x, r)` and the three-term pointwise formula
//!
//! `(log 𝓛) f(x) = -∫_{B(x,r)} (f(y) - f(x)) G(x, y) dy - ∫_{B(x,r)^c} f(y) G(x, y) dy - K(x, r) f(x)`.
//!
//! Spatial integrals are grid sums. Cells cut by the sphere `|y - x| = r`
//! are split by the fraction of their volume inside the ball, and `K` uses the
//! same weights, so the formula stays exactly consistent on the grid.

use crate::error::{Error, Result};
use crate::heat_kernel::HeatKernel;
use crate::numerics::{
    euler_gamma, time_quadrature, time_quadrature_vec, Field, Grid, QuadratureSpec,
};

/// Extra distance between `B(x, r)` and the edge of the grid box.
pub const BOX_MARGIN: f64 = 2.0;

/// Kernels with `√t` above this many grid spacings are resolved by grid sums.
const RESOLVED_SPACINGS: f64 = 3.0;
/// Per-panel absolute tolerance for the `K` integrands: ball masses carry
/// round-off of order machine epsilon, so tighter panels only chase noise.
const K_ABS_TOL: f64 = 1e-17;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeWeight {
    /// `∫_0^∞ T_t(x, y)/t dt`.
    Plain,
    /// `∫_0^∞ e^{-t} T_t(x, y)/t dt`.
    Exp,
}

impl TimeWeight {
    fn factor(self, t: f64) -> f64 {
        match self {
            TimeWeight::Plain => 1.0,
            TimeWeight::Exp => (-t).exp(),
        }
    }
}

fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `G(x, y)` for `x ≠ y`.
pub fn time_kernel_g(
    ev: &dyn HeatKernel,
    x: &[f64],
    y: &[f64],
    weight: TimeWeight,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let r2 = dist2(x, y);
    if r2 == 0.0 {
        return Err(Error::DiagonalSingularity);
    }
    let spec = spec.hints(Some(r2 / 200.0), spec.t_max_hint);
    let mut err = None;
    let v = time_quadrature(
        |t| match ev.eval(t, x, y) {
            Ok(k) => k * weight.factor(t) / t,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        0.0,
        f64::INFINITY,
        &spec,
    );
    if let Some(e) = err {
        return Err(e);
    }
    v
}

/// `G(x, y)` at every node `y` of `grid`, with the node at `x` (if any) set
/// to zero. Returns the values and the quadrature panel count.
pub fn time_kernel_row(
    ev: &dyn HeatKernel,
    grid: &Grid,
    x: &[f64],
    weight: TimeWeight,
    spec: &QuadratureSpec,
) -> Result<(Vec<f64>, usize, usize)> {
    let center = grid.node_index(x);
    let hmin = grid.spacing().iter().copied().fold(f64::INFINITY, f64::min);
    let spec = spec.hints(Some(hmin * hmin / 200.0), spec.t_max_hint);
    let mut err = None;
    let out = time_quadrature_vec(
        grid.len(),
        |t, o| match ev.row(t, x, grid) {
            Ok(row) => {
                let w = weight.factor(t) / t;
                for (oi, k) in o.iter_mut().zip(row) {
                    *oi = k * w;
                }
                if let Some(c) = center {
                    o[c] = 0.0;
                }
            }
            Err(e) => {
                err.get_or_insert(e);
                o.fill(0.0);
            }
        },
        0.0,
        f64::INFINITY,
        &spec,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let out = out?;
    Ok((out.value, out.panels, out.evaluations))
}

/// `K(x, r)` and its five parts.
#[derive(Debug, Clone, PartialEq)]
pub struct KFunctionResult {
    pub k_value: f64,
    /// `2 log ρ(x)`.
    pub log_rho: f64,
    /// `∫_0^{ρ²} ∫ (T_t^V(x, y) - T_t(x - y))/t dy dt = ∫_0^{ρ²} (T_t^V 1(x) - 1)/t dt`.
    pub perturbation: f64,
    /// `-∫_0^{ρ²} ∫_{B(x,r)^c} T_t^V(x, y)/t dy dt`.
    pub far_deficit: f64,
    /// `∫_{ρ²}^∞ ∫_{B(x,r)} T_t^V(x, y)/t dy dt`.
    pub large_time: f64,
    /// Euler's constant.
    pub gamma: f64,
    pub rho: f64,
    pub r: f64,
    pub panels: usize,
    pub evaluations: usize,
}

impl KFunctionResult {
    pub fn components(&self) -> [f64; 5] {
        [
            self.log_rho,
            self.perturbation,
            self.far_deficit,
            self.large_time,
            self.gamma,
        ]
    }
}

/// Sub-cells per axis when measuring how much of a cell lies in a ball.
const CELL_SUBDIVISION: usize = 16;

/// Fraction of each grid cell (the box of side `h` centred on a node) that
/// lies inside `B(x, r)`. Exact in 1D; midpoint sub-sampling otherwise.
pub fn ball_weights(grid: &Grid, x: &[f64], r: f64) -> Vec<f64> {
    let h = grid.spacing();
    let half_diag = 0.5 * h.iter().map(|a| a * a).sum::<f64>().sqrt();
    let d = grid.dim();
    grid.points()
        .map(|y| {
            let dist = dist2(&y, x).sqrt();
            if dist + half_diag <= r {
                return 1.0;
            }
            if dist - half_diag >= r {
                return 0.0;
            }
            if d == 1 {
                let lo = (y[0] - 0.5 * h[0]).max(x[0] - r);
                let hi = (y[0] + 0.5 * h[0]).min(x[0] + r);
                return ((hi - lo) / h[0]).max(0.0);
            }
            let m = CELL_SUBDIVISION;
            let total = m.pow(d as u32);
            let mut inside = 0usize;
            let mut z = vec![0.0; d];
            for k in 0..total {
                let mut rem = k;
                for j in 0..d {
                    let i = rem % m;
                    rem /= m;
                    z[j] = y[j] + h[j] * ((i as f64 + 0.5) / m as f64 - 0.5);
                }
                if dist2(&z, x) <= r * r {
                    inside += 1;
                }
            }
            inside as f64 / total as f64
        })
        .collect()
}

fn check_ball(grid: &Grid, x: &[f64], r: f64) -> Result<()> {
    if x.len() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: x.len(),
        });
    }
    let hmax = grid.spacing().iter().copied().fold(0.0, f64::max);
    if !(r >= 4.0 * hmax) {
        return Err(Error::Domain(format!(
            "ball radius {r} is below 4 grid spacings ({})",
            4.0 * hmax
        )));
    }
    let dist = grid.boundary_distance(x);
    if dist < r + BOX_MARGIN {
        return Err(Error::Domain(format!(
            "B(x, {r}) needs a margin of {BOX_MARGIN} inside the grid box; distance to the boundary is {dist}"
        )));
    }
    Ok(())
}

/// Splits `T_t(x, ·)` mass into the ball and its complement. Resolved kernels
/// are summed over the ball; sharply peaked ones over the complement, since
/// the grid cannot integrate a kernel narrower than a cell.
struct BallSplit<'a> {
    ev: &'a dyn HeatKernel,
    grid: &'a Grid,
    x: &'a [f64],
    weights: Vec<f64>,
    t_resolved: f64,
}

impl BallSplit<'_> {
    /// `(mass - 1, inside, outside)`.
    fn at(&self, t: f64) -> Result<(f64, f64, f64)> {
        let deficit = self.ev.mass_deficit(t, self.x)?;
        let mass = 1.0 + deficit;
        let row = self.ev.row(t, self.x, self.grid)?;
        let cv = self.grid.cell_volume();
        if t <= self.t_resolved {
            let outside: f64 = row
                .iter()
                .zip(&self.weights)
                .map(|(k, w)| k * (1.0 - w))
                .sum::<f64>()
                * cv;
            Ok((deficit, mass - outside, outside))
        } else {
            let inside: f64 = row
                .iter()
                .zip(&self.weights)
                .map(|(k, w)| k * w)
                .sum::<f64>()
                * cv;
            Ok((deficit, inside, mass - inside))
        }
    }
}

/// `K(x, r)` on `grid` with split point `ρ(x)² = rho_x²`.
pub fn k_function(
    ev: &dyn HeatKernel,
    grid: &Grid,
    rho_x: f64,
    x: &[f64],
    r: f64,
    spec: &QuadratureSpec,
) -> Result<KFunctionResult> {
    if !(rho_x > 0.0) || !rho_x.is_finite() {
        return Err(Error::Domain(format!(
            "critical radius must be positive, got {rho_x}"
        )));
    }
    check_ball(grid, x, r)?;
    let hmax = grid.spacing().iter().copied().fold(0.0, f64::max);
    let split = BallSplit {
        ev,
        grid,
        x,
        weights: ball_weights(grid, x, r),
        t_resolved: (RESOLVED_SPACINGS * hmax).powi(2),
    };
    let rho2 = rho_x * rho_x;
    let spec = &QuadratureSpec {
        abs_tol: spec.abs_tol.max(K_ABS_TOL),
        ..*spec
    };
    let mut err = None;
    let small = time_quadrature_vec(
        2,
        |t, o| match split.at(t) {
            Ok((deficit, _, outside)) => {
                o[0] = deficit / t;
                o[1] = -outside / t;
            }
            Err(e) => {
                err.get_or_insert(e);
                o.fill(0.0);
            }
        },
        0.0,
        rho2,
        &spec.hints(Some(rho2.min(hmax * hmax) / 100.0), None),
    );
    if let Some(e) = err.take() {
        return Err(e);
    }
    let small = small?;
    let large = time_quadrature_vec(
        1,
        |t, o| match split.at(t) {
            Ok((_, inside, _)) => o[0] = inside / t,
            Err(e) => {
                err.get_or_insert(e);
                o[0] = 0.0;
            }
        },
        rho2,
        f64::INFINITY,
        spec,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let large = large?;
    let mut res = KFunctionResult {
        k_value: 0.0,
        log_rho: 2.0 * rho_x.ln(),
        perturbation: small.value[0],
        far_deficit: small.value[1],
        large_time: large.value[0],
        gamma: euler_gamma(),
        rho: rho_x,
        r,
        panels: small.panels + large.panels,
        evaluations: small.evaluations + large.evaluations,
    };
    res.k_value = res.components().iter().sum();
    Ok(res)
}

/// `(log 𝓛) f(x)` split into its three terms.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseLogResult {
    pub value: f64,
    /// `-∫_{B(x,r)} (f(y) - f(x)) G(x, y) dy`.
    pub local_term: f64,
    /// `-∫_{B(x,r)^c} f(y) G(x, y) dy`.
    pub far_term: f64,
    /// `-K(x, r) f(x)`.
    pub k_term: f64,
    pub k: KFunctionResult,
    /// Panels and kernel evaluations of the `G` quadrature.
    pub g_panels: usize,
    pub g_evaluations: usize,
    /// Size estimate of the skipped centre cell, `max_j |∂_jj f(x)| h²/8`.
    pub center_cell_bound: f64,
    /// Nodes whose cell meets the ball.
    pub ball_nodes: usize,
}

/// Pointwise `(log 𝓛) f(x)` for samples `f` on a grid; `x` must be a node.
pub fn pointwise_log(
    ev: &dyn HeatKernel,
    rho_x: f64,
    f: &Field,
    x: &[f64],
    r: f64,
    spec: &QuadratureSpec,
) -> Result<PointwiseLogResult> {
    let grid = f.grid();
    f.check_finite()?;
    check_ball(grid, x, r)?;
    let center = grid.node_index(x).ok_or_else(|| {
        Error::Domain(format!(
            "pointwise evaluation point {x:?} is not a grid node"
        ))
    })?;
    let k = k_function(ev, grid, rho_x, x, r, spec)?;
    let (g, g_panels, g_evaluations) = time_kernel_row(ev, grid, x, TimeWeight::Plain, spec)?;
    let weights = ball_weights(grid, x, r);
    let fx = f.values()[center];
    let cv = grid.cell_volume();
    let mut local = 0.0;
    let mut far = 0.0;
    for ((&fy, &gy), &w) in f.values().iter().zip(&g).zip(&weights) {
        local -= w * (fy - fx) * gy * cv;
        far -= (1.0 - w) * fy * gy * cv;
    }
    let k_term = -k.k_value * fx;
    Ok(PointwiseLogResult {
        value: local + far + k_term,
        local_term: local,
        far_term: far,
        k_term,
        k,
        g_panels,
        g_evaluations,
        center_cell_bound: center_cell_bound(f, center),
        ball_nodes: weights.iter().filter(|&&w| w > 0.0).count(),
    })
}

fn center_cell_bound(f: &Field, center: usize) -> f64 {
    let grid = f.grid();
    let idx = grid.multi_index(center);
    let mut worst: f64 = 0.0;
    for j in 0..grid.dim() {
        if idx[j] == 0 || idx[j] + 1 >= grid.counts()[j] {
            continue;
        }
        let mut lo = idx.clone();
        lo[j] -= 1;
        let mut hi = idx.clone();
        hi[j] += 1;
        let h = grid.spacing()[j];
        let v = f.values();
        let d2 = (v[grid.flat_index(&lo)] - 2.0 * v[center] + v[grid.flat_index(&hi)]) / (h * h);
        worst = worst.max(d2.abs());
    }
    let hmax = grid.spacing().iter().copied().fold(0.0, f64::max);
    worst * hmax * hmax / 8.0
}

/// The pointwise formula for a Hölder-continuous `f` that need not have
/// compact support, given as a callable and sampled on `grid`.
///
/// The Hölder quotient `|f(x + s e_j) - f(x)|/s^θ` is tracked as `s` shrinks
/// from `r` to below the grid spacing; if it grows faster than `s^{-1/4}` on
/// the finest scales, `f` is not `θ`-Hölder at `x` and an error is returned.
#[allow(clippy::too_many_arguments)]
pub fn extended_pointwise(
    ev: &dyn HeatKernel,
    rho_x: f64,
    f: &dyn Fn(&[f64]) -> f64,
    grid: &Grid,
    x: &[f64],
    r: f64,
    theta: f64,
    spec: &QuadratureSpec,
) -> Result<PointwiseLogResult> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Domain(format!(
            "Hölder exponent must lie in (0, 1], got {theta}"
        )));
    }
    let fx = f(x);
    let hmin = grid.spacing().iter().copied().fold(f64::INFINITY, f64::min);
    let mut quotients = Vec::new();
    let mut s = r;
    while s > hmin / 8.0 {
        let mut q: f64 = 0.0;
        for j in 0..x.len() {
            for sign in [-1.0, 1.0] {
                let mut y = x.to_vec();
                y[j] += sign * s;
                q = q.max((f(&y) - fx).abs() / s.powf(theta));
            }
        }
        quotients.push(q);
        s /= 2.0;
    }
    if quotients.iter().any(|q| !q.is_finite()) {
        return Err(Error::NonFinite(0));
    }
    // Slope of log q against log s over the finest scales; q ~ s^{-κ} with
    // κ > 1/4 means the quotient blows up.
    let tail: Vec<(f64, f64)> = quotients
        .iter()
        .enumerate()
        .rev()
        .take(4)
        .filter(|(_, &q)| q > 0.0)
        .map(|(k, &q)| ((r / 2f64.powi(k as i32)).ln(), q.ln()))
        .collect();
    if tail.len() >= 2 {
        let n = tail.len() as f64;
        let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
        let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / tail.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        if slope < -0.25 {
            return Err(Error::Domain(format!(
                "Hölder seminorm estimate diverges at x = {x:?} for theta = {theta}"
            )));
        }
    }
    let field = Field::from_fn(grid, f);
    let d = grid.dim() as i32;
    let weighted: f64 = grid
        .points()
        .zip(field.values())
        .map(|(y, v)| v.abs() * (1.0 + y.iter().map(|a| a * a).sum::<f64>().sqrt()).powi(-d))
        .sum::<f64>()
        * grid.cell_volume();
    if !weighted.is_finite() {
        return Err(Error::NonFinite(0));
    }
    pointwise_log(ev, rho_x, &field, x, r, spec)
}
