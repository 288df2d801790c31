//! Quadrature over `(0, inf)` and its subintervals.
//!
//! Every integral runs in the variable `u = ln t`, so `dt = e^u du`. Algebraic
//! behaviour `t^p` at either end becomes exponential decay in `u`, and
//! `exp(-c/t)` at `t -> 0` becomes double-exponential decay. The `u` axis is
//! covered by composite Gauss-Legendre panels; open ends are extended panel by
//! panel until the remaining tail is negligible.

use std::sync::OnceLock;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    pub t_min_hint: Option<f64>,
    pub t_max_hint: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-300,
            max_panels: 4000,
            t_min_hint: None,
            t_max_hint: None,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn hints(mut self, t_min: Option<f64>, t_max: Option<f64>) -> Self {
        self.t_min_hint = t_min;
        self.t_max_hint = t_max;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Domain(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_panels == 0 {
            return Err(Error::Domain("max_panels must be at least 1".into()));
        }
        for h in [self.t_min_hint, self.t_max_hint].into_iter().flatten() {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Domain(
                    "time hints must be positive and finite".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Result of a (vector-valued) time quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureOutcome {
    pub value: Vec<f64>,
    /// Number of accepted panels (after subdivision).
    pub panels: usize,
    pub evaluations: usize,
    /// Max-norm of the outermost panel contributions on each open end.
    pub last_panel: f64,
    /// Integrated range in `u = ln t`.
    pub u_range: (f64, f64),
}

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on [-1, 1] via Newton iteration on P_n.
fn gauss_legendre(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        dp = if dp == 0.0 {
            1.0
        } else {
            n as f64 * (x * p1 - p0) / (x * x - 1.0)
        };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

fn rules() -> &'static (Rule, Rule) {
    static RULES: OnceLock<(Rule, Rule)> = OnceLock::new();
    RULES.get_or_init(|| (gauss_legendre(12), gauss_legendre(24)))
}

/// Fixed-order Gauss-Legendre on `[a, b]` for a scalar integrand.
pub fn gauss_legendre_fixed(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let rule = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Integrator<'a, G> {
    len: usize,
    g: &'a mut G,
    spec: &'a QuadratureSpec,
    buf: Vec<f64>,
    evaluations: usize,
    panels: usize,
    // Sum of accepted |panel| integrals; keeps round-off in tiny panels from
    // forcing endless bisection.
    total_abs: f64,
}

impl<G: FnMut(f64, &mut [f64])> Integrator<'_, G> {
    /// Adds `∫ g(e^u) e^u du` over `[u0, u1]` to `out`; returns the panel's
    /// max-norm contribution.
    fn panel(&mut self, u0: f64, u1: f64, out: &mut [f64], depth: usize) -> Result<f64> {
        let (lo, hi) = rules();
        let c = 0.5 * (u0 + u1);
        let h = 0.5 * (u1 - u0);
        let mut q_lo = vec![0.0; self.len];
        let mut q_hi = vec![0.0; self.len];
        let mut q_abs = vec![0.0; self.len];
        for (rule, acc, abs) in [(lo, &mut q_lo, None), (hi, &mut q_hi, Some(&mut q_abs))] {
            let mut abs = abs;
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                let u = c + h * x;
                let t = u.exp();
                (self.g)(t, &mut self.buf);
                self.evaluations += 1;
                let jac = w * h * t;
                for (k, v) in self.buf.iter().enumerate() {
                    acc[k] += jac * v;
                    if let Some(a) = abs.as_deref_mut() {
                        a[k] += jac * v.abs();
                    }
                }
            }
        }
        if let Some(i) = q_hi.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let err = q_hi
            .iter()
            .zip(&q_lo)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = max_abs(&q_abs);
        let accept = err <= (self.spec.rel_tol * scale.max(self.total_abs)).max(self.spec.abs_tol)
            || depth >= 24
            || h < 1e-6;
        if accept {
            self.panels += 1;
            self.total_abs += scale;
            if self.panels > self.spec.max_panels {
                return Err(Error::QuadratureNonConvergence {
                    panels: self.panels,
                    partial: out.first().copied().unwrap_or(0.0),
                    last_panel: max_abs(&q_hi),
                });
            }
            for (o, q) in out.iter_mut().zip(&q_hi) {
                *o += q;
            }
            Ok(max_abs(&q_hi))
        } else {
            let mut part = vec![0.0; self.len];
            let a = self.panel(u0, c, &mut part, depth + 1)?;
            let b = self.panel(c, u1, &mut part, depth + 1)?;
            for (o, q) in out.iter_mut().zip(&part) {
                *o += q;
            }
            Ok(a.max(b).max(max_abs(&part)))
        }
    }

    /// Extends from `start` in direction `dir` (+1 or -1) until the tail is
    /// negligible or `limit` is reached.
    fn extend(
        &mut self,
        start: f64,
        dir: f64,
        limit: Option<f64>,
        acc: &mut [f64],
    ) -> Result<(f64, f64)> {
        let mut u = start;
        let mut width = 1.0;
        let mut prev: Option<f64> = None;
        let mut last;
        let mut small_streak = 0;
        loop {
            let mut next = u + dir * width;
            let mut final_panel = false;
            if let Some(l) = limit {
                if (next - l) * dir >= 0.0 {
                    next = l;
                    final_panel = true;
                }
            }
            let (a, b) = if dir > 0.0 { (u, next) } else { (next, u) };
            let mut contrib = vec![0.0; self.len];
            let c = self.panel(a, b, &mut contrib, 0)?;
            for (o, q) in acc.iter_mut().zip(&contrib) {
                *o += q;
            }
            last = c;
            u = next;
            if final_panel {
                return Ok((u, last));
            }
            let tol = (self.spec.rel_tol * max_abs(acc)).max(self.spec.abs_tol);
            let tail = match prev {
                Some(_) if c == 0.0 => 0.0,
                Some(p) if c < p => c * (c / p) / (1.0 - c / p),
                Some(_) => f64::INFINITY,
                None => f64::INFINITY,
            };
            // A contribution far below tolerance is round-off, whatever its trend.
            if c <= tol && (tail <= tol || c <= 1e-3 * tol) {
                small_streak += 1;
                if small_streak >= 2 {
                    return Ok((u, last));
                }
            } else if c <= tol {
                // Sub-tolerance contributions that stop decaying are a
                // round-off floor.
                small_streak += 1;
                if small_streak >= 6 {
                    return Ok((u, last));
                }
            } else {
                small_streak = 0;
            }
            if self.panels > self.spec.max_panels {
                return Err(Error::QuadratureNonConvergence {
                    panels: self.panels,
                    partial: acc.first().copied().unwrap_or(0.0),
                    last_panel: last,
                });
            }
            prev = Some(c);
            width = (width * 1.25).min(4.0);
        }
    }
}

/// Vector-valued `∫_a^b g(t) dt` with `0 <= a < b <= inf`. `g(t, out)` writes
/// the `len` integrand components at `t` into `out`.
pub fn time_quadrature_vec<G>(
    len: usize,
    mut g: G,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<QuadratureOutcome>
where
    G: FnMut(f64, &mut [f64]),
{
    spec.validate()?;
    if !(a >= 0.0 && b > a) || a.is_nan() || b.is_nan() {
        return Err(Error::Domain(format!("invalid time interval ({a}, {b})")));
    }
    let ua = if a > 0.0 { Some(a.ln()) } else { None };
    let ub = if b.is_finite() { Some(b.ln()) } else { None };

    // Initial range, fully integrated with unit panels.
    let mut lo = spec.t_min_hint.map(f64::ln).unwrap_or(-3.0);
    let mut hi = spec.t_max_hint.map(f64::ln).unwrap_or(3.0);
    if hi <= lo {
        hi = lo + 1.0;
    }
    match (ua, ub) {
        (Some(x), Some(y)) => {
            lo = x;
            hi = y;
        }
        (Some(x), None) => {
            lo = x;
            hi = hi.max(x + 1.0);
        }
        (None, Some(y)) => {
            hi = y;
            lo = lo.min(y - 1.0);
        }
        (None, None) => {}
    }

    let mut it = Integrator {
        len,
        g: &mut g,
        spec,
        buf: vec![0.0; len],
        evaluations: 0,
        panels: 0,
        total_abs: 0.0,
    };
    let mut acc = vec![0.0; len];
    let n_init = ((hi - lo).ceil() as usize).max(1);
    let step = (hi - lo) / n_init as f64;
    for k in 0..n_init {
        let u0 = lo + k as f64 * step;
        let u1 = if k + 1 == n_init { hi } else { u0 + step };
        it.panel(u0, u1, &mut acc, 0)?;
    }
    let mut last_panel: f64 = 0.0;
    let mut range = (lo, hi);
    if ub.is_none() {
        let (u, l) = it.extend(hi, 1.0, None, &mut acc)?;
        range.1 = u;
        last_panel = last_panel.max(l);
    }
    if ua.is_none() {
        let (u, l) = it.extend(lo, -1.0, None, &mut acc)?;
        range.0 = u;
        last_panel = last_panel.max(l);
    }
    Ok(QuadratureOutcome {
        value: acc,
        panels: it.panels,
        evaluations: it.evaluations,
        last_panel,
        u_range: range,
    })
}

/// Scalar `∫_a^b g(t) dt`, `0 <= a < b <= inf`.
pub fn time_quadrature(
    mut g: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let out = time_quadrature_vec(1, |t, o| o[0] = g(t), a, b, spec)?;
    Ok(out.value[0])
}

/// `∫_0^∞ g(t) dt` for `g` continuous on `(0, ∞)`; the caller guarantees
/// integrable behaviour at both ends.
pub fn improper_time_quadrature(g: impl FnMut(f64) -> f64, spec: &QuadratureSpec) -> Result<f64> {
    time_quadrature(g, 0.0, f64::INFINITY, spec)
}
