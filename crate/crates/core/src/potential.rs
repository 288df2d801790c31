//! Potentials, reverse-Hölder diagnostics and the critical radius ρ(x).

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::qmc::unit_ball_points;
use crate::numerics::special::unit_ball_volume;
use crate::probe::{BoundId, BoundProbeReport};
use crate::registry::{Params, Registry};

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type AxisFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Nonnegative potential V on R^d.
#[derive(Clone)]
pub struct Potential {
    name: String,
    dim: usize,
    eval: PointFn,
    separable_parts: Option<Vec<AxisFn>>,
    known_rho: Option<PointFn>,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("separable", &self.separable_parts.is_some())
            .field("known_rho", &self.known_rho.is_some())
            .finish()
    }
}

/// Deterministic validation sample in [-5, 5]^d.
fn validation_sample(dim: usize) -> Vec<Vec<f64>> {
    unit_ball_points(dim, 100, 0)
        .into_iter()
        .map(|p| p.into_iter().map(|v| 5.0 * v).collect())
        .collect()
}

impl Potential {
    /// General constructor; checks nonnegativity, finiteness, non-vanishing
    /// and consistency of the separable parts on a fixed sample.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        eval: PointFn,
        separable_parts: Option<Vec<AxisFn>>,
        known_rho: Option<PointFn>,
    ) -> Result<Self> {
        let p = Self {
            name: name.into(),
            dim,
            eval,
            separable_parts,
            known_rho,
        };
        p.validate(false)?;
        Ok(p)
    }

    fn validate(&self, allow_zero: bool) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Domain(
                "potential dimension must be at least 1".into(),
            ));
        }
        if let Some(parts) = &self.separable_parts {
            if parts.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: parts.len(),
                });
            }
        }
        let mut any_positive = false;
        for x in validation_sample(self.dim) {
            let v = (self.eval)(&x);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!(
                    "potential `{}` is negative or non-finite at {x:?}",
                    self.name
                )));
            }
            any_positive |= v > 0.0;
            if let Some(parts) = &self.separable_parts {
                let s: f64 = parts.iter().zip(&x).map(|(p, &xj)| p(xj)).sum();
                if (s - v).abs() >= 1e-12 * (1.0 + v.abs()) {
                    return Err(Error::Domain(format!(
                        "separable parts of `{}` do not sum to V at {x:?}",
                        self.name
                    )));
                }
            }
        }
        if !any_positive && !allow_zero {
            return Err(Error::Domain(format!(
                "potential `{}` vanishes on the whole sample",
                self.name
            )));
        }
        Ok(())
    }

    /// `V(x) = Σ_j (a_j x_j² + b_j)`, covering every preset. The closed-form
    /// critical radius solves `ω_d r² (Σ a_j x_j² + Σ b_j + Σ a_j r²/(d+2)) = 1`.
    pub fn quadratic(name: impl Into<String>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let dim = a.len();
        if b.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: b.len(),
            });
        }
        if a.iter().chain(&b).any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(Error::Domain(
                "quadratic potential coefficients must be >= 0".into(),
            ));
        }
        let (a2, b2) = (a.clone(), b.clone());
        let eval: PointFn = Arc::new(move |x: &[f64]| {
            x.iter()
                .zip(a2.iter().zip(&b2))
                .map(|(&xj, (&aj, &bj))| aj * xj * xj + bj)
                .sum()
        });
        let parts: Vec<AxisFn> = a
            .iter()
            .zip(&b)
            .map(|(&aj, &bj)| Arc::new(move |x: f64| aj * x * x + bj) as AxisFn)
            .collect();
        let omega = unit_ball_volume(dim);
        let a_sum: f64 = a.iter().sum();
        let b_sum: f64 = b.iter().sum();
        let a3 = a.clone();
        let known_rho: PointFn = Arc::new(move |x: &[f64]| {
            let c1 = omega * (a3.iter().zip(x).map(|(aj, xj)| aj * xj * xj).sum::<f64>() + b_sum);
            let c2 = omega * a_sum / (dim as f64 + 2.0);
            // c2 s² + c1 s - 1 = 0 with s = r²
            let s = if c2 == 0.0 {
                1.0 / c1
            } else {
                2.0 / (c1 + (c1 * c1 + 4.0 * c2).sqrt())
            };
            s.sqrt()
        });
        let p = Self {
            name: name.into(),
            dim,
            eval,
            separable_parts: Some(parts),
            known_rho: if a_sum + b_sum > 0.0 {
                Some(known_rho)
            } else {
                None
            },
        };
        p.validate(a_sum + b_sum == 0.0)?;
        Ok(p)
    }

    /// V ≡ 0 (free Laplacian). ρ is infinite for it.
    pub fn zero(dim: usize) -> Result<Self> {
        Self::quadratic("zero", vec![0.0; dim], vec![0.0; dim])
    }

    /// V ≡ 1.
    pub fn one(dim: usize) -> Result<Self> {
        Self::constant(dim, 1.0)
    }

    /// V ≡ m², the relativistic shift −Δ + m².
    pub fn constant(dim: usize, m2: f64) -> Result<Self> {
        if !(m2 > 0.0) {
            return Err(Error::Domain(format!(
                "constant potential needs m2 > 0, got {m2}"
            )));
        }
        let mut b = vec![0.0; dim];
        if dim > 0 {
            b.iter_mut().for_each(|v| *v = m2 / dim as f64);
        }
        let p = Self::quadratic(format!("const:m2={m2}"), vec![0.0; dim], b)?;
        // Keep evaluation exact rather than a sum of m2/d pieces.
        Ok(Self {
            eval: Arc::new(move |_x: &[f64]| m2),
            ..p
        })
    }

    /// V(x) = |x|².
    pub fn harmonic(dim: usize) -> Result<Self> {
        Self::quadratic("harmonic", vec![1.0; dim], vec![0.0; dim])
    }

    /// V(x) = |x|² + c.
    pub fn harmonic_shift(dim: usize, c: f64) -> Result<Self> {
        if !(c >= 0.0) {
            return Err(Error::Domain(format!(
                "harmonic_shift needs c >= 0, got {c}"
            )));
        }
        let mut b = vec![0.0; dim];
        if dim > 0 {
            b[0] = c;
        }
        let p = Self::quadratic(format!("harmonic_shift:c={c}"), vec![1.0; dim], b)?;
        Ok(Self {
            eval: Arc::new(move |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() + c),
            ..p
        })
    }

    /// Drops the closed-form ρ so every consumer takes the numerical path.
    pub fn without_known_rho(mut self) -> Self {
        self.known_rho = None;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn separable_parts(&self) -> Option<&[AxisFn]> {
        self.separable_parts.as_deref()
    }

    pub fn is_separable(&self) -> bool {
        self.separable_parts.is_some()
    }

    /// Potential of axis `j` alone, as a one-dimensional potential.
    pub fn axis_potential(&self, j: usize) -> Option<Potential> {
        let parts = self.separable_parts.as_ref()?;
        let part = parts.get(j)?.clone();
        let part2 = part.clone();
        Some(Potential {
            name: format!("{}[axis {j}]", self.name),
            dim: 1,
            eval: Arc::new(move |x: &[f64]| part(x[0])),
            separable_parts: Some(vec![part2]),
            known_rho: None,
        })
    }

    pub fn known_rho(&self, x: &[f64]) -> Option<f64> {
        self.known_rho.as_ref().map(|f| f(x))
    }

    pub fn has_known_rho(&self) -> bool {
        self.known_rho.is_some()
    }

    /// ∫_{B(x,r)} V by quasi-Monte-Carlo on the given unit-ball points.
    pub fn ball_integral(&self, x: &[f64], r: f64, unit_points: &[Vec<f64>]) -> f64 {
        let mut y = vec![0.0; self.dim];
        let mut s = 0.0;
        for p in unit_points {
            for j in 0..self.dim {
                y[j] = x[j] + r * p[j];
            }
            s += self.eval(&y);
        }
        unit_ball_volume(self.dim) * r.powi(self.dim as i32) * s / unit_points.len() as f64
    }
}

/// Context for building potentials from spec strings.
#[derive(Debug, Clone, Copy)]
pub struct PotentialContext {
    pub dim: usize,
}

/// Presets: `zero`, `one`, `const:m2=<v>`, `harmonic`, `harmonic_shift:c=<v>`,
/// `separable:<a1>,<b1>;<a2>,<b2>;...` for `V = Σ_j a_j x_j² + b_j`.
pub fn potential_registry() -> &'static Registry<PotentialContext, Potential> {
    static REG: OnceLock<Registry<PotentialContext, Potential>> = OnceLock::new();
    REG.get_or_init(|| {
        Registry::<PotentialContext, Potential>::new("potential")
            .with("zero", |c, p| {
                p.only(&[])?;
                Potential::zero(c.dim)
            })
            .with("one", |c, p| {
                p.only(&[])?;
                Potential::one(c.dim)
            })
            .with("const", |c, p| {
                p.only(&["m2"])?;
                Potential::constant(c.dim, p.require_f64("m2")?)
            })
            .with("harmonic", |c, p| {
                p.only(&[])?;
                Potential::harmonic(c.dim)
            })
            .with("harmonic_shift", |c, p| {
                p.only(&["c"])?;
                Potential::harmonic_shift(c.dim, p.require_f64("c")?)
            })
            .with("separable", parse_separable)
    })
}

fn parse_separable(ctx: &PotentialContext, p: &Params) -> Result<Potential> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for term in p.raw().split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (x, y) = term
            .split_once(',')
            .ok_or_else(|| Error::Config(format!("separable term `{term}` is not `a,b`")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number `{s}` in separable spec")))
        };
        a.push(parse(x)?);
        b.push(parse(y)?);
    }
    if a.len() != ctx.dim {
        return Err(Error::Config(format!(
            "separable spec has {} axes, grid has {}",
            a.len(),
            ctx.dim
        )));
    }
    Potential::quadratic(format!("separable:{}", p.raw()), a, b)
}

pub fn build_potential(spec: &str, dim: usize) -> Result<Potential> {
    potential_registry().build(&PotentialContext { dim }, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhConstantReport {
    pub q: f64,
    pub estimated_constant: f64,
    pub num_balls: usize,
    pub worst_ball: (Vec<f64>, f64),
}

/// Sampled reverse-Hölder constant: the sup over balls of
/// `(avg_B V^q)^{1/q} / avg_B V`.
pub fn reverse_holder_estimate(
    v: &Potential,
    q: f64,
    balls: &[(Vec<f64>, f64)],
    mc_points: usize,
) -> Result<RhConstantReport> {
    if !(q > 1.0) {
        return Err(Error::Domain(format!(
            "reverse Hölder exponent must exceed 1, got {q}"
        )));
    }
    if mc_points < 1000 {
        return Err(Error::Domain(
            "reverse_holder_estimate needs at least 1000 points".into(),
        ));
    }
    if balls.is_empty() {
        return Err(Error::Domain("no balls to sample".into()));
    }
    let pts = unit_ball_points(v.dim(), mc_points, 0);
    let mut best = f64::NEG_INFINITY;
    let mut worst_ball = balls[0].clone();
    let mut y = vec![0.0; v.dim()];
    for (center, r) in balls {
        if !(*r > 0.0) || center.len() != v.dim() {
            return Err(Error::Domain(format!("invalid ball ({center:?}, {r})")));
        }
        let (mut s1, mut sq) = (0.0, 0.0);
        for p in &pts {
            for j in 0..v.dim() {
                y[j] = center[j] + r * p[j];
            }
            let val = v.eval(&y);
            s1 += val;
            sq += val.powf(q);
        }
        let n = pts.len() as f64;
        let (m1, mq) = (s1 / n, sq / n);
        if m1 <= 0.0 {
            return Err(Error::ZeroBallAverage {
                center: center.clone(),
                radius: *r,
            });
        }
        let ratio = mq.powf(1.0 / q) / m1;
        if ratio > best {
            best = ratio;
            worst_ball = (center.clone(), *r);
        }
    }
    Ok(RhConstantReport {
        q,
        estimated_constant: best,
        num_balls: balls.len(),
        worst_ball,
    })
}

/// Numerical critical radius `sup{r : r^{2-d} ∫_{B(x,r)} V <= 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoSolver {
    /// Relative bisection tolerance.
    pub tol: f64,
    pub mc_points: usize,
    pub seed: u64,
    /// Use the potential's closed form when it has one.
    pub prefer_closed_form: bool,
    pub scan_min: f64,
    pub scan_max: f64,
    pub scan_per_decade: usize,
}

impl Default for RhoSolver {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            mc_points: 1 << 14,
            seed: 0,
            prefer_closed_form: true,
            scan_min: 1e-4,
            scan_max: 1e4,
            scan_per_decade: 20,
        }
    }
}

impl RhoSolver {
    pub fn numeric(tol: f64, seed: u64) -> Self {
        Self {
            tol,
            seed,
            prefer_closed_form: false,
            ..Self::default()
        }
    }

    pub fn solve(&self, v: &Potential, x: &[f64]) -> Result<f64> {
        if v.dim() < 3 {
            return Err(Error::Domain(format!(
                "critical radius requires dimension >= 3, got {}",
                v.dim()
            )));
        }
        if x.len() != v.dim() {
            return Err(Error::DimensionMismatch {
                expected: v.dim(),
                got: x.len(),
            });
        }
        if !(self.tol > 0.0) {
            return Err(Error::Domain(
                "critical radius tolerance must be positive".into(),
            ));
        }
        if self.prefer_closed_form {
            if let Some(r) = v.known_rho(x) {
                return Ok(r);
            }
        }
        let pts = unit_ball_points(v.dim(), self.mc_points, self.seed);
        self.bisect_with(v, x, &pts)
    }

    pub fn solve_many(&self, v: &Potential, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        if !self.prefer_closed_form || !v.has_known_rho() {
            let pts = unit_ball_points(v.dim(), self.mc_points, self.seed);
            return xs.iter().map(|x| self.bisect_with(v, x, &pts)).collect();
        }
        xs.iter().map(|x| self.solve(v, x)).collect()
    }

    fn bisect_with(&self, v: &Potential, x: &[f64], pts: &[Vec<f64>]) -> Result<f64> {
        if v.dim() < 3 {
            return Err(Error::Domain(
                "critical radius requires dimension >= 3".into(),
            ));
        }
        let d = v.dim() as i32;
        let f = |r: f64| r.powi(2 - d) * v.ball_integral(x, r, pts);
        let decades = (self.scan_max / self.scan_min).log10();
        let n = (decades * self.scan_per_decade as f64).ceil() as usize;
        let radii: Vec<f64> = (0..=n)
            .map(|k| self.scan_min * 10f64.powf(decades * k as f64 / n as f64))
            .collect();
        let values: Vec<f64> = radii.iter().map(|&r| f(r)).collect();
        if values[n] <= 1.0 {
            return Err(Error::UnboundedCriticalRadius);
        }
        // Last scan point with F <= 1 that is followed by F > 1.
        let k = match (0..n)
            .rev()
            .find(|&k| values[k] <= 1.0 && values[k + 1] > 1.0)
        {
            Some(k) => k,
            None => return Err(Error::CriticalRadiusBelowRange(x.to_vec())),
        };
        let (mut lo, mut hi) = (radii[k], radii[k + 1]);
        while hi - lo > self.tol * lo {
            let mid = 0.5 * (lo + hi);
            if f(mid) <= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// ρ(x) with default solver settings and the given relative tolerance.
pub fn critical_radius(v: &Potential, x: &[f64], tol: f64) -> Result<f64> {
    RhoSolver {
        tol,
        ..RhoSolver::default()
    }
    .solve(v, x)
}

/// Empirical check of the comparison estimate between ρ(x) and ρ(y).
///
/// Reports the equivalence constant `max(ρ(x)/ρ(y), ρ(y)/ρ(x))` over pairs
/// with `|x-y| <= ρ(x)` (key `equivalence_c`, absent if no pair qualifies),
/// and the smallest `c_rho` over a grid of `n0` values for which both sides
/// of the comparison estimate hold on every pair.
pub fn rho_comparison_probe(
    v: &Potential,
    pairs: &[(Vec<f64>, Vec<f64>)],
    solver: &RhoSolver,
) -> Result<BoundProbeReport> {
    let mut rx = Vec::with_capacity(pairs.len());
    let mut ry = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        rx.push(solver.solve(v, x)?);
        ry.push(solver.solve(v, y)?);
    }
    let dist: Vec<f64> = pairs
        .iter()
        .map(|(x, y)| {
            x.iter()
                .zip(y)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let mut report = BoundProbeReport::new(
        BoundId::RhoCompare,
        pairs.len(),
        format!("{} point pairs for potential `{}`", pairs.len(), v.name()),
    );
    let mut equiv: Option<f64> = None;
    let mut close = 0;
    for i in 0..pairs.len() {
        if dist[i] <= rx[i] {
            close += 1;
            let c = (rx[i] / ry[i]).max(ry[i] / rx[i]);
            equiv = Some(equiv.map_or(c, |e: f64| e.max(c)));
        }
    }
    if let Some(c) = equiv {
        report.set("equivalence_c", c);
    }
    report.set("close_pairs", close as f64);

    let needed = |n0: f64| -> f64 {
        (0..pairs.len())
            .map(|i| {
                let g = 1.0 + dist[i] / rx[i];
                let lower = rx[i] * g.powf(-n0) / ry[i];
                let upper = ry[i] / (rx[i] * g.powf(n0 / (n0 + 1.0)));
                lower.max(upper)
            })
            .fold(0.0, f64::max)
    };
    let mut best = (f64::INFINITY, 0.0);
    for k in 1..=40 {
        let n0 = 0.25 * k as f64;
        let c = needed(n0);
        if c < best.0 {
            best = (c, n0);
        }
    }
    report.set("c_rho", best.0);
    report.set("n0", best.1);
    // Re-evaluate with the fitted constants.
    let viol = (0..pairs.len())
        .map(|i| {
            let g = 1.0 + dist[i] / rx[i];
            let lo = rx[i] * g.powf(-best.1) / best.0;
            let hi = best.0 * rx[i] * g.powf(best.1 / (best.1 + 1.0));
            (lo - ry[i]).max(ry[i] - hi).max(0.0)
        })
        .fold(0.0, f64::max);
    report.max_violation = viol;
    Ok(report)
}
