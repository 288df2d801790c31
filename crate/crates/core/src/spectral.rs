//! Functional calculus `φ(𝓛) f = Σ φ(λ_i) <f, φ_i> φ_i` over a discrete
//! eigenbasis, and numerical checks of the log, power and group identities.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{ComplexField, Field};
use crate::operator::SpectralBasis;
use crate::registry::Registry;

pub trait SpectralFunction: Send + Sync {
    fn name(&self) -> String;

    fn eval(&self, lambda: f64) -> Complex64;

    /// Whether `eval` is real for every `λ > 0`.
    fn is_real(&self) -> bool {
        true
    }
}

/// `log λ`.
#[derive(Debug, Clone, Copy)]
pub struct Log;

impl SpectralFunction for Log {
    fn name(&self) -> String {
        "log".into()
    }
    fn eval(&self, lambda: f64) -> Complex64 {
        lambda.ln().into()
    }
}

/// `λ^s` with `s ∈ (0, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct Power {
    s: f64,
}

impl Power {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!(
                "power exponent must lie in (0, 1), got {s}"
            )));
        }
        Ok(Self { s })
    }
}

impl SpectralFunction for Power {
    fn name(&self) -> String {
        format!("power:s={}", self.s)
    }
    fn eval(&self, lambda: f64) -> Complex64 {
        lambda.powf(self.s).into()
    }
}

/// `λ^{-α}` with `α > 0`.
#[derive(Debug, Clone, Copy)]
pub struct NegPower {
    alpha: f64,
}

impl NegPower {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!(
                "negative power needs alpha > 0, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }
}

impl SpectralFunction for NegPower {
    fn name(&self) -> String {
        format!("neg_power:alpha={}", self.alpha)
    }
    fn eval(&self, lambda: f64) -> Complex64 {
        lambda.powf(-self.alpha).into()
    }
}

/// `e^{-tλ}` with `t > 0`.
#[derive(Debug, Clone, Copy)]
pub struct Heat {
    t: f64,
}

impl Heat {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("heat operator needs t > 0, got {t}")));
        }
        Ok(Self { t })
    }
}

impl SpectralFunction for Heat {
    fn name(&self) -> String {
        format!("heat:t={}", self.t)
    }
    fn eval(&self, lambda: f64) -> Complex64 {
        (-self.t * lambda).exp().into()
    }
}

/// `λ^{iβ} = e^{iβ log λ}`.
#[derive(Debug, Clone, Copy)]
pub struct ImagPower {
    pub beta: f64,
}

impl SpectralFunction for ImagPower {
    fn name(&self) -> String {
        format!("imag_power:beta={}", self.beta)
    }
    fn eval(&self, lambda: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.beta * lambda.ln())
    }
    fn is_real(&self) -> bool {
        self.beta == 0.0
    }
}

pub type SpectralFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Any callable `λ ↦ φ(λ)`.
#[derive(Clone)]
pub struct Custom {
    label: String,
    f: SpectralFn,
    real: bool,
}

impl Custom {
    pub fn new(label: impl Into<String>, f: SpectralFn, real: bool) -> Self {
        Self {
            label: label.into(),
            f,
            real,
        }
    }

    pub fn real(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(label, Arc::new(move |l| f(l).into()), true)
    }
}

impl SpectralFunction for Custom {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn eval(&self, lambda: f64) -> Complex64 {
        (self.f)(lambda)
    }
    fn is_real(&self) -> bool {
        self.real
    }
}

/// `log`, `power:s=`, `neg_power:alpha=`, `heat:t=`, `imag_power:beta=`,
/// `identity`.
pub fn function_registry() -> &'static Registry<(), Arc<dyn SpectralFunction>> {
    static REG: OnceLock<Registry<(), Arc<dyn SpectralFunction>>> = OnceLock::new();
    REG.get_or_init(|| {
        Registry::<(), Arc<dyn SpectralFunction>>::new("spectral function")
            .with("log", |_, p| {
                p.only(&[])?;
                Ok(Arc::new(Log) as Arc<dyn SpectralFunction>)
            })
            .with("power", |_, p| {
                p.only(&["s"])?;
                Ok(Arc::new(Power::new(p.require_f64("s")?)?) as Arc<dyn SpectralFunction>)
            })
            .with("neg_power", |_, p| {
                p.only(&["alpha"])?;
                Ok(Arc::new(NegPower::new(p.require_f64("alpha")?)?) as Arc<dyn SpectralFunction>)
            })
            .with("heat", |_, p| {
                p.only(&["t"])?;
                Ok(Arc::new(Heat::new(p.require_f64("t")?)?) as Arc<dyn SpectralFunction>)
            })
            .with("imag_power", |_, p| {
                p.only(&["beta"])?;
                Ok(Arc::new(ImagPower {
                    beta: p.require_f64("beta")?,
                }) as Arc<dyn SpectralFunction>)
            })
            .with("identity", |_, p| {
                p.only(&[])?;
                Ok(Arc::new(Custom::real("identity", |l| l)) as Arc<dyn SpectralFunction>)
            })
    })
}

pub fn build_function(spec: &str) -> Result<Arc<dyn SpectralFunction>> {
    function_registry().build(&(), spec)
}

/// `φ(λ_i)` for every eigenvalue, rejecting non-finite values.
pub fn multipliers(
    basis: &dyn SpectralBasis,
    phi: &dyn SpectralFunction,
) -> Result<Vec<Complex64>> {
    basis
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let v = phi.eval(l);
            if v.re.is_finite() && v.im.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite(i))
            }
        })
        .collect()
}

fn real_multipliers(basis: &dyn SpectralBasis, phi: &dyn SpectralFunction) -> Result<Vec<f64>> {
    if !phi.is_real() {
        return Err(Error::Domain(format!(
            "{} is complex-valued; use the complex calculus",
            phi.name()
        )));
    }
    Ok(multipliers(basis, phi)?.into_iter().map(|v| v.re).collect())
}

/// `φ(𝓛) f` for a real-valued `φ`.
pub fn apply_spectral(
    basis: &dyn SpectralBasis,
    phi: &dyn SpectralFunction,
    f: &Field,
) -> Result<Field> {
    let m = real_multipliers(basis, phi)?;
    let c = basis.analyze(f)?;
    let c: Vec<f64> = c.iter().zip(&m).map(|(a, b)| a * b).collect();
    basis.synthesize(&c)
}

/// `φ(𝓛) f` for any `φ`, in complex arithmetic.
pub fn apply_spectral_complex(
    basis: &dyn SpectralBasis,
    phi: &dyn SpectralFunction,
    f: &ComplexField,
) -> Result<ComplexField> {
    let m = multipliers(basis, phi)?;
    let c = basis.analyze_complex(f)?;
    let c: Vec<Complex64> = c.iter().zip(&m).map(|(a, b)| a * b).collect();
    basis.synthesize_complex(&c)
}

fn coeff_norm(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|v| v * v).sum::<f64>().sqrt()
}

/// Errors `e(s) = ‖(𝓛^s f - f)/s - (log 𝓛) f‖₂` of the difference quotient
/// at `s = 0`, with the per-mode Taylor bound
/// `(s/2)‖(log λ)² max(1, λ^s) c‖₂` for comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeProbe {
    pub s: Vec<f64>,
    pub errors: Vec<f64>,
    pub bounds: Vec<f64>,
}

pub fn derivative_at_zero_probe(
    basis: &dyn SpectralBasis,
    f: &Field,
    s_list: &[f64],
) -> Result<DerivativeProbe> {
    if s_list.iter().any(|&s| !(s > 0.0 && s < 0.5)) || s_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain(
            "s list must be decreasing in (0, 1/2)".into(),
        ));
    }
    let c = basis.analyze(f)?;
    let logs: Vec<f64> = basis.eigenvalues().iter().map(|l| l.ln()).collect();
    let mut out = DerivativeProbe {
        s: s_list.to_vec(),
        errors: Vec::new(),
        bounds: Vec::new(),
    };
    for &s in s_list {
        // Parseval turns the field norm into a coefficient norm.
        out.errors.push(coeff_norm(
            logs.iter()
                .zip(&c)
                .map(|(&lg, &ci)| ((s * lg).exp_m1() / s - lg) * ci),
        ));
        out.bounds.push(
            0.5 * s
                * coeff_norm(
                    logs.iter()
                        .zip(&c)
                        .map(|(&lg, &ci)| lg * lg * (s * lg).exp().max(1.0) * ci),
                ),
        );
    }
    Ok(out)
}

/// Residuals of the unitary group `J_β = 𝓛^{iβ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCheck {
    /// `‖J_α J_β f - J_{α+β} f‖₂`.
    pub composition: f64,
    /// `|‖J_β f‖₂ - ‖f‖₂|`.
    pub unitarity: f64,
    /// `(h, ‖(J_h f - f)/h - i (log 𝓛) f‖₂)` for halving `h`.
    pub generator: Vec<(f64, f64)>,
}

pub fn imag_power_group_check(
    basis: &dyn SpectralBasis,
    f: &Field,
    alpha: f64,
    beta: f64,
) -> Result<GroupCheck> {
    let fc = f.to_complex();
    let jb = apply_spectral_complex(basis, &ImagPower { beta }, &fc)?;
    let jab = apply_spectral_complex(basis, &ImagPower { beta: alpha }, &jb)?;
    let direct = apply_spectral_complex(basis, &ImagPower { beta: alpha + beta }, &fc)?;
    let composition = jab.sub(&direct)?.l2_norm();
    let unitarity = (jb.l2_norm() - f.l2_norm()).abs();
    let log_f = apply_spectral(basis, &Log, f)?.to_complex();
    let i_log_f = log_f.map(|v| v * Complex64::i());
    let mut generator = Vec::new();
    let mut h = 0.1;
    for _ in 0..6 {
        let jh = apply_spectral_complex(basis, &ImagPower { beta: h }, &fc)?;
        let q = jh.sub(&fc)?.scale(1.0 / h);
        generator.push((h, q.sub(&i_log_f)?.l2_norm()));
        h /= 2.0;
    }
    Ok(GroupCheck {
        composition,
        unitarity,
        generator,
    })
}

/// Residuals of the semigroup `α ↦ 𝓛^{-α}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NegPowerCheck {
    /// `‖𝓛^{-α} 𝓛^{-β} f - 𝓛^{-(α+β)} f‖₂`.
    pub composition: f64,
    /// `(α, ‖𝓛^{-α} f - f‖₂)` for halving `α`.
    pub continuity: Vec<(f64, f64)>,
    /// `(h, ‖(𝓛^{-h} f - f)/h + (log 𝓛) f‖₂)` for halving `h`.
    pub generator: Vec<(f64, f64)>,
}

/// `𝓛^{-α}` with `α = 0` meaning the identity.
pub fn neg_power_apply(basis: &dyn SpectralBasis, alpha: f64, f: &Field) -> Result<Field> {
    if alpha == 0.0 {
        if f.grid() != basis.grid() {
            return Err(Error::GridMismatch);
        }
        return Ok(f.clone());
    }
    apply_spectral(basis, &NegPower::new(alpha)?, f)
}

pub fn neg_power_semigroup_check(
    basis: &dyn SpectralBasis,
    f: &Field,
    alpha: f64,
    beta: f64,
) -> Result<NegPowerCheck> {
    let fb = neg_power_apply(basis, beta, f)?;
    let fab = neg_power_apply(basis, alpha, &fb)?;
    let direct = neg_power_apply(basis, alpha + beta, f)?;
    let composition = fab.sub(&direct)?.l2_norm();
    let log_f = apply_spectral(basis, &Log, f)?;
    let mut continuity = Vec::new();
    let mut generator = Vec::new();
    let mut h = 0.1;
    for _ in 0..6 {
        let fh = neg_power_apply(basis, h, f)?;
        let diff = fh.sub(f)?;
        continuity.push((h, diff.l2_norm()));
        generator.push((h, diff.scale(1.0 / h).axpby(1.0, &log_f, 1.0)?.l2_norm()));
        h /= 2.0;
    }
    Ok(NegPowerCheck {
        composition,
        continuity,
        generator,
    })
}

/// Share of the top decile of modes above which a field is flagged as
/// poorly resolved for `φ(𝓛)`.
pub const TAIL_THRESHOLD: f64 = 0.1;

/// Finite-sum stand-in for `∫ |φ(λ)|² dμ_f(λ) < ∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainDiagnostic {
    /// `Σ |φ(λ_i)|² |c_i|²`.
    pub weighted_sum: f64,
    /// Share of `weighted_sum` carried by the top 10% of eigenvalues.
    pub tail_fraction: f64,
    /// `tail_fraction <= TAIL_THRESHOLD` and `weighted_sum` finite.
    pub in_domain_proxy: bool,
    /// Smallest `C` with `(log λ)² <= C (λ^{-2β} + λ^{2α})` on the spectrum.
    pub log_bound_constant: f64,
    pub log_bound_violation: f64,
}

pub fn domain_diagnostic(
    basis: &dyn SpectralBasis,
    phi: &dyn SpectralFunction,
    f: &Field,
    (alpha, beta): (f64, f64),
) -> Result<DomainDiagnostic> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::Domain(
            "log-domain inclusion needs alpha, beta > 0".into(),
        ));
    }
    let m = multipliers(basis, phi)?;
    let c = basis.analyze(f)?;
    let lam = basis.eigenvalues();
    let w: Vec<f64> = m
        .iter()
        .zip(&c)
        .map(|(p, ci)| p.norm_sqr() * ci * ci)
        .collect();
    let weighted_sum: f64 = w.iter().sum();
    let mut order: Vec<usize> = (0..lam.len()).collect();
    order.sort_by(|&a, &b| lam[b].total_cmp(&lam[a]));
    let top = lam.len().div_ceil(10);
    let tail: f64 = order[..top].iter().map(|&i| w[i]).sum();
    let tail_fraction = if weighted_sum > 0.0 {
        tail / weighted_sum
    } else {
        0.0
    };
    let envelope = |l: f64| l.powf(-2.0 * beta) + l.powf(2.0 * alpha);
    let log_bound_constant = lam
        .iter()
        .map(|&l| l.ln().powi(2) / envelope(l))
        .fold(0.0, f64::max);
    let log_bound_violation = lam
        .iter()
        .map(|&l| l.ln().powi(2) - log_bound_constant * envelope(l))
        .fold(0.0, f64::max);
    Ok(DomainDiagnostic {
        weighted_sum,
        tail_fraction,
        in_domain_proxy: weighted_sum.is_finite() && tail_fraction <= TAIL_THRESHOLD,
        log_bound_constant,
        log_bound_violation,
    })
}
