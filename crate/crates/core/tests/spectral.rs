mod common;

use std::sync::Arc;

use common::*;
use num_complex::Complex64;
use rand::Rng;
use schrolog::heat_kernel::{Eigenexpansion, HeatKernel};
use schrolog::numerics::{Field, Grid};
use schrolog::operator::{hermite_function, DiscreteOperator, SpectralBasis, SpectralData};
use schrolog::potential::Potential;
use schrolog::spectral::*;
use schrolog::Error;

fn setup(n: usize) -> (DiscreteOperator, Arc<SpectralData>) {
    let grid = Grid::cube(1, -10.0, 10.0, n).unwrap();
    let op = DiscreteOperator::assemble(&grid, &Potential::harmonic(1).unwrap()).unwrap();
    let sd = Arc::new(op.eigendecompose().unwrap());
    (op, sd)
}

fn bump(grid: &Grid) -> Field {
    Field::from_fn(grid, |x| (-(x[0] - 0.5).powi(2)).exp() * (1.0 + 0.3 * x[0]))
}

fn random_field(grid: &Grid, seed: u64) -> Field {
    let mut r = rng(seed);
    Field::new(
        grid.clone(),
        (0..grid.len()).map(|_| r.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

#[test]
fn identity_function_is_the_matrix_action() {
    let (op, sd) = setup(200);
    let f = bump(sd.grid());
    let a = apply_spectral(sd.as_ref(), &Custom::real("id", |l| l), &f).unwrap();
    let b = op.apply(&f).unwrap();
    assert!(a.sub(&b).unwrap().l2_norm() < 1e-10 * b.l2_norm());
}

#[test]
fn heat_function_matches_kernel_rows() {
    let (_, sd) = setup(200);
    let grid = sd.grid().clone();
    let f = bump(&grid);
    let t = 0.3;
    let a = apply_spectral(sd.as_ref(), &Heat::new(t).unwrap(), &f).unwrap();
    let k = Eigenexpansion::new(sd.clone());
    for idx in [20, 77, 100, 150] {
        let x = grid.point(idx);
        let row = k.row(t, &x, &grid).unwrap();
        let v: f64 =
            row.iter().zip(f.values()).map(|(a, b)| a * b).sum::<f64>() * grid.cell_volume();
        assert!((v - a.values()[idx]).abs() < 1e-10);
    }
}

#[test]
fn log_of_ground_state_is_small() {
    let sd = harmonic_1024();
    let f = Field::from_fn(sd.grid(), |x| hermite_function(0, x[0]));
    let out = apply_spectral(sd.as_ref(), &Log, &f).unwrap();
    // λ_1 = 1 up to discretization, so log λ_1 ≈ 0.
    assert!(out.sup_norm() < 1e-4 * f.sup_norm(), "{}", out.sup_norm());
}

#[test]
fn derivative_at_zero() {
    let (_, sd) = setup(200);
    let f = bump(sd.grid());
    let s_list: Vec<f64> = (0..6).map(|k| 0.1 / 2f64.powi(k)).collect();
    let p = derivative_at_zero_probe(sd.as_ref(), &f, &s_list).unwrap();
    for w in p.errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 2.0).abs() < 0.2, "{ratio}");
    }
    for (e, b) in p.errors.iter().zip(&p.bounds) {
        assert!(e <= b);
    }

    let phi = sd.eigenvector(4);
    let l = sd.eigenvalues()[4];
    let p = derivative_at_zero_probe(sd.as_ref(), &phi, &[0.1, 0.05]).unwrap();
    for (s, e) in p.s.iter().zip(&p.errors) {
        let exact = ((l.powf(*s) - 1.0) / s - l.ln()).abs();
        assert!((e - exact).abs() < 1e-10 * exact.max(1.0));
    }

    assert!(derivative_at_zero_probe(sd.as_ref(), &f, &[0.1, 0.2]).is_err());
    assert!(derivative_at_zero_probe(sd.as_ref(), &f, &[0.6]).is_err());
}

#[test]
fn derivative_near_unit_spectrum() {
    // V ≡ 1 on a wide box: the low modes have λ just above 1.
    let grid = Grid::cube(1, -40.0, 40.0, 160).unwrap();
    let op = DiscreteOperator::assemble(&grid, &Potential::one(1).unwrap()).unwrap();
    let sd = op.eigendecompose().unwrap();
    let mut f = Field::zeros(&grid);
    for i in 0..5 {
        f = f.axpby(1.0, &sd.eigenvector(i), 1.0).unwrap();
    }
    let max_log = sd.eigenvalues()[..5]
        .iter()
        .map(|l| l.ln().abs())
        .fold(0.0, f64::max);
    assert!(max_log < 0.05);
    let p = derivative_at_zero_probe(&sd, &f, &[0.1, 0.05]).unwrap();
    for (s, e) in p.s.iter().zip(&p.errors) {
        assert!(*e <= s * max_log * max_log * f.l2_norm());
    }
}

#[test]
fn imaginary_powers_form_a_unitary_group() {
    let (_, sd) = setup(200);
    let f = bump(sd.grid());
    let mut r = rng(21);
    for _ in 0..5 {
        let a = r.gen_range(-5.0..5.0);
        let b = r.gen_range(-5.0..5.0);
        let c = imag_power_group_check(sd.as_ref(), &f, a, b).unwrap();
        assert!(c.composition < 1e-10);
        assert!(c.unitarity < 1e-12);
        for w in c.generator.windows(2) {
            let ratio = w[0].1 / w[1].1;
            assert!((ratio - 2.0).abs() < 0.2, "{ratio}");
        }
    }
}

#[test]
fn negative_powers_form_a_semigroup() {
    let (_, sd) = setup(200);
    let f = bump(sd.grid());
    let c = neg_power_semigroup_check(sd.as_ref(), &f, 0.3, 0.9).unwrap();
    assert!(c.composition < 1e-10);
    for w in c.generator.windows(2) {
        assert!((w[0].1 / w[1].1 - 2.0).abs() < 0.2);
    }
    for w in c.continuity.windows(2) {
        assert!(w[1].1 < w[0].1);
    }
    let id = neg_power_apply(sd.as_ref(), 0.0, &f).unwrap();
    assert_eq!(id.values(), f.values());
}

#[test]
fn domain_diagnostics() {
    let (_, sd) = setup(200);
    let phi1 = sd.eigenvector(0);
    let d = domain_diagnostic(sd.as_ref(), &Log, &phi1, (0.5, 0.5)).unwrap();
    assert!((d.weighted_sum - sd.eigenvalues()[0].ln().powi(2)).abs() < 1e-12);
    assert_eq!(d.log_bound_violation, 0.0);
    assert!(d.log_bound_constant > 0.0);
    for &l in sd.eigenvalues() {
        assert!(l.ln().powi(2) <= d.log_bound_constant * (1.0 / l + l) * (1.0 + 1e-12));
    }

    let rough = random_field(sd.grid(), 22);
    let d = domain_diagnostic(sd.as_ref(), &Log, &rough, (0.5, 0.5)).unwrap();
    let c = sd.analyze(&rough).unwrap();
    let w: Vec<f64> = sd
        .eigenvalues()
        .iter()
        .zip(&c)
        .map(|(l, ci)| (l.ln() * ci).powi(2))
        .collect();
    let total: f64 = w.iter().sum();
    let top: f64 = w[180..].iter().sum();
    assert!((d.tail_fraction - top / total).abs() < 1e-12);
    assert!(!d.in_domain_proxy);

    let smooth = bump(sd.grid());
    assert!(
        domain_diagnostic(sd.as_ref(), &Log, &smooth, (0.5, 0.5))
            .unwrap()
            .in_domain_proxy
    );
}

#[test]
fn calculus_is_linear_multiplicative_and_self_adjoint() {
    let (_, sd) = setup(150);
    let f = random_field(sd.grid(), 23);
    let g = random_field(sd.grid(), 24);
    let p1 = Custom::real("sqrt+1", |l| l.sqrt() + 1.0);
    let p2 = Custom::real("1/(1+l)", |l| 1.0 / (1.0 + l));
    let prod = Custom::real("prod", |l| (l.sqrt() + 1.0) / (1.0 + l));
    let a = apply_spectral(
        sd.as_ref(),
        &p1,
        &apply_spectral(sd.as_ref(), &p2, &f).unwrap(),
    )
    .unwrap();
    let b = apply_spectral(sd.as_ref(), &prod, &f).unwrap();
    assert!(a.sub(&b).unwrap().l2_norm() < 1e-10 * b.l2_norm());

    let lin = apply_spectral(sd.as_ref(), &Log, &f.axpby(2.0, &g, -3.0).unwrap()).unwrap();
    let sep = apply_spectral(sd.as_ref(), &Log, &f)
        .unwrap()
        .axpby(2.0, &apply_spectral(sd.as_ref(), &Log, &g).unwrap(), -3.0)
        .unwrap();
    assert!(lin.sub(&sep).unwrap().l2_norm() < 1e-10 * lin.l2_norm());

    for phi in [
        &Log as &dyn SpectralFunction,
        &p1,
        &Power::new(0.4).unwrap(),
    ] {
        let lhs = apply_spectral(sd.as_ref(), phi, &f)
            .unwrap()
            .inner_product(&g)
            .unwrap();
        let rhs = f
            .inner_product(&apply_spectral(sd.as_ref(), phi, &g).unwrap())
            .unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }
}

#[test]
fn power_domains_are_nested_and_powers_tend_to_identity() {
    let (_, sd) = setup(150);
    for &l in sd.eigenvalues() {
        for (s1, s2) in [(0.1, 0.5), (0.3, 0.9), (0.5, 0.5)] {
            assert!(l.powf(2.0 * s1) <= 1.0 + l.powf(2.0 * s2));
        }
    }
    let f = bump(sd.grid());
    let c = sd.analyze(&f).unwrap();
    let log_norm = sd
        .eigenvalues()
        .iter()
        .zip(&c)
        .map(|(l, ci)| (l.ln() * l.max(1.0).sqrt() * ci).powi(2))
        .sum::<f64>()
        .sqrt();
    let mut prev = f64::INFINITY;
    for k in 0..6 {
        let s = 0.2 / 2f64.powi(k);
        let e = apply_spectral(sd.as_ref(), &Power::new(s).unwrap(), &f)
            .unwrap()
            .sub(&f)
            .unwrap()
            .l2_norm();
        assert!(e <= s * log_norm);
        assert!(e < prev);
        prev = e;
    }
}

#[test]
fn complex_calculus() {
    let (_, sd) = setup(100);
    let f = bump(sd.grid());
    assert!(matches!(
        apply_spectral(sd.as_ref(), &ImagPower { beta: 1.0 }, &f),
        Err(Error::Domain(_))
    ));
    let z = apply_spectral_complex(sd.as_ref(), &ImagPower { beta: 0.0 }, &f.to_complex()).unwrap();
    assert!(z.max_imag() < 1e-14);
    let back = apply_spectral_complex(
        sd.as_ref(),
        &ImagPower { beta: -2.0 },
        &apply_spectral_complex(sd.as_ref(), &ImagPower { beta: 2.0 }, &f.to_complex()).unwrap(),
    )
    .unwrap();
    let err = back
        .values()
        .iter()
        .zip(f.values())
        .map(|(a, b)| (a - Complex64::from(*b)).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-12);
}

#[test]
fn construction_guards_and_registry() {
    assert!(Power::new(1.0).is_err());
    assert!(Power::new(0.0).is_err());
    assert!(NegPower::new(0.0).is_err());
    assert!(Heat::new(0.0).is_err());
    for spec in [
        "log",
        "power:s=0.5",
        "neg_power:alpha=1",
        "heat:t=0.2",
        "imag_power:beta=1",
        "identity",
    ] {
        let phi = build_function(spec).unwrap();
        assert!(phi.eval(2.0).norm().is_finite());
    }
    assert!(build_function("power:s=2").is_err());
    assert!(build_function("power").is_err());
    assert!(build_function("exp").is_err());
    let bad = Custom::real("blowup", |_| f64::NAN);
    let (_, sd) = setup(50);
    assert!(matches!(
        apply_spectral(sd.as_ref(), &bad, &bump(sd.grid())),
        Err(Error::NonFinite(_))
    ));
}
