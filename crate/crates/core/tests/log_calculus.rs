mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::*;
use schrolog::heat_kernel::{Eigenexpansion, GaussianFree, ShiftedGaussian, TensorProduct};
use schrolog::log_calculus::*;
use schrolog::numerics::special::euler_identity;
use schrolog::numerics::{
    bessel_k_half_integer, euler_gamma, time_quadrature, Field, Grid, QuadratureSpec,
};
use schrolog::operator::{harmonic_log_apply, HermiteBasis, SpectralBasis, SpectralData};
use schrolog::potential::Potential;
use schrolog::spectral::{apply_spectral, Custom, Log, NegPower, Power};
use schrolog::Error;

fn setup(n: usize) -> Arc<SpectralData> {
    spectral_1d(-10.0, 10.0, n, Potential::harmonic(1).unwrap())
}

fn bump(grid: &Grid) -> Field {
    Field::from_fn(grid, |x| (-(x[0] - 0.5).powi(2)).exp())
}

fn rel_l2(a: &Field, b: &Field) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm()
}

fn e1(z: f64) -> f64 {
    time_quadrature(
        |t| (-t).exp() / t,
        z,
        f64::INFINITY,
        &QuadratureSpec::default(),
    )
    .unwrap()
}

#[test]
fn frullani_converges_to_spectral_log() {
    let sd = setup(300);
    let f = bump(sd.grid());
    let log_f = apply_spectral(sd.as_ref(), &Log, &f).unwrap();
    let table = frullani_table(sd.as_ref(), &f, &[1e2, 2e2, 1e3, 2e3, 1e4, 2e4, 1e6]).unwrap();
    // Per mode the truncation error is (1 - λ)/m + O(m^{-2}), so the
    // L² error at m is ‖(I - L)f‖/m.
    let lead = apply_spectral(sd.as_ref(), &Custom::real("1-x", |l| 1.0 - l), &f)
        .unwrap()
        .l2_norm();
    for (m, out) in &table {
        let err = out.sub(&log_f).unwrap().l2_norm();
        assert!(rel(err * m, lead) < 0.05, "m={m}: {err} vs {}", lead / m);
    }
    let steps: Vec<f64> = table[..6]
        .chunks(2)
        .map(|p| p[0].1.sub(&p[1].1).unwrap().l2_norm())
        .collect();
    assert!(steps[0] > steps[1] && steps[1] > steps[2], "{steps:?}");
}

#[test]
fn frullani_per_mode() {
    let lams = [0.01, 0.5, 1.0, 2.0, 30.0, 5000.0];
    for m in [10.0, 100.0, 1000.0] {
        let w = frullani_multipliers(&lams, m, &QuadratureSpec::default()).unwrap();
        for (&l, &wi) in lams.iter().zip(&w) {
            // closed form through the exponential integral
            let exact = e1(1.0 / m) - e1(m) - e1(l / m) + e1(l * m);
            assert!((wi - exact).abs() < 1e-10, "λ={l} m={m}: {wi} vs {exact}");
            let head = time_quadrature(
                |t| ((-t).exp() - (-l * t).exp()).abs() / t,
                0.0,
                1.0 / m,
                &QuadratureSpec::default(),
            )
            .unwrap();
            assert!((wi - l.ln()).abs() <= e1(m) + e1(l * m) + head + 1e-12);
        }
        assert_eq!(w[2], 0.0);
    }
    let sd = setup(100);
    let phi = sd.eigenvector(3);
    let out = frullani_apply(sd.as_ref(), &phi, 1e4).unwrap();
    let l3 = sd.eigenvalues()[3];
    let expect = phi.scale(l3.ln());
    // truncation bias (1 - λ)/m on a single mode
    let err = out.sub(&expect).unwrap().l2_norm();
    assert!(rel(err, (l3 - 1.0) / 1e4) < 0.01, "{err}");
    assert!(frullani_apply(sd.as_ref(), &phi, 1.0).is_err());
}

#[test]
fn fractional_powers_from_the_heat_semigroup() {
    let m = frac_power_multipliers(&[2.0], 0.3, &QuadratureSpec::default()).unwrap();
    assert!(rel(m[0], 2f64.powf(0.3)) < 1e-12);
    let sd = setup(300);
    let f = bump(sd.grid());
    for (alpha, tol) in [
        (0.5, 1e-7),
        (0.1, 1e-6),
        (0.9, 1e-6),
        (0.05, 1e-5),
        (0.95, 1e-5),
    ] {
        let a = heat_frac_power(sd.as_ref(), &f, alpha).unwrap();
        let b = apply_spectral(sd.as_ref(), &Power::new(alpha).unwrap(), &f).unwrap();
        assert!(rel_l2(&a, &b) < tol, "alpha={alpha}: {}", rel_l2(&a, &b));
    }
    assert!(heat_frac_power(sd.as_ref(), &f, 1.0).is_err());
}

#[test]
fn negative_powers_from_the_heat_semigroup() {
    let m = neg_power_multipliers(&[3.0], 1.2, &QuadratureSpec::default()).unwrap();
    assert!(rel(m[0], 3f64.powf(-1.2)) < 1e-12);
    let sd = setup(300);
    let f = bump(sd.grid());
    for alpha in [0.4, 0.1, 0.5, 0.9] {
        let a = heat_neg_power(sd.as_ref(), &f, alpha).unwrap();
        let b = apply_spectral(sd.as_ref(), &NegPower::new(alpha).unwrap(), &f).unwrap();
        assert!(rel_l2(&a, &b) < 1e-7, "alpha={alpha}");
    }
    let ab = heat_neg_power(
        sd.as_ref(),
        &heat_neg_power(sd.as_ref(), &f, 0.3).unwrap(),
        0.5,
    )
    .unwrap();
    let direct = heat_neg_power(sd.as_ref(), &f, 0.8).unwrap();
    assert!(rel_l2(&ab, &direct) < 1e-6);
}

#[test]
fn time_kernel_closed_forms() {
    let shifted = ShiftedGaussian { dim: 3, m2: 1.0 };
    let spec = QuadratureSpec::default();
    for k in 0..10 {
        let r = 0.2 + 4.8 * k as f64 / 9.0;
        let g = time_kernel_g(
            &shifted,
            &[0.0; 3],
            &[r, 0.0, 0.0],
            TimeWeight::Plain,
            &spec,
        )
        .unwrap();
        let exact = 2.0
            * (4.0 * PI).powf(-1.5)
            * (r / 2.0).powf(-1.5)
            * bessel_k_half_integer(1, r).unwrap();
        assert!(rel(g, exact) < 1e-8, "r={r}");
    }
    // The exp weight on the free kernel is the same integral.
    let free = GaussianFree { dim: 3 };
    let a = time_kernel_g(&free, &[0.0; 3], &[1.0, 0.0, 0.0], TimeWeight::Exp, &spec).unwrap();
    let b = time_kernel_g(
        &shifted,
        &[0.0; 3],
        &[1.0, 0.0, 0.0],
        TimeWeight::Plain,
        &spec,
    )
    .unwrap();
    assert!(rel(a, b) < 1e-10);

    // u = r²/(4t) reduces the free integral to Γ(d/2) π^{-d/2} r^{-d}.
    let g = time_kernel_g(
        &free,
        &[0.1, 0.2, 0.3],
        &[0.6, -0.2, 1.0],
        TimeWeight::Plain,
        &spec,
    )
    .unwrap();
    let r: f64 = (0.25f64 + 0.16 + 0.49).sqrt();
    let exact = PI.sqrt() / 2.0 * PI.powf(-1.5) * r.powi(-3);
    assert!(rel(g, exact) < 1e-10);
    let back = time_kernel_g(
        &free,
        &[0.6, -0.2, 1.0],
        &[0.1, 0.2, 0.3],
        TimeWeight::Plain,
        &spec,
    )
    .unwrap();
    assert!(rel(g, back) < 1e-12);

    assert!(matches!(
        time_kernel_g(&free, &[0.0; 3], &[0.0; 3], TimeWeight::Plain, &spec),
        Err(Error::DiagonalSingularity)
    ));
}

#[test]
fn time_kernel_row_is_the_discrete_log_kernel() {
    // For x ≠ y, ∫_0^∞ Σ_i e^{-λ_i t} φ_i(x) φ_i(y) dt/t = -Σ_i log λ_i φ_i(x) φ_i(y).
    let sd = setup(200);
    let ev = Eigenexpansion::new(sd.clone());
    let k = 90;
    let x = sd.grid().point(k);
    let (g, _, _) = time_kernel_row(
        &ev,
        sd.grid(),
        &x,
        TimeWeight::Plain,
        &QuadratureSpec::with_tol(1e-11),
    )
    .unwrap();
    let phi_x = sd.basis_at_node(k);
    let c: Vec<f64> = phi_x
        .iter()
        .zip(sd.eigenvalues())
        .map(|(p, l)| -l.ln() * p)
        .collect();
    let exact = sd.synthesize_values(&c);
    let scale = exact.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for (j, (a, b)) in g.iter().zip(&exact).enumerate() {
        if j != k {
            assert!((a - b).abs() < 1e-8 * scale, "node {j}: {a} vs {b}");
        }
    }
    assert_eq!(g[k], 0.0);
}

#[test]
fn euler_constant_identity() {
    let one = Potential::one(3).unwrap();
    let rho = one.known_rho(&[0.0; 3]).unwrap();
    let v = euler_identity(rho * rho).unwrap();
    assert!((v + euler_gamma()).abs() < 1e-12);
}

fn unit_potential_setup() -> (ShiftedGaussian, Grid, f64) {
    let grid = Grid::cube(3, -3.5, 3.5, 57).unwrap();
    let rho = Potential::one(3).unwrap().known_rho(&[0.0; 3]).unwrap();
    (ShiftedGaussian { dim: 3, m2: 1.0 }, grid, rho)
}

#[test]
fn k_function_for_unit_potential() {
    let (ev, _, rho) = unit_potential_setup();
    let spec = QuadratureSpec::with_tol(1e-10);
    // ∫_{|z|>1} e^{-|z|}(1 + 1/|z|)/(2π|z|²) dz = 2(e^{-1} + E_1(1)).
    let outside = 2.0 * ((-1f64).exp() + e1(1.0));
    let k_on = |n: usize| {
        k_function(
            &ev,
            &Grid::cube(3, -3.5, 3.5, n).unwrap(),
            rho,
            &[0.0; 3],
            1.0,
            &spec,
        )
        .unwrap()
    };
    let fine = k_on(85);
    assert_eq!(fine.k_value, fine.components().iter().sum::<f64>());
    assert_eq!(fine.gamma, euler_gamma());
    assert!(
        (fine.k_value + outside).abs() < 2e-3,
        "{} vs {}",
        fine.k_value,
        -outside
    );
    // the grid error is second order in the spacing
    let coarse = k_on(43);
    let ratio = (coarse.k_value + outside) / (fine.k_value + outside);
    assert!((3.5..4.5).contains(&ratio), "{ratio}");

    // r-consistency on the grid: K(x,2) - K(x,1) = ∫_{1<|x-y|<=2} G, the
    // sign that keeps the pointwise formula independent of r.
    let big = Grid::cube(3, -4.5, 4.5, 73).unwrap();
    let k1 = k_function(&ev, &big, rho, &[0.0; 3], 1.0, &spec).unwrap();
    let k2 = k_function(&ev, &big, rho, &[0.0; 3], 2.0, &spec).unwrap();
    let (g, _, _) = time_kernel_row(&ev, &big, &[0.0; 3], TimeWeight::Plain, &spec).unwrap();
    let w1 = ball_weights(&big, &[0.0; 3], 1.0);
    let w2 = ball_weights(&big, &[0.0; 3], 2.0);
    let shell: f64 = g
        .iter()
        .zip(w1.iter().zip(&w2))
        .map(|(v, (a, b))| v * (b - a))
        .sum::<f64>()
        * big.cell_volume();
    assert!(
        ((k2.k_value - k1.k_value) - shell).abs() < 1e-6,
        "{} vs {shell}",
        k2.k_value - k1.k_value
    );
}

#[test]
fn k_function_guards() {
    let (ev, grid, rho) = unit_potential_setup();
    let spec = QuadratureSpec::with_tol(1e-8);
    assert!(matches!(
        k_function(&ev, &grid, rho, &[2.0, 0.0, 0.0], 1.0, &spec),
        Err(Error::Domain(_))
    ));
    assert!(matches!(
        k_function(&ev, &grid, rho, &[0.0; 3], 0.2, &spec),
        Err(Error::Domain(_))
    ));
    assert!(k_function(&ev, &grid, -1.0, &[0.0; 3], 1.0, &spec).is_err());
}

fn harmonic_points(grid: &Grid) -> Vec<Vec<f64>> {
    [-2.0, -1.0, 0.0, 0.7, 1.5]
        .iter()
        .map(|&x| grid.point(grid.nearest_index(&[x])[0]))
        .collect()
}

#[test]
fn pointwise_formula_matches_spectral_log() {
    let sd = harmonic_1024();
    let grid = sd.grid().clone();
    let ev = Eigenexpansion::new(sd.clone());
    let v = Potential::harmonic(1).unwrap();
    let f = bump(&grid);
    let oracle = apply_spectral(sd.as_ref(), &Log, &f).unwrap();
    let spec = QuadratureSpec::with_tol(1e-10);
    for x in harmonic_points(&grid) {
        let rho = v.known_rho(&x).unwrap();
        let res = pointwise_log(&ev, rho, &f, &x, 1.0, &spec).unwrap();
        assert_eq!(res.value, res.local_term + res.far_term + res.k_term);
        let exact = oracle.at(&x).unwrap();
        assert!(
            (res.value - exact).abs() < 5e-3 * f.sup_norm(),
            "x={x:?}: {} vs {exact}",
            res.value
        );
        // The grid identity is exact, so only quadrature error remains.
        assert!(
            (res.value - exact).abs() < 1e-6,
            "x={x:?}: {} vs {exact}",
            res.value
        );
    }
}

#[test]
fn pointwise_formula_is_radius_independent() {
    let sd = harmonic_1024();
    let grid = sd.grid().clone();
    let ev = Eigenexpansion::new(sd.clone());
    let f = bump(&grid);
    let x = grid.point(grid.nearest_index(&[0.3])[0]);
    let rho = Potential::harmonic(1).unwrap().known_rho(&x).unwrap();
    let spec = QuadratureSpec::with_tol(1e-10);
    let vals: Vec<f64> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&r| pointwise_log(&ev, rho, &f, &x, r, &spec).unwrap().value)
        .collect();
    for v in &vals[1..] {
        assert!((v - vals[0]).abs() < 1e-7, "{vals:?}");
    }
    // the split radius ρ does not matter either
    let other = pointwise_log(&ev, 0.5 * rho, &f, &x, 1.0, &spec)
        .unwrap()
        .value;
    assert!((other - vals[1]).abs() < 1e-7);
}

#[test]
fn pointwise_formula_for_unit_potential_in_three_dimensions() {
    let (ev, grid, rho) = unit_potential_setup();
    let spec = QuadratureSpec::with_tol(1e-10);
    let f = Field::from_fn(&grid, |y| {
        (-(y.iter().map(|a| a * a).sum::<f64>()) * 2.0).exp() * (1.0 + 0.3 * y[0])
    });
    let x = grid.point(grid.flat_index(&[29, 28, 28]));
    let res = pointwise_log(&ev, rho, &f, &x, 1.0, &spec).unwrap();
    // Single-term form -∫(f(y) - f(x))G(x,y)dy, split at R = 3 with the
    // closed-form tail f(x)∫_{|z|>R}G.
    let (g, _, _) = time_kernel_row(&ev, &grid, &x, TimeWeight::Plain, &spec).unwrap();
    let fx = f.at(&x).unwrap();
    let big_r = 3.0;
    let w = ball_weights(&grid, &x, big_r);
    let reduced: f64 = -f
        .values()
        .iter()
        .zip(g.iter().zip(&w))
        .map(|(fy, (gy, wy))| (wy * (fy - fx) + (1.0 - wy) * fy) * gy)
        .sum::<f64>()
        * grid.cell_volume()
        + fx * 2.0 * ((-big_r).exp() + e1(big_r));
    assert!(
        (res.value - reduced).abs() < 5e-3,
        "{} vs {reduced}",
        res.value
    );
}

#[test]
fn pointwise_formula_for_locally_constant_f() {
    let sd = setup(400);
    let grid = sd.grid().clone();
    let ev = Eigenexpansion::new(sd.clone());
    let x = grid.point(grid.nearest_index(&[0.0])[0]);
    // constant on every cell that meets the ball
    let f = Field::from_fn(
        &grid,
        |y| if (y[0] - x[0]).abs() <= 1.2 { 2.0 } else { 0.0 },
    );
    let rho = Potential::harmonic(1).unwrap().known_rho(&x).unwrap();
    let res = pointwise_log(&ev, rho, &f, &x, 1.0, &QuadratureSpec::with_tol(1e-10)).unwrap();
    assert_eq!(res.local_term, 0.0);
    assert!((res.value - (res.far_term - 2.0 * res.k.k_value)).abs() < 1e-12);
    let zero = Field::from_fn(
        &grid,
        |y| if (y[0] - x[0]).abs() <= 1.2 { 0.0 } else { 1.0 },
    );
    let res = pointwise_log(&ev, rho, &zero, &x, 1.0, &QuadratureSpec::with_tol(1e-10)).unwrap();
    assert_eq!(res.local_term, 0.0);
    assert_eq!(res.k_term, 0.0);
}

#[test]
fn pointwise_guards() {
    let sd = setup(200);
    let ev = Eigenexpansion::new(sd.clone());
    let f = bump(sd.grid());
    let spec = QuadratureSpec::with_tol(1e-8);
    assert!(pointwise_log(&ev, 1.0, &f, &[0.01234], 1.0, &spec).is_err());
    let edge = sd.grid().point(5);
    assert!(matches!(
        pointwise_log(&ev, 1.0, &f, &edge, 1.0, &spec),
        Err(Error::Domain(_))
    ));
}

#[test]
fn extended_domain() {
    let sd = harmonic_1024();
    let grid = sd.grid().clone();
    let ev = Eigenexpansion::new(sd.clone());
    let v = Potential::harmonic(1).unwrap();
    let spec = QuadratureSpec::with_tol(1e-10);
    let x = grid.point(grid.nearest_index(&[0.4])[0]);
    let rho = v.known_rho(&x).unwrap();

    let gauss = |y: &[f64]| (-y[0] * y[0] / 2.0).exp();
    let res = extended_pointwise(&ev, rho, &gauss, &grid, &x, 1.0, 1.0, &spec).unwrap();
    let basis = HermiteBasis::new(1, 40).unwrap();
    let herm = harmonic_log_apply(&basis, &Field::from_fn(&grid, gauss)).unwrap();
    assert!((res.value - herm.field.at(&x).unwrap()).abs() < 1e-2);

    let one = |_: &[f64]| 1.0;
    let res = extended_pointwise(&ev, rho, &one, &grid, &x, 1.0, 1.0, &spec).unwrap();
    assert_eq!(res.local_term, 0.0);

    let x0 = x[0];
    let kink = move |y: &[f64]| (y[0] - x0).abs() * (-(y[0] * y[0])).exp();
    let res = extended_pointwise(&ev, rho, &kink, &grid, &x, 1.0, 1.0, &spec).unwrap();
    assert!(res.value.is_finite());

    let rough = move |y: &[f64]| (y[0] - x0).abs().sqrt();
    assert!(extended_pointwise(&ev, rho, &rough, &grid, &x, 1.0, 1.0, &spec).is_err());
}

#[test]
fn lp_limit_and_left_derivative() {
    let sd = setup(300);
    let f = bump(sd.grid());
    let s_list: Vec<f64> = (0..5).map(|k| 0.1 / 2f64.powi(k)).collect();
    let e2 = lp_limit_probe(sd.as_ref(), &f, 2.0, &s_list).unwrap();
    let einf = lp_limit_probe(sd.as_ref(), &f, f64::INFINITY, &s_list).unwrap();
    let d = schrolog::spectral::derivative_at_zero_probe(sd.as_ref(), &f, &s_list).unwrap();
    for (a, b) in e2.iter().zip(&d.errors) {
        assert!((a - b).abs() < 1e-9 * b);
    }
    for e in [&e2, &einf] {
        for w in e.windows(2) {
            let q = w[1] / w[0];
            assert!((0.4..=0.6).contains(&q), "{q}");
        }
    }
    assert!(lp_limit_probe(sd.as_ref(), &f, 1.0, &s_list).is_err());

    let h_list = [0.1, 0.05, 0.025, 0.0125];
    let left = left_derivative_probe(sd.as_ref(), &f, &h_list).unwrap();
    for w in left.windows(2) {
        assert!((w[0] / w[1] - 2.0).abs() < 0.2);
    }
    // left and right difference quotients converge to the same limit
    let right = lp_limit_probe(sd.as_ref(), &f, 2.0, &h_list).unwrap();
    assert!(left[3] < 0.05 * f.l2_norm() && right[3] < 0.05 * f.l2_norm());

    let phi = sd.eigenvector(0);
    let l = sd.eigenvalues()[0];
    let e = left_derivative_probe(sd.as_ref(), &phi, &[0.01]).unwrap()[0];
    assert!((e - l.ln().powi(2) * 0.01 / 2.0).abs() < 1e-3 * e.max(1e-12) + 1e-14);
}

#[test]
fn three_dimensional_harmonic_tensor() {
    let f1 = spectral_1d(-5.0, 5.0, 81, Potential::harmonic(1).unwrap());
    let ev = TensorProduct::of_eigen(&[f1.clone(), f1.clone(), f1.clone()]).unwrap();
    let ts = schrolog::operator::TensorSpectral::new(vec![f1.clone(), f1.clone(), f1]).unwrap();
    let grid = ts.grid().clone();
    let f = Field::from_fn(&grid, |y| (-(y.iter().map(|a| a * a).sum::<f64>())).exp());
    let oracle = apply_spectral(&ts, &Log, &f).unwrap();
    let v = Potential::harmonic(3).unwrap();
    let x = grid.point(grid.flat_index(&[42, 40, 38]));
    let rho = v.known_rho(&x).unwrap();
    let res = pointwise_log(&ev, rho, &f, &x, 1.0, &QuadratureSpec::with_tol(1e-10)).unwrap();
    let exact = oracle.at(&x).unwrap();
    assert!(
        (res.value - exact).abs() < 5e-3 * f.sup_norm(),
        "{} vs {exact}",
        res.value
    );
}
