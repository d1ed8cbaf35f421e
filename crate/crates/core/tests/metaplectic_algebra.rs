use catmap_core::classical::{flow_coefficients, hamiltonian_from_matrix, QuadraticHamiltonian, Sl2IntMatrix};
use catmap_core::metaplectic::*;
use catmap_core::quadrature;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

fn random_state(rng: &mut ChaCha8Rng, h: f64) -> GaussianState {
    GaussianState::new(
        Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(-PI..PI)),
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0)),
        rng.gen_range(-0.5..0.5),
        rng.gen_range(-0.5..0.5),
        h,
    )
    .unwrap()
}

fn random_h(rng: &mut ChaCha8Rng) -> f64 {
    1.0 / rng.gen_range(2..40) as f64
}

fn grid(center: f64, half: f64) -> impl Iterator<Item = f64> {
    (0..100).map(move |k| center - half + 2.0 * half * k as f64 / 99.0)
}

#[test]
fn translation_matches_pointwise_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let h = random_h(&mut rng);
        let g = random_state(&mut rng, h);
        let v = PlaneTranslation::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let moved = translate(&g, v);
        for x in grid(moved.q, 1.0) {
            let direct = translate_pointwise(|y| g.eval(y), v, h, x);
            assert!((moved.eval(x) - direct).norm() < 1e-9);
        }
    }
}

#[test]
fn composition_picks_up_determinant_phase() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let h = rng.gen_range(0.05..1.0);
        let g = random_state(&mut rng, h);
        let v1 = PlaneTranslation::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let v2 = PlaneTranslation::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let phase = compose_translation_phase(v1, v2, h);
        let sum = PlaneTranslation::new(v1.a + v2.a, v1.b + v2.b);
        for x in grid(g.q, 1.0) {
            let lhs = translate_pointwise(|y| translate_pointwise(|z| g.eval(z), v2, h, y), v1, h, x);
            let rhs = phase * translate_pointwise(|y| g.eval(y), sum, h, x);
            assert!((lhs - rhs).norm() < 1e-9);
        }
    }
}

#[test]
fn commutator_of_translations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let h = rng.gen_range(0.05..1.0);
        let g = random_state(&mut rng, h);
        let v1 = PlaneTranslation::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let v2 = PlaneTranslation::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        // T_v1 T_v2 = exp(-2 i pi det(v1, v2) / h) T_v2 T_v1
        let det = v1.a * v2.b - v1.b * v2.a;
        let c = Complex64::from_polar(1.0, -2.0 * PI * det / h);
        let a = translate(&translate(&g, v2), v1);
        let b = translate(&translate(&g, v1), v2);
        for x in grid(a.q, 1.0) {
            assert!((a.eval(x) - c * b.eval(x)).norm() < 1e-9);
        }
    }
    // Unit translations commute exactly when 1/h is an integer.
    let g = wavepacket(0.1, 0.2, 1.0 / 6.0).unwrap();
    let (e1, e2) = (PlaneTranslation::new(1.0, 0.0), PlaneTranslation::new(0.0, 1.0));
    let a = translate(&translate(&g, e2), e1);
    let b = translate(&translate(&g, e1), e2);
    assert!((a.amplitude - b.amplitude).norm() < 1e-12);
    let g = wavepacket(0.1, 0.2, 0.4).unwrap();
    let a = translate(&translate(&g, e2), e1);
    let b = translate(&translate(&g, e1), e2);
    assert!((a.amplitude - b.amplitude).norm() > 1e-3);
}

#[test]
fn compose_phase_examples() {
    let (e1, e2) = (PlaneTranslation::new(1.0, 0.0), PlaneTranslation::new(0.0, 1.0));
    assert!((compose_translation_phase(e1, e2, 0.5) - 1.0).norm() < 1e-12);
    assert!((compose_translation_phase(e1, e2, 1.0 / 8.0) - 1.0).norm() < 1e-12);
    let v = PlaneTranslation::new(0.3, -0.7);
    assert!((compose_translation_phase(v, v, 0.1) - 1.0).norm() < 1e-15);
}

fn random_hyperbolic(rng: &mut ChaCha8Rng) -> Sl2IntMatrix {
    let gens = [
        Sl2IntMatrix::CAT,
        Sl2IntMatrix::new(1, 1, 0, 1).unwrap(),
        Sl2IntMatrix::new(1, 0, 1, 1).unwrap(),
    ];
    loop {
        let mut m = Sl2IntMatrix::IDENTITY;
        for _ in 0..rng.gen_range(1..5) {
            m = m.checked_mul(&gens[rng.gen_range(0..3)]).unwrap();
        }
        if m.trace() > 2 && m.a() > 0 {
            return m;
        }
    }
}

#[test]
fn propagation_is_translation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let m = random_hyperbolic(&mut rng);
        let h = random_h(&mut rng);
        let g = random_state(&mut rng, h);
        let v = PlaneTranslation::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let [a, b, c, d] = m.entries_f64();
        let mv = PlaneTranslation::new(a * v.a + b * v.b, c * v.a + d * v.b);
        let lhs = propagate_gaussian(&m, &translate(&g, v)).unwrap();
        let rhs = translate(&propagate_gaussian(&m, &g).unwrap(), mv);
        let half = 6.0 * lhs.position_width();
        let scale = lhs.eval(lhs.q).norm();
        for x in grid(lhs.q, half) {
            assert!((lhs.eval(x) - rhs.eval(x)).norm() < 1e-9 * scale.max(1.0), "{m:?}");
        }
    }
}

#[test]
fn propagation_preserves_norm_and_moves_centres() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let m = random_hyperbolic(&mut rng);
        let h = random_h(&mut rng);
        let g = random_state(&mut rng, h);
        let out = propagate_gaussian(&m, &g).unwrap();
        assert!((out.norm_sq() - g.norm_sq()).abs() < 1e-10 * g.norm_sq());
        assert!(out.theta.im > 0.0);
        let [a, b, c, d] = m.entries_f64();
        assert!((out.q - (a * g.q + b * g.p)).abs() < 1e-14);
        assert!((out.p - (c * g.q + d * g.p)).abs() < 1e-14);
    }
}

#[test]
fn group_law_up_to_phase() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let m1 = random_hyperbolic(&mut rng);
        let m2 = random_hyperbolic(&mut rng);
        let prod = m1.checked_mul(&m2).unwrap();
        let h = random_h(&mut rng);
        let g = random_state(&mut rng, h);
        let step = propagate_gaussian(&m1, &propagate_gaussian(&m2, &g).unwrap()).unwrap();
        let Ok(direct) = propagate_gaussian(&prod, &g) else { continue };
        let o = gaussian_overlap(&step, &direct).unwrap();
        assert!((o.norm() - g.norm_sq()).abs() < 1e-8 * g.norm_sq());
    }
}

#[test]
fn dilation_and_identity_examples() {
    let lambda = (3.0 + 5f64.sqrt()) / 2.0;
    let ham = QuadraticHamiltonian { alpha: 0.0, beta: 0.0, gamma: lambda.ln() };
    let g = wavepacket(0.0, 0.0, 1.0 / 16.0).unwrap();
    let out = propagate_flow(&ham, 1.0, &g);
    assert!((out.theta - Complex64::new(0.0, lambda.powi(-2))).norm() < 1e-12);
    assert!((out.amplitude - g.amplitude * lambda.powf(-0.5)).norm() < 1e-12);
    assert_eq!(propagate_gaussian(&Sl2IntMatrix::IDENTITY, &g).unwrap(), g);

    // Cat map at the origin: exponent -(1/(a^2 (1 + i gamma)) - i gamma) pi x^2 / h, a = 2, gamma = 1/2.
    // The `1 - i gamma` form belongs to the rejected kernel sign.
    let out = propagate_gaussian(&Sl2IntMatrix::CAT, &g).unwrap();
    let gam = Complex64::new(0.0, 0.5);
    let exponent = Complex64::new(0.0, 1.0) * out.theta;
    assert!((exponent + (1.0 / (4.0 * (1.0 + gam)) - gam)).norm() < 1e-12);
    assert!((exponent + (1.0 / (4.0 * (1.0 - gam)) - gam)).norm() > 0.1);
}

#[test]
fn fourier_is_unitary_and_fixes_the_standard_packet() {
    let g = wavepacket(0.0, 0.0, 0.2).unwrap();
    let f = h_fourier_gaussian(&g);
    assert!((f.theta - g.theta).norm() < 1e-15 && (f.amplitude - g.amplitude).norm() < 1e-14);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let h = random_h(&mut rng);
        let g = random_state(&mut rng, h);
        let f = h_fourier_gaussian(&g);
        assert!((f.norm_sq() - g.norm_sq()).abs() < 1e-12 * g.norm_sq());
        let ff = h_fourier_gaussian(&f);
        let ratio = ff.eval(0.13) / g.eval(-0.13);
        assert!((ratio.norm() - 1.0).abs() < 1e-10);
        for x in [-0.4, 0.0, 0.21] {
            assert!((ff.eval(x) - ratio * g.eval(-x)).norm() < 1e-9 * g.amplitude.norm());
        }
    }
}

/// Overlap by tanh-sinh quadrature.
fn overlap_quadrature(g1: &GaussianState, g2: &GaussianState) -> Complex64 {
    let w = g1.position_width().max(g2.position_width());
    let lo = g1.q.min(g2.q) - 14.0 * w;
    let hi = g1.q.max(g2.q) + 14.0 * w;
    quadrature::integrate(|x| g1.eval(x) * g2.eval(x).conj(), lo, hi, w, 1e-13).unwrap()
}

#[test]
fn closed_forms_match_quadrature_oracles() {
    let ham = hamiltonian_from_matrix(&Sl2IntMatrix::CAT).unwrap();
    let configs: Vec<(f64, f64, GaussianState, GaussianState)> = {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        (0..30)
            .map(|_| {
                let h = [1.0 / 8.0, 1.0 / 16.0][rng.gen_range(0..2)];
                let t = rng.gen_range(0.1..1.2);
                let g = random_state(&mut rng, h);
                let other = random_state(&mut rng, h);
                (h, t, g, other)
            })
            .collect()
    };
    let worst: Vec<(f64, f64)> = configs
        .par_iter()
        .map(|(_, t, g, other)| {
            let exact = propagate_flow(&ham, *t, g);
            let f = flow_coefficients(&ham, *t);
            let w = g.position_width();
            let oracle = KernelOracle::new(
                f.entries(),
                g.h,
                |y| gaussian_eval(g, y),
                (g.q - 14.0 * w, g.q + 14.0 * w),
                w,
                exact.q.abs() + 1.0,
            )
            .unwrap();
            let ew = exact.position_width();
            let scale = exact.amplitude.norm();
            let kernel_err = [-1.5, -0.5, 0.0, 0.5, 1.5]
                .iter()
                .map(|s| {
                    let x = exact.q + s * ew;
                    (oracle.eval(x).unwrap() - exact.eval(x)).norm() / scale
                })
                .fold(0.0, f64::max);
            let closed = gaussian_overlap(&exact, other).unwrap();
            let quad = overlap_quadrature(&exact, other);
            let overlap_err = (closed - quad).norm() / (exact.norm_sq() * other.norm_sq()).sqrt();
            (kernel_err, overlap_err)
        })
        .collect();
    for (i, (k, o)) in worst.iter().enumerate() {
        assert!(*k < 1e-8 && *o < 1e-8, "config {i}: kernel {k:e} overlap {o:e}");
    }
}

#[test]
fn overlap_examples() {
    let g = wavepacket(0.0, 0.0, 0.25).unwrap();
    assert!((gaussian_overlap(&g, &g).unwrap() - 1.0).norm() < 1e-14);
    let g2 = wavepacket(0.5, 0.0, 0.25).unwrap();
    assert!((gaussian_overlap(&g, &g2).unwrap().norm() - 0.2078795763507619).abs() < 1e-6);
    assert!(gaussian_overlap(&g, &wavepacket(0.0, 0.0, 0.5).unwrap()).is_err());
}

/// `u(t, x) = a_t^(-1/2) exp(2 i pi S / h)` with `S = (c x^2 + 2 x xi + sign b xi^2) / (2 a)`.
fn explicit_solution(ham: &QuadraticHamiltonian, t: f64, x: f64, xi: f64, h: f64, sign: f64) -> Complex64 {
    let f = flow_coefficients(ham, t);
    let s = (f.c * x * x + 2.0 * x * xi + sign * f.b * xi * xi) / (2.0 * f.a);
    Complex64::new(f.a, 0.0).powf(-0.5) * Complex64::from_polar(1.0, 2.0 * PI * s / h)
}

fn fd_residual(ham: &QuadraticHamiltonian, t: f64, x: f64, xi: f64, h: f64, sign: f64) -> f64 {
    let hbar = h / (2.0 * PI);
    let e = 1e-4;
    let u = |t: f64, x: f64| explicit_solution(ham, t, x, xi, h, sign);
    let u0 = u(t, x);
    let u_t = (u(t + e, x) - u(t - e, x)) / (2.0 * e);
    let u_x = (u(t, x + e) - u(t, x - e)) / (2.0 * e);
    let u_xx = (u(t, x + e) - 2.0 * u0 + u(t, x - e)) / (e * e);
    let i = Complex64::new(0.0, 1.0);
    let hu = 0.5 * ham.alpha * x * x * u0 - i * hbar * ham.gamma * (x * u_x + 0.5 * u0)
        - 0.5 * hbar * hbar * ham.beta * u_xx;
    (i * hbar * u_t - hu).norm()
}

#[test]
fn schrodinger_residual_vanishes_on_27_triples() {
    let ham = hamiltonian_from_matrix(&Sl2IntMatrix::CAT).unwrap();
    let h = 1.0 / 32.0;
    for t in [0.1, 0.5, 1.0] {
        for x in [-1.0, 0.0, 1.0] {
            for xi in [-0.3, 0.0, 0.3] {
                let r = schrodinger_residual(&ham, t, x, xi, h);
                assert!(r < 1e-7, "t={t} x={x} xi={xi}: {r}");
            }
        }
    }
}

#[test]
fn opposite_kernel_sign_is_not_a_solution() {
    let ham = hamiltonian_from_matrix(&Sl2IntMatrix::CAT).unwrap();
    let r = schrodinger_residual_with_sign(&ham, 0.5, 1.0, 0.3, 1.0 / 32.0, -KERNEL_XI_SIGN);
    assert!(r > 1e-3, "{r}");
}

#[test]
fn closed_form_residual_agrees_with_finite_differences() {
    let ham = hamiltonian_from_matrix(&Sl2IntMatrix::CAT).unwrap();
    let h = 1.0 / 32.0;
    for t in [0.1, 0.5, 1.0] {
        for x in [-1.0, 0.0, 1.0] {
            let fd = fd_residual(&ham, t, x, 0.3, h, KERNEL_XI_SIGN);
            assert!(fd < 1e-5, "{fd}");
            let fd_wrong = fd_residual(&ham, t, x, 0.3, h, -KERNEL_XI_SIGN);
            let wrong = schrodinger_residual_with_sign(&ham, t, x, 0.3, h, -KERNEL_XI_SIGN);
            assert!((fd_wrong - wrong).abs() < 1e-4 * wrong.max(1.0), "{fd_wrong} {wrong}");
        }
    }
}

#[test]
fn dilation_flow_residual_and_initial_datum() {
    let ham = QuadraticHamiltonian { alpha: 0.0, beta: 0.0, gamma: 0.9 };
    for t in [0.1, 0.5, 1.0] {
        for x in [-1.0, 0.0, 1.0] {
            assert!(schrodinger_residual(&ham, t, x, 0.3, 1.0 / 32.0) < 1e-9);
        }
    }
    let ham = hamiltonian_from_matrix(&Sl2IntMatrix::CAT).unwrap();
    let u0 = explicit_solution(&ham, 0.0, 0.7, 0.3, 0.1, KERNEL_XI_SIGN);
    assert!((u0 - Complex64::from_polar(1.0, 2.0 * PI * 0.7 * 0.3 / 0.1)).norm() < 1e-12);
}
