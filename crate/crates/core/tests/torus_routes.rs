use catmap_core::classical::{Sl2IntMatrix, TorusPoint};
use catmap_core::metaplectic::*;
use catmap_core::quadrature;
use catmap_core::torus::*;
use num_complex::Complex64;
use std::time::Instant;

#[test]
fn propagator_is_unitary() {
    let t0 = Instant::now();
    for &n in &[2usize, 4, 8, 16, 36, 64] {
        let u = build_propagator_matrix(&Sl2IntMatrix::CAT, n).unwrap();
        let d = unitarity_defect(&u);
        assert!(d < 1e-9, "N = {n}: {d}");
    }
    eprintln!("unitarity: {:?}", t0.elapsed());
}

#[test]
fn two_by_two_determinant_has_unit_modulus() {
    let u = build_propagator_matrix(&Sl2IntMatrix::CAT, 2).unwrap();
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    assert!((det.norm() - 1.0).abs() < 1e-10);
}

#[test]
fn parseval_matches_lattice_pairing() {
    let h = 1.0 / 8.0;
    let g = GaussianState::new(Complex64::new(0.8, -0.3), Complex64::new(0.5, 0.7), 0.31, 0.77, h).unwrap();
    let t = wavepacket(0.6, 0.2, h).unwrap();
    let a = pair_symmetrized(&g, &t).unwrap();
    let b = torus_coefficients(&g).unwrap().inner(&torus_coefficients(&t).unwrap());
    assert!((a - b).norm() < 1e-9, "{a} vs {b}");
}

#[test]
fn lattice_pairing_matches_quadrature_at_n2() {
    let h = 0.5;
    let g = wavepacket(0.0, 0.0, h).unwrap();
    let mut brute = Complex64::new(0.0, 0.0);
    for k1 in -6..=6 {
        for k2 in -6..=6 {
            let v = PlaneTranslation::new(k1 as f64, k2 as f64);
            let val = quadrature::integrate(
                |x| translate_pointwise(|y| g.eval(y), v, h, x) * g.eval(x).conj(),
                -12.0,
                12.0,
                0.5,
                1e-13,
            )
            .unwrap();
            brute += val;
        }
    }
    let fast = pair_symmetrized(&g, &g).unwrap();
    assert!((fast - brute).norm() < 1e-10, "{fast} vs {brute}");
    assert!(fast.im.abs() < 1e-14 && fast.re > 0.0);
}

#[test]
fn centered_packet_coefficients_are_real() {
    let d = torus_coefficients(&wavepacket(0.0, 0.0, 0.5).unwrap()).unwrap();
    for c in d.coeffs.iter() {
        assert!(c.im.abs() < 1e-14);
    }
}

#[test]
fn comb_family_has_full_rank() {
    for &n in &[2usize, 4, 8, 16] {
        let ev = hermitian_eigenvalues(&comb_gram(n).unwrap());
        assert!(ev[0] > 1e-10, "N = {n}: {}", ev[0]);
    }
}

#[test]
fn matrix_power_agrees_with_exact_element() {
    let n_dim = 16;
    let h = 1.0 / n_dim as f64;
    let u = build_propagator_matrix(&Sl2IntMatrix::CAT, n_dim).unwrap();
    let cases = [
        (0u32, TorusPoint::new(0.0, 0.0), TorusPoint::new(0.0, 0.0)),
        (1, TorusPoint::new(0.0, 0.0), TorusPoint::new(0.0, 0.0)),
        (2, TorusPoint::new(0.3, 0.7), TorusPoint::new(0.1, 0.5)),
        (3, TorusPoint::new(0.55, 0.12), TorusPoint::new(0.9, 0.4)),
    ];
    for (n, src, dst) in cases {
        let mut s = torus_coefficients(&wavepacket(src.q(), src.p(), h).unwrap()).unwrap();
        for _ in 0..n {
            s = s.apply(&u);
        }
        let d = torus_coefficients(&wavepacket(dst.q(), dst.p(), h).unwrap()).unwrap();
        let via_matrix = s.inner(&d);
        let exact = matrix_element_exact(&Sl2IntMatrix::CAT, n, src, dst, n_dim).unwrap();
        assert!((via_matrix - exact).norm() < 1e-8, "n = {n}: {via_matrix} vs {exact}");
    }
}

#[test]
fn equivariance_on_the_quotient() {
    let n_dim = 8;
    let h = 1.0 / n_dim as f64;
    let u = build_propagator_matrix(&Sl2IntMatrix::CAT, n_dim).unwrap();
    let g = GaussianState::new(Complex64::new(1.0, 0.2), Complex64::new(0.3, 0.9), 0.4, 0.1, h).unwrap();
    let lhs = torus_coefficients(&g).unwrap().apply(&u);
    let rhs = torus_coefficients(&propagate_gaussian(&Sl2IntMatrix::CAT, &g).unwrap()).unwrap();
    assert!((lhs.coeffs - rhs.coeffs).norm() < 1e-8);
}

#[test]
fn exact_element_ignores_integer_shifts() {
    let n_dim = 16;
    let m = Sl2IntMatrix::CAT;
    let a = matrix_element_exact(&m, 2, TorusPoint::new(0.2, 0.3), TorusPoint::new(0.6, 0.1), n_dim).unwrap();
    // Same torus points, different lifts.
    let h = 1.0 / n_dim as f64;
    let src = wavepacket(1.2, -0.7, h).unwrap();
    let moved = propagate_power(&m, 2, &src).unwrap();
    let b = pair_symmetrized(&moved, &wavepacket(-0.4, 2.1, h).unwrap()).unwrap();
    assert!((a.norm() - b.norm()).abs() < 1e-10, "{a} {b}");
}

#[test]
fn husimi_mass_and_peak() {
    let n_dim = 32;
    let h = 1.0 / n_dim as f64;
    let s = torus_coefficients(&wavepacket(0.3, 0.6, h).unwrap()).unwrap();
    let grid = husimi_of_state(&s, 128).unwrap();
    assert!(grid.values.iter().all(|v| *v >= 0.0));
    let rel = (grid.total_mass() - s.norm_sq()).abs() / s.norm_sq();
    assert!(rel < 1e-3, "{rel}");

    let s = torus_coefficients(&wavepacket(0.5, 0.5, 1.0 / 64.0).unwrap()).unwrap();
    let grid = husimi_of_state(&s, 64).unwrap();
    let (i, j) = grid.argmax();
    assert!((i as i64 - 32).abs() <= 1 && (j as i64 - 32).abs() <= 1);
}

#[test]
fn frame_conditioning_is_finite() {
    let c = frame_condition_number(16).unwrap();
    assert!(c.is_finite() && c >= 1.0);
}

#[test]
fn eigenvalues_lie_on_the_circle() {
    let u = build_propagator_matrix(&Sl2IntMatrix::CAT, 16).unwrap();
    for z in eigenvalues(&u).unwrap() {
        assert!((z.norm() - 1.0).abs() < 1e-9);
    }
    assert_eq!(eigenphases(&u).unwrap().len(), 16);
}

#[test]
fn phases_stay_below_two_pi() {
    assert_eq!(phase_of(Complex64::new(1.0, -1e-300)), 0.0);
    assert_eq!(phase_of(Complex64::new(1.0, 0.0)), 0.0);
    assert!((phase_of(Complex64::new(0.0, -1.0)) - 1.5 * std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn clustered_spectrum_of_a_shear_converges() {
    let u = build_propagator_matrix(&Sl2IntMatrix::new(1, 1, 0, 1).unwrap(), 36).unwrap();
    let ev = eigenvalues(&u).unwrap();
    assert_eq!(ev.len(), 36);
    assert!(ev.iter().all(|z| (z.norm() - 1.0).abs() < 1e-9));
}
