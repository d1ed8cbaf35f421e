//! Gaussian states on the line and their exact images under the metaplectic
//! propagator, quantum translations and the h-Fourier transform.
//!
//! A state is `A exp(i pi Theta (x-q)^2 / h) exp(2 i pi p (x-q) / h)` with
//! `Im Theta > 0`. The family is closed under every operator in this module.

use crate::classical::{
    flow_coefficients, flow_derivative, hamiltonian_from_matrix, QuadraticHamiltonian,
    Sl2IntMatrix,
};
use crate::dd::{cis_pi, Dd};
use crate::error::{CatError, Result};
use crate::quadrature;
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

/// Sign of the `b xi^2` term in the generating function of the propagator
/// kernel. Fixed by the Schrodinger residual test.
pub const KERNEL_XI_SIGN: f64 = -1.0;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub amplitude: Complex64,
    pub theta: Complex64,
    pub q: f64,
    pub p: f64,
    pub h: f64,
}

impl GaussianState {
    pub fn new(amplitude: Complex64, theta: Complex64, q: f64, p: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(CatError::NonPositiveH(h));
        }
        if !(theta.im > 0.0) {
            return Err(CatError::NotNormalizable(theta.im));
        }
        Ok(GaussianState { amplitude, theta, q, p, h })
    }

    pub fn norm_sq(&self) -> f64 {
        self.amplitude.norm_sqr() * (self.h / (2.0 * self.theta.im)).sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() < 1e-12
    }

    pub fn scaled(&self, z: Complex64) -> Self {
        GaussianState { amplitude: self.amplitude * z, ..*self }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        gaussian_eval(self, x)
    }

    /// Standard deviation of `|g|^2` in position.
    pub fn position_width(&self) -> f64 {
        (self.h / (4.0 * PI * self.theta.im)).sqrt()
    }
}

pub fn wavepacket(q: f64, p: f64, h: f64) -> Result<GaussianState> {
    if !(h > 0.0) {
        return Err(CatError::NonPositiveH(h));
    }
    let c_h = (2.0 / h).powf(0.25);
    GaussianState::new(Complex64::new(c_h, 0.0), I, q, p, h)
}

/// Pointwise value; the oscillating phase is reduced mod 2 pi in double-double.
pub fn gaussian_eval(g: &GaussianState, x: f64) -> Complex64 {
    let y = Dd::sum(x, -g.q);
    let yf = y.to_f64();
    let modulus = (-PI * g.theta.im * yf * yf / g.h).exp();
    let arg = ((y * y).mul_f64(g.theta.re) + y.mul_f64(2.0 * g.p)).div_f64(g.h);
    g.amplitude * cis_pi(arg) * modulus
}

/// Phase-space translation vector `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneTranslation {
    pub a: f64,
    pub b: f64,
}

impl PlaneTranslation {
    pub fn new(a: f64, b: f64) -> Self {
        PlaneTranslation { a, b }
    }
}

/// `T_(a,b) u (x) = exp(-i pi a b / h) exp(2 i pi b x / h) u(x - a)`.
pub fn translate_pointwise<F>(u: F, v: PlaneTranslation, h: f64, x: f64) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let arg = (Dd::prod(2.0 * v.b, x) - Dd::prod(v.a, v.b)).div_f64(h);
    cis_pi(arg) * u(x - v.a)
}

pub fn translate(g: &GaussianState, v: PlaneTranslation) -> GaussianState {
    // exp(i pi a b / h) exp(2 i pi b q / h)
    let arg = (Dd::prod(v.a, v.b) + Dd::prod(2.0 * v.b, g.q)).div_f64(g.h);
    GaussianState {
        amplitude: g.amplitude * cis_pi(arg),
        q: g.q + v.a,
        p: g.p + v.b,
        ..*g
    }
}

/// `T_v1 T_v2 = phase * T_(v1 + v2)`.
pub fn compose_translation_phase(v1: PlaneTranslation, v2: PlaneTranslation, h: f64) -> Complex64 {
    let det = Dd::prod(v1.a, v2.b) - Dd::prod(v1.b, v2.a);
    cis_pi(-det.div_f64(h))
}

/// Argument of `a_t + b_t Theta` followed continuously from `t = 0`.
fn tracked_arg(ham: &QuadraticHamiltonian, t_end: f64, theta: Complex64) -> f64 {
    let mut steps = 64usize;
    'refine: loop {
        let mut acc = 0.0;
        let mut prev = Complex64::new(1.0, 0.0);
        for k in 1..=steps {
            let f = flow_coefficients(ham, t_end * k as f64 / steps as f64);
            let z = f.a + f.b * theta;
            let d = (z / prev).arg();
            if d.abs() > 0.5 {
                steps *= 4;
                if steps > 1 << 20 {
                    return acc + d;
                }
                continue 'refine;
            }
            acc += d;
            prev = z;
        }
        return acc;
    }
}

/// Image under the linear map `[[a, b], [c, d]]` with the square-root branch
/// whose argument lies nearest to `arg_hint / 2`.
pub fn propagate_linear(coeffs: [f64; 4], arg_hint: f64, g: &GaussianState) -> GaussianState {
    let [a, b, c, d] = coeffs;
    let z = a + b * g.theta;
    let mut arg = z.arg();
    let k = ((arg_hint - arg) / (2.0 * PI)).round();
    arg += 2.0 * PI * k;
    let root_inv = Complex64::from_polar(z.norm().powf(-0.5), -0.5 * arg);
    let theta = (c + d * g.theta) / z;
    // M T_(q,p) = T_(M(q,p)) M and T_(q,p) g0 = exp(i pi q p / h) g.
    let q_new = Dd::prod(a, g.q) + Dd::prod(b, g.p);
    let p_new = Dd::prod(c, g.q) + Dd::prod(d, g.p);
    let arg_c = (q_new * p_new - Dd::prod(g.q, g.p)).div_f64(g.h);
    GaussianState {
        amplitude: g.amplitude * root_inv * cis_pi(arg_c),
        theta,
        q: q_new.to_f64(),
        p: p_new.to_f64(),
        h: g.h,
    }
}

/// Propagation along the flow of `ham` for time `t`, branch followed continuously.
pub fn propagate_flow(ham: &QuadraticHamiltonian, t: f64, g: &GaussianState) -> GaussianState {
    let f = flow_coefficients(ham, t);
    let hint = tracked_arg(ham, t, g.theta);
    propagate_linear(f.entries(), hint, g)
}

/// Branch hint for `M^n`: continuous along `exp(t m)` when `M` has trace > 2.
fn power_hint(m: &Sl2IntMatrix, n: u32, theta: Complex64) -> Option<f64> {
    if m.trace() > 2 {
        let ham = hamiltonian_from_matrix(m).ok()?;
        Some(tracked_arg(&ham, n as f64, theta))
    } else {
        None
    }
}

/// `M^` applied to a Gaussian state.
///
/// For trace > 2 the branch follows the Hamiltonian flow from the identity;
/// otherwise the principal branch of `(a + b Theta)^(-1/2)` is used.
pub fn propagate_gaussian(m: &Sl2IntMatrix, g: &GaussianState) -> Result<GaussianState> {
    if m.a() == 0 {
        return Err(CatError::ZeroACoefficient);
    }
    if *m == Sl2IntMatrix::IDENTITY {
        return Ok(*g);
    }
    let hint = power_hint(m, 1, g.theta).unwrap_or(0.0);
    Ok(propagate_linear(m.entries_f64(), hint, g))
}

/// `(M^)^n g`, computed from the exact integer entries of `M^n`.
pub fn propagate_power(m: &Sl2IntMatrix, n: u32, g: &GaussianState) -> Result<GaussianState> {
    if m.a() == 0 {
        return Err(CatError::ZeroACoefficient);
    }
    let mn = m
        .checked_pow(n)
        .filter(|p| p.entries().iter().all(|e| e.unsigned_abs() < (1u64 << 53)))
        .ok_or(CatError::TruncationOverflow { needed: u64::MAX, cap: 1 << 53 })?;
    match power_hint(m, n, g.theta) {
        Some(hint) => Ok(propagate_linear(mn.entries_f64(), hint, g)),
        None => {
            let mut s = *g;
            for _ in 0..n {
                s = propagate_gaussian(m, &s)?;
            }
            Ok(s)
        }
    }
}

fn check_same_h(h1: f64, h2: f64) -> Result<()> {
    if (h1 - h2).abs() > 1e-14 * h1.abs().max(h2.abs()) {
        return Err(CatError::MismatchedH(h1, h2));
    }
    Ok(())
}

/// `<g1, g2> = int g1 conj(g2)` in closed form.
pub fn gaussian_overlap(g1: &GaussianState, g2: &GaussianState) -> Result<Complex64> {
    check_same_h(g1.h, g2.h)?;
    let h = g1.h;
    let t1 = g1.theta;
    let t2c = g2.theta.conj();
    let a = -I * (t1 - t2c);
    let delta = g2.q - g1.q;
    let v = g1.p - g2.p;
    // B^2 / A + C0 with the delta^2 terms combined before division.
    let num = -t1 * t2c * delta * delta - 2.0 * t1 * delta * v - v * v
        + 2.0 * I * a * g1.p * delta;
    let e = num / a;
    Ok(g1.amplitude * g2.amplitude.conj() * (h / a).sqrt() * (PI / h * e).exp())
}

/// Unitary h-Fourier transform `h^(-1/2) int exp(-2 i pi x xi / h) g(x) dx`.
pub fn h_fourier_gaussian(g: &GaussianState) -> GaussianState {
    let root = (-I * g.theta).powf(-0.5);
    let arg = Dd::prod(-2.0 * g.q, g.p).div_f64(g.h);
    GaussianState {
        amplitude: g.amplitude * root * cis_pi(arg),
        theta: -1.0 / g.theta,
        q: g.p,
        p: -g.q,
        h: g.h,
    }
}

/// Quadrature value of the unitary h-Fourier transform of `f` at `xi`.
pub fn h_fourier_quadrature<F>(f: F, window: (f64, f64), panel: f64, xi: f64, h: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    h_fourier_quadrature_tol(f, window, panel, xi, h, 1e-12)
}

fn h_fourier_quadrature_tol<F>(f: F, window: (f64, f64), panel: f64, xi: f64, h: f64, tol: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let v = quadrature::integrate(
        |x| f(x) * cis_pi(Dd::prod(-2.0 * x, xi).div_f64(h)),
        window.0,
        window.1,
        panel,
        tol,
    )?;
    Ok(v / h.sqrt())
}

/// Direct quadrature of the propagator kernel
/// `(a h)^(-1/2) int exp(2 i pi S(x, xi) / h) F_h f(xi) dxi`,
/// `S = (c x^2 + sign b xi^2 + 2 x xi) / (2 a)`.
///
/// The transform `F_h f` is itself computed by quadrature and cached, so one
/// oracle evaluated at many points shares its nodes.
pub struct KernelOracle<F> {
    coeffs: [f64; 4],
    h: f64,
    f: F,
    f_window: (f64, f64),
    f_panel: f64,
    xi_window: (f64, f64),
    xi_panel: f64,
    cache: Mutex<HashMap<u64, Complex64>>,
}

impl<F> KernelOracle<F>
where
    F: Fn(f64) -> Complex64,
{
    /// `f_window` must contain the support of `f` up to 1e-16 relative;
    /// `x_max` bounds the evaluation points (sets the oscillation resolution).
    pub fn new(
        coeffs: [f64; 4],
        h: f64,
        f: F,
        f_window: (f64, f64),
        f_scale: f64,
        x_max: f64,
    ) -> Result<Self> {
        if coeffs[0] == 0.0 {
            return Err(CatError::ZeroACoefficient);
        }
        let mut o = KernelOracle {
            coeffs,
            h,
            f,
            f_window,
            f_panel: 3.0 * f_scale,
            xi_window: (0.0, 0.0),
            xi_panel: 0.0,
            cache: Mutex::new(HashMap::new()),
        };
        // Grow the xi window until the transform is below 1e-14 of its peak.
        let mut peak: f64 = 0.0;
        // Half the minimal transform width allowed by the uncertainty bound.
        let step = 0.5 * f_scale.min(h / (4.0 * PI * f_scale));
        let mut lo = 0.0;
        let mut hi = 0.0;
        let mut k = 0i64;
        loop {
            let a = o.fhat(-(k as f64) * step)?.norm();
            let b = o.fhat(k as f64 * step)?.norm();
            peak = peak.max(a).max(b);
            if a > 1e-14 * peak {
                lo = -(k as f64 + 1.0) * step;
            }
            if b > 1e-14 * peak {
                hi = (k as f64 + 1.0) * step;
            }
            k += 1;
            let done = k > 8 && a <= 1e-15 * peak && b <= 1e-15 * peak
                && (k as f64) * step > 1.2 * lo.abs().max(hi);
            if done || k > 20000 {
                break;
            }
        }
        o.xi_window = (lo - 2.0 * step, hi + 2.0 * step);
        let [a, b, _, _] = coeffs;
        let w = o.xi_window.0.abs().max(o.xi_window.1.abs());
        let cycles_per_unit = (b.abs() * w + x_max) / (a.abs() * h);
        o.xi_panel = (2.0 / cycles_per_unit).min(6.0 * step);
        o.cache.lock().unwrap().clear();
        Ok(o)
    }

    fn fhat(&self, xi: f64) -> Result<Complex64> {
        let key = xi.to_bits();
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = h_fourier_quadrature_tol(&self.f, self.f_window, self.f_panel, xi, self.h, 1e-10)?;
        self.cache.lock().unwrap().insert(key, v);
        Ok(v)
    }

    pub fn eval(&self, x: f64) -> Result<Complex64> {
        let [a, b, c, _] = self.coeffs;
        let h = self.h;
        let err = std::cell::Cell::new(None);
        let integrand = |xi: f64| {
            let s = (Dd::prod(c * x, x) + Dd::prod(KERNEL_XI_SIGN * b * xi, xi)
                + Dd::prod(2.0 * x, xi))
            .div_f64(a * h);
            match self.fhat(xi) {
                Ok(v) => cis_pi(s) * v,
                Err(e) => {
                    err.set(Some(e));
                    Complex64::new(0.0, 0.0)
                }
            }
        };
        let v = quadrature::integrate(integrand, self.xi_window.0, self.xi_window.1, self.xi_panel, 1e-10)?;
        if let Some(e) = err.take() {
            return Err(e);
        }
        Ok(v * Complex64::new(a * h, 0.0).powf(-0.5))
    }
}

/// One-shot form of [`KernelOracle`] for a Gaussian input state.
pub fn kernel_quadrature_oracle(coeffs: [f64; 4], g: &GaussianState, x: f64) -> Result<Complex64> {
    let w = g.position_width();
    let window = (g.q - 14.0 * w, g.q + 14.0 * w);
    let oracle = KernelOracle::new(coeffs, g.h, |y| gaussian_eval(g, y), window, w, x.abs())?;
    oracle.eval(x)
}

/// `|i hbar d_t u - H^ u|` for the explicit solution with initial datum
/// `exp(2 i pi x xi / h)`, using closed-form derivatives of the action.
pub fn schrodinger_residual(ham: &QuadraticHamiltonian, t: f64, x: f64, xi: f64, h: f64) -> f64 {
    schrodinger_residual_with_sign(ham, t, x, xi, h, KERNEL_XI_SIGN)
}

/// Same residual with an explicit sign for the `b xi^2` term of the action.
pub fn schrodinger_residual_with_sign(
    ham: &QuadraticHamiltonian,
    t: f64,
    x: f64,
    xi: f64,
    h: f64,
    sign: f64,
) -> f64 {
    let hbar = h / (2.0 * PI);
    let f = flow_coefficients(ham, t);
    let [da, db, dc, _] = flow_derivative(ham, &f);
    let num = f.c * x * x + 2.0 * x * xi + sign * f.b * xi * xi;
    let dnum = dc * x * x + sign * db * xi * xi;
    let s = num / (2.0 * f.a);
    let s_t = dnum / (2.0 * f.a) - num * da / (2.0 * f.a * f.a);
    let s_x = (f.c * x + xi) / f.a;
    let s_xx = f.c / f.a;

    let u = Complex64::new(f.a, 0.0).powf(-0.5) * (I * s / hbar).exp();
    let u_t = u * (-da / (2.0 * f.a) + I * s_t / hbar);
    let u_x = u * (I * s_x / hbar);
    let u_xx = u * (I * s_xx / hbar - s_x * s_x / (hbar * hbar));
    let h_u = 0.5 * ham.alpha * x * x * u - I * hbar * ham.gamma * (x * u_x + 0.5 * u)
        - 0.5 * hbar * hbar * ham.beta * u_xx;
    (I * hbar * u_t - h_u).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packet_amplitude_and_norm() {
        let g = wavepacket(0.0, 0.0, 1.0).unwrap();
        assert!((g.amplitude.re - 2f64.powf(0.25)).abs() < 1e-15);
        assert!(g.is_normalized());
        assert_eq!(wavepacket(0.0, 0.0, 0.0), Err(CatError::NonPositiveH(0.0)));
    }

    #[test]
    fn overlap_of_distant_packets() {
        let h = 0.25;
        let a = wavepacket(0.0, 0.0, h).unwrap();
        let b = wavepacket(0.5, 0.0, h).unwrap();
        let v = gaussian_overlap(&a, &b).unwrap();
        assert!((v.norm() - (-PI / 2.0).exp()).abs() < 1e-14);
    }
}
