//! Damped Lagrangian states on the unstable line and their wave-packet
//! decompositions.
//!
//! `L(x) = phase C exp(i pi tan x^2 / h) exp(-pi beta x^2 / (h lambda^2n))`,
//! with `C` the unit-norm constant. Translated states are kept in the form
//! `C exp(2 i pi (tan x^2 / 2 + s' x) / h) exp(-pi beta (x - a')^2 / (h lambda^2n))`.

use crate::classical::{spectral_data, Sl2IntMatrix, SpectralData};
use crate::dd::{cis_pi, Dd};
use crate::error::{CatError, Result};
use crate::metaplectic::{propagate_power, wavepacket, GaussianState};
use crate::torus::{circle_distance, for_each_lattice_term, DEFAULT_TERM_CAP};
use num_complex::Complex64;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Damping constant matching the second-order expansion of the propagated
/// packet: `1 / cos^2 theta`.
pub fn derived_beta(theta: f64) -> Complex64 {
    Complex64::new(1.0 / theta.cos().powi(2), 0.0)
}

/// `(1 + 2 i tan theta) / cos^2 theta`; the imaginary part leaves an
/// `O(lambda^-2n)` error in the exponent.
pub fn stated_beta(theta: f64) -> Complex64 {
    Complex64::new(1.0, 2.0 * theta.tan()) / theta.cos().powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedLagrangianState {
    pub n: u32,
    pub h: f64,
    pub theta: f64,
    pub lambda: f64,
    pub beta: Complex64,
    pub a_prime: f64,
    pub b_prime: f64,
    pub norm_constant: f64,
    /// Unit-modulus factor equal to the phase of the propagated packet at 0.
    pub phase: Complex64,
}

impl DampedLagrangianState {
    pub fn new(spec: &SpectralData, n: u32, h: f64) -> Result<Self> {
        Self::with_beta(spec, n, h, derived_beta(spec.theta))
    }

    pub fn with_beta(spec: &SpectralData, n: u32, h: f64, beta: Complex64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(CatError::NonPositiveH(h));
        }
        if !(beta.re > 0.0) {
            return Err(CatError::NotNormalizable(beta.re));
        }
        let eps = spec.lambda.powi(-2 * n as i32);
        let norm_constant = (2.0 * beta.re * eps / h).powf(0.25);
        let (a_n, b_n) = spec.power_coefficients(n as i32);
        let root = Complex64::new(a_n, b_n).powf(-0.5);
        Ok(DampedLagrangianState {
            n,
            h,
            theta: spec.theta,
            lambda: spec.lambda,
            beta,
            a_prime: 0.0,
            b_prime: 0.0,
            norm_constant,
            phase: root / root.norm(),
        })
    }

    pub fn translated(&self, a_prime: f64, b_prime: f64) -> Self {
        DampedLagrangianState { a_prime, b_prime, ..*self }
    }

    pub fn tan(&self) -> f64 {
        self.theta.tan()
    }

    /// `lambda^-2n`.
    pub fn eps(&self) -> f64 {
        self.lambda.powi(-2 * self.n as i32)
    }

    /// `s' = b' - tan a'`.
    pub fn s_prime(&self) -> f64 {
        self.b_prime - self.tan() * self.a_prime
    }

    pub fn shape(&self) -> Complex64 {
        self.tan() + I * self.beta * self.eps()
    }

    pub fn as_gaussian(&self) -> GaussianState {
        let (a, b, t) = (self.a_prime, self.b_prime, self.tan());
        let arg = (Dd::prod(2.0 * a, b) - Dd::prod(t * a, a)).div_f64(self.h);
        GaussianState {
            amplitude: self.phase * self.norm_constant * cis_pi(arg),
            theta: self.shape(),
            q: a,
            p: b,
            h: self.h,
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        lagrangian_eval(self, x)
    }
}

pub fn lagrangian_eval(l: &DampedLagrangianState, x: f64) -> Complex64 {
    l.as_gaussian().eval(x)
}

/// The three parts of the exponent `A(q, p)` of a Lagrangian-to-packet overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapExponent {
    pub a1: Complex64,
    pub a2: Complex64,
    pub a3: Complex64,
}

impl OverlapExponent {
    pub fn total(&self) -> Complex64 {
        self.a1 + self.a2 + self.a3
    }
}

/// `A = (P - s' + i beta eps a')^2 / Lambda + q^2 - 2 i p q + beta eps a'^2`
/// with `P = p + i q` and `Lambda = 1 - i tan + beta eps`, split as
/// `A1 = P^2 K + q^2 - 2 i p q`, `A2 = (s'^2 - 2 P s') K` and the remainder,
/// where `K = (1 - i tan)^-1 = cos^2 + i sin cos`.
pub fn overlap_exponent(l: &DampedLagrangianState, q: f64, p: f64) -> OverlapExponent {
    let t = l.tan();
    let be = l.beta * l.eps();
    let k = 1.0 / Complex64::new(1.0, -t);
    // Lambda^-1 - K without cancellation.
    let alpha = -be / (Complex64::new(1.0, -t) * Complex64::new(1.0, -t) + be * Complex64::new(1.0, -t));
    let big_p = Complex64::new(p, q);
    let sp = l.s_prime();
    let ap = l.a_prime;
    let a1 = big_p * big_p * k + q * q - 2.0 * I * p * q;
    let a2 = (sp * sp - 2.0 * big_p * sp) * k;
    let u = big_p - sp;
    let a3 = u * u * alpha + (2.0 * I * u * be * ap - be * be * ap * ap) * (k + alpha) + be * ap * ap;
    OverlapExponent { a1, a2, a3 }
}

/// `<L_(a',b'), Phi_(q,p)> = phase C C_h sqrt(h) Lambda^(-1/2) exp(-pi A / h)`.
pub fn overlap_lagrangian_wavepacket(l: &DampedLagrangianState, q: f64, p: f64) -> Complex64 {
    let h = l.h;
    let lam = Complex64::new(1.0, -l.tan()) + l.beta * l.eps();
    let c_h = (2.0 / h).powf(0.25);
    let a = overlap_exponent(l, q, p).total();
    l.phase * l.norm_constant * c_h * h.sqrt() * lam.powf(-0.5) * (-PI / h * a).exp()
}

/// Same overlap, checking that the packet lives at the same `h`.
pub fn overlap_with_packet(l: &DampedLagrangianState, packet: &GaussianState) -> Result<Complex64> {
    if (packet.h - l.h).abs() > 1e-14 * l.h {
        return Err(CatError::MismatchedH(l.h, packet.h));
    }
    Ok(overlap_lagrangian_wavepacket(l, packet.q, packet.p))
}

/// Unique integer `p(m)` with `(q0 + m) tan + s' - p0 - p(m)` in `]-1/2, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandIndexer {
    pub theta: f64,
    pub q0: f64,
    pub p0: f64,
    /// `p0 - q0 tan`.
    pub s0: f64,
    pub s_prime: f64,
}

pub fn band_indexer(theta: f64, q0: f64, p0: f64, a_prime: f64, b_prime: f64) -> BandIndexer {
    let t = theta.tan();
    BandIndexer { theta, q0, p0, s0: p0 - q0 * t, s_prime: b_prime - t * a_prime }
}

impl BandIndexer {
    fn offset(&self, m: i64) -> f64 {
        (self.q0 + m as f64) * self.theta.tan() + self.s_prime - self.p0
    }

    pub fn p(&self, m: i64) -> i64 {
        (self.offset(m) - 0.5).ceil() as i64
    }

    /// Signed distance of `(q0 + m, p0 + p(m))` to the line, along `p`.
    pub fn d(&self, m: i64) -> f64 {
        self.offset(m) - self.p(m) as f64
    }

    /// `d_S1(s' + m tan, s0)`.
    pub fn circle_d(&self, m: i64) -> f64 {
        circle_distance(self.s_prime + m as f64 * self.theta.tan(), self.s0)
    }
}

/// In-band and off-band parts of the wave-packet decomposition of `x` over
/// the lift `(q0, p0) + Z^2`, without translation phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSplit {
    pub in_band: Complex64,
    pub off_band: Complex64,
    pub certified_tail: f64,
}

pub fn band_split(x: &GaussianState, q0: f64, p0: f64, idx: &BandIndexer) -> Result<BandSplit> {
    let n_dim = crate::torus::dimension_from_h(x.h)? as f64;
    let packet = wavepacket(q0, p0, x.h)?;
    let mut in_band = Complex64::new(0.0, 0.0);
    let mut off_band = Complex64::new(0.0, 0.0);
    // <x, T_(m,j) Phi_(q0,p0)> = exp(-2 i pi j q0 N) <x, Phi_(q0+m, p0+j)>.
    let tr = for_each_lattice_term(x, &packet, DEFAULT_TERM_CAP, |m, j, v| {
        let term = v * cis_pi(Dd::prod(2.0 * j as f64 * n_dim, q0));
        if j == idx.p(m) {
            in_band += term;
        } else {
            off_band += term;
        }
    })?;
    Ok(BandSplit { in_band, off_band, certified_tail: tr.certified_tail })
}

/// Modulus of the off-band part of the decomposition of `x`.
pub fn off_band_tail(x: &GaussianState, q0: f64, p0: f64, theta: f64) -> Result<f64> {
    let idx = band_indexer(theta, q0, p0, 0.0, 0.0);
    Ok(band_split(x, q0, p0, &idx)?.off_band.norm())
}

/// `(1/3) |log h| / log lambda`.
pub fn band_threshold(h: f64, lambda: f64) -> f64 {
    h.ln().abs() / (3.0 * lambda.ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSums {
    /// Band sum of the propagated packet.
    pub propagated: Complex64,
    /// Band sum of the Lagrangian state.
    pub lagrangian: Complex64,
    pub off_band_propagated: f64,
    pub off_band_lagrangian: f64,
}

impl BandSums {
    pub fn difference(&self) -> f64 {
        (self.propagated - self.lagrangian).norm()
    }
}

/// Band sums of `M^n f_h` and `L^h(n)` over `(q0, p0) + Z^2`, without the
/// validity threshold.
pub fn band_sums(m: &Sl2IntMatrix, n: u32, h: f64, q0: f64, p0: f64) -> Result<BandSums> {
    let spec = spectral_data(m)?;
    let moved = propagate_power(m, n, &wavepacket(0.0, 0.0, h)?)?;
    let lag = DampedLagrangianState::new(&spec, n, h)?.as_gaussian();
    let idx = band_indexer(spec.theta, q0, p0, 0.0, 0.0);
    let a = band_split(&moved, q0, p0, &idx)?;
    let b = band_split(&lag, q0, p0, &idx)?;
    Ok(BandSums {
        propagated: a.in_band,
        lagrangian: b.in_band,
        off_band_propagated: a.off_band.norm(),
        off_band_lagrangian: b.off_band.norm(),
    })
}

/// `|L_(n,h) - M_(n,h)|`, refused below the validity threshold.
pub fn band_difference(m: &Sl2IntMatrix, n: u32, h: f64, q0: f64, p0: f64) -> Result<f64> {
    let spec = spectral_data(m)?;
    let threshold = band_threshold(h, spec.lambda);
    if (n as f64) < threshold {
        return Err(CatError::ThresholdViolation { n, threshold });
    }
    Ok(band_sums(m, n, h, q0, p0)?.difference())
}

/// Outcome of comparing the propagated packet with its damped Lagrangian
/// approximation on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxReport {
    pub n: u32,
    pub h: f64,
    /// Smallest `R` making the inequality hold at every grid point where it can.
    pub r_n: f64,
    /// Grid points where no `R >= 0` works.
    pub violations: usize,
    /// Largest `|1 - exp(-i pi kappa x^2 / h)|` on the grid.
    pub max_ratio: f64,
}

/// `exp(z) - 1` without cancellation for small `|z|`.
fn expm1_complex(z: Complex64) -> Complex64 {
    if z.norm() > 0.5 {
        return z.exp() - 1.0;
    }
    // exp(a + ib) - 1 = expm1(a) cos b - 2 sin^2(b/2) + i exp(a) sin b
    let (a, b) = (z.re, z.im);
    let s = (0.5 * b).sin();
    Complex64::new(a.exp_m1() * b.cos() - 2.0 * s * s, a.exp() * b.sin())
}

/// Pointwise check of `|M^n f(x) - chi(x / (sqrt h lambda^n)) exp(i pi tan x^2 / h)|
/// <= |M^n f(x) (1 - exp(-x^2 R / h))|` with `chi(u) = M^n f(0) exp(-pi beta u^2)`.
pub fn check_pointwise_approx(
    m: &Sl2IntMatrix,
    n: u32,
    h: f64,
    grid: &[f64],
    beta: Complex64,
) -> Result<ApproxReport> {
    let spec = spectral_data(m)?;
    let moved = propagate_power(m, n, &wavepacket(0.0, 0.0, h)?)?;
    let t = spec.tan();
    let eps = spec.lambda.powi(-2 * n as i32);
    let kappa = if m.b() == m.c() {
        // Orthogonal eigenlines: Theta_n - tan = i eps / (C (C - i S eps)).
        let (s, c) = spec.theta.sin_cos();
        let lead = Complex64::new(c, 0.0) - I * s * eps;
        if (beta - derived_beta(spec.theta)).norm() == 0.0 {
            -s * eps * eps / (c * c * lead)
        } else {
            I * eps / (c * lead) - I * beta * eps
        }
    } else {
        moved.theta - t - I * beta * eps
    };
    let mut r_n: f64 = 0.0;
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for &x in grid {
        if x == 0.0 {
            continue;
        }
        let r = expm1_complex(-I * PI * kappa * x * x / h).norm();
        max_ratio = max_ratio.max(r);
        if r >= 1.0 {
            violations += 1;
            continue;
        }
        let needed = -(h / (x * x)) * (-r).ln_1p();
        r_n = r_n.max(needed);
    }
    Ok(ApproxReport { n, h, r_n, violations, max_ratio })
}

/// Least-squares slope of `ln R_n` against `n`.
pub fn log_slope(points: &[(u32, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0 as f64).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let num: f64 = points.iter().map(|p| (p.0 as f64 - mx) * (p.1.ln() - my)).sum();
    let den: f64 = points.iter().map(|p| (p.0 as f64 - mx).powi(2)).sum();
    num / den
}
