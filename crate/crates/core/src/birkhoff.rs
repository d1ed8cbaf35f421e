//! The parabolic skew product `T(x, y) = (x + alpha, y + N x + beta)` on the
//! torus, its damped Birkhoff sums, and the Birkhoff-sum prediction for
//! post-Ehrenfest matrix elements of the quantized cat map.

use crate::classical::{ehrenfest_time, spectral_data, Sl2IntMatrix, TorusPoint};
use crate::dd::{cis_pi, Dd};
use crate::error::{CatError, Result};
use crate::lagrangian::derived_beta;
use crate::torus::{circle_distance, lift_split, lifted_source, matrix_element_exact};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// `beta = alpha N / 2`, so that `T^m(x, y) = (x + m alpha, y + m^2 N alpha / 2 + m N x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewMap {
    pub alpha: f64,
    pub n_dim: i64,
    pub beta: f64,
}

impl SkewMap {
    pub fn new(alpha: f64, n_dim: i64) -> Self {
        SkewMap { alpha, n_dim, beta: alpha * n_dim as f64 / 2.0 }
    }
}

fn wrap(x: Dd, y: Dd) -> (f64, f64) {
    (x.frac().to_f64(), y.frac().to_f64())
}

pub fn skew_apply(t: &SkewMap, pt: (f64, f64)) -> (f64, f64) {
    let x = Dd::sum(pt.0, t.alpha);
    let y = Dd::sum(pt.1, t.beta) + Dd::prod(t.n_dim as f64, pt.0);
    wrap(x, y)
}

/// Closed-form `T^m`, exact in double-double while `m^2 N / 2 < 2^53`.
pub fn skew_iterate(t: &SkewMap, pt: (f64, f64), m: i64) -> (f64, f64) {
    let mf = m as f64;
    let x = Dd::new(pt.0) + Dd::prod(mf, t.alpha);
    let half_sq = (m as i128 * m as i128 * t.n_dim as i128) as f64 / 2.0;
    let y = Dd::new(pt.1) + Dd::prod(half_sq, t.alpha) + Dd::prod(mf * t.n_dim as f64, pt.0);
    wrap(x, y)
}

/// `exp(2 i pi y_m)` for the orbit of `(x0, 0)`, without reducing `y_m`.
pub fn orbit_phase(t: &SkewMap, x0: f64, m: i64) -> Complex64 {
    let mf = m as f64;
    let half_sq = (m as i128 * m as i128 * t.n_dim as i128) as f64 / 2.0;
    let y = Dd::prod(half_sq, t.alpha) + Dd::prod(mf * t.n_dim as f64, x0);
    cis_pi(y.mul_f64(2.0))
}

/// Window `chi` of a damped Birkhoff sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Damping {
    /// `chi(u) = exp(-gamma0 u^2 / h)`.
    Gaussian { gamma0: Complex64, h: f64 },
    /// Indicator of `[0, 1]`.
    Indicator,
}

impl Damping {
    pub fn eval(&self, u: f64) -> Complex64 {
        match *self {
            Damping::Gaussian { gamma0, h } => (-gamma0 * u * u / h).exp(),
            Damping::Indicator => {
                if (0.0..=1.0).contains(&u) {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
        }
    }

    /// Index range outside of which `|chi(k / m)| < 1e-14`.
    pub fn support(&self, m: f64) -> (i64, i64) {
        match *self {
            Damping::Gaussian { gamma0, h } => {
                let u = (h * (1e14f64).ln() / gamma0.re).sqrt();
                let k = (u * m).ceil() as i64 + 1;
                (-k, k)
            }
            Damping::Indicator => (0, m.floor() as i64),
        }
    }
}

/// The observable `f(x, y) = F0(d / sqrt h) exp(2 i pi q0 d / h) exp(2 i pi y)`
/// with `d = d_S1(x, s0)` and `F0(u) = exp(-pi cos^2 (1 + i tan) u^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceObservable {
    pub q0: f64,
    pub p0: f64,
    /// `p0 - q0 tan`.
    pub s0: f64,
    pub h: f64,
    pub tan: f64,
    /// Damping exponent scale, `pi beta`.
    pub gamma0: Complex64,
}

impl InterferenceObservable {
    pub fn new(theta: f64, q0: f64, p0: f64, h: f64) -> Self {
        let tan = theta.tan();
        InterferenceObservable {
            q0,
            p0,
            s0: p0 - q0 * tan,
            h,
            tan,
            gamma0: PI * derived_beta(theta),
        }
    }

    pub fn profile(&self, u: f64) -> Complex64 {
        let c2 = 1.0 / (1.0 + self.tan * self.tan);
        (-PI * c2 * Complex64::new(1.0, self.tan) * u * u).exp()
    }

    /// Part of `f` that depends on `x` only.
    pub fn x_part(&self, x: f64) -> Complex64 {
        let d = circle_distance(x, self.s0);
        self.profile(d / self.h.sqrt()) * cis_pi(Dd::prod(2.0 * self.q0, d).div_f64(self.h))
    }

    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        self.x_part(x) * cis_pi(Dd::new(y).mul_f64(2.0))
    }

    pub fn damping(&self) -> Damping {
        Damping::Gaussian { gamma0: self.gamma0, h: self.h }
    }
}

/// `S_m(f)(pt) = sum_k chi(k / m) f(T^k pt)`, summed in increasing `k`.
pub fn damped_birkhoff_sum<F>(t: &SkewMap, f: F, chi: &Damping, pt: (f64, f64), m: f64) -> Complex64
where
    F: Fn(f64, f64) -> Complex64,
{
    let (lo, hi) = chi.support(m);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in lo..=hi {
        let w = chi.eval(k as f64 / m);
        if w == Complex64::new(0.0, 0.0) {
            continue;
        }
        let (x, y) = skew_iterate(t, pt, k);
        acc += w * f(x, y);
    }
    acc
}

/// Same sum for the interference observable started at `(x0, 0)`, with the
/// `y`-phase taken from the unreduced orbit and the window `chi((k - mu) / m)`.
pub fn observable_birkhoff_sum(t: &SkewMap, f: &InterferenceObservable, x0: f64, m: f64, mu: f64) -> Complex64 {
    let chi = f.damping();
    let (lo, hi) = chi.support(m);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in lo - 1..=hi + 1 {
        let x = x0 + k as f64 * t.alpha;
        acc += chi.eval((k as f64 - mu) / m) * f.x_part(x) * orbit_phase(t, x0, k);
    }
    acc
}

/// Where the damping window of the prediction is centred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowCenter {
    /// `chi(k / lambda^n)`.
    Origin,
    /// `chi((k - mu) / lambda^n)` with `mu = w1 - q0`, the offset between the
    /// Lagrangian centre and the target packet.
    #[default]
    Lift,
}

/// `ceil((1/3) |log h| / log lambda)`.
pub fn theorem_threshold(h: f64, lambda: f64) -> u32 {
    (h.ln().abs() / (3.0 * lambda.ln())).ceil() as u32
}

/// Prediction `P lambda^(-n/2) S_(lambda^n)(f_(q0,p0))(s', 0)` before the
/// uniform constant `D`. `P` collects the unit-modulus lift phases of the
/// source and target points.
pub fn theorem_rhs_unscaled(
    m: &Sl2IntMatrix,
    n: u32,
    h: f64,
    src: TorusPoint,
    dst: TorusPoint,
    center: WindowCenter,
) -> Result<Complex64> {
    let spec = spectral_data(m)?;
    let n_dim = crate::torus::dimension_from_h(h)?;
    let threshold = theorem_threshold(h, spec.lambda);
    if n < threshold {
        return Err(CatError::ThresholdViolation { n, threshold: threshold as f64 });
    }
    let tan = spec.tan();
    let nf = n_dim as f64;
    let (source_phase, _) = lifted_source(m, n, src, n_dim)?;
    let (_, (w1, w2)) = lift_split(m, n, src)?;
    let (q0, p0) = (dst.q(), dst.p());
    // exp(i pi N (tan w1^2 - w1 w2)) exp(i pi N (2 q0 p0 - tan q0^2))
    let lift = (w1 * w1).mul_f64(tan) - w1 * w2 + Dd::prod(2.0 * q0, p0) - Dd::prod(tan * q0, q0);
    let phase = source_phase * cis_pi(lift.mul_f64(nf));

    let s_prime = (w2 - w1.mul_f64(tan)).to_f64();
    let obs = InterferenceObservable::new(spec.theta, q0, p0, h);
    let t = SkewMap::new(tan, n_dim as i64);
    let big_m = spec.lambda.powi(n as i32);
    let mu = match center {
        WindowCenter::Origin => 0.0,
        WindowCenter::Lift => w1.to_f64() - q0,
    };
    let sum = observable_birkhoff_sum(&t, &obs, s_prime, big_m, mu);
    Ok(phase * sum / big_m.sqrt())
}

/// `D` times the unscaled prediction.
pub fn theorem_rhs(
    m: &Sl2IntMatrix,
    n: u32,
    h: f64,
    src: TorusPoint,
    dst: TorusPoint,
    center: WindowCenter,
    d: Complex64,
) -> Result<Complex64> {
    Ok(d * theorem_rhs_unscaled(m, n, h, src, dst, center)?)
}

/// Complex least-squares `D` minimizing `sum |lhs - D rhs|^2`.
pub fn fit_uniform_constant(pairs: &[(Complex64, Complex64)]) -> Complex64 {
    let num: Complex64 = pairs.iter().map(|(l, r)| r.conj() * l).sum();
    let den: f64 = pairs.iter().map(|(_, r)| r.norm_sqr()).sum();
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremRow {
    pub n_dim: usize,
    pub n: u32,
    pub n_over_te: f64,
    pub src: TorusPoint,
    pub dst: TorusPoint,
    pub lhs: Complex64,
    /// `None` below the validity threshold.
    pub rhs: Option<Complex64>,
    pub residual: f64,
    /// `sqrt(h) lambda^(-n/2)`.
    pub bound: f64,
    pub ratio: f64,
}

impl TheoremRow {
    pub fn flagged(&self) -> bool {
        self.rhs.is_none()
    }
}

/// One row per `(N, n, pair)` cell, in input order.
pub fn theorem_error_table(
    m: &Sl2IntMatrix,
    cells: &[(usize, u32)],
    pairs: &[(TorusPoint, TorusPoint)],
    center: WindowCenter,
    d: Complex64,
) -> Result<Vec<TheoremRow>> {
    let spec = spectral_data(m)?;
    let jobs: Vec<(usize, u32, TorusPoint, TorusPoint)> = cells
        .iter()
        .flat_map(|&(nd, n)| pairs.iter().map(move |&(s, t)| (nd, n, s, t)))
        .collect();
    jobs.par_iter()
        .map(|&(n_dim, n, src, dst)| {
            let h = 1.0 / n_dim as f64;
            let lhs = matrix_element_exact(m, n, src, dst, n_dim)?;
            let rhs = match theorem_rhs(m, n, h, src, dst, center, d) {
                Ok(v) => Some(v),
                Err(CatError::ThresholdViolation { .. }) => None,
                Err(e) => return Err(e),
            };
            let bound = h.sqrt() * spec.lambda.powf(-(n as f64) / 2.0);
            let residual = rhs.map_or(f64::NAN, |r| (lhs - r).norm());
            Ok(TheoremRow {
                n_dim,
                n,
                n_over_te: n as f64 / ehrenfest_time(h, spec.lambda),
                src,
                dst,
                lhs,
                rhs,
                residual,
                bound,
                ratio: residual / bound,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_steps_from_origin() {
        let a = 0.3819;
        let t = SkewMap::new(a, 4);
        let (x, y) = skew_iterate(&t, (0.0, 0.0), 2);
        assert!((x - (2.0 * a).fract()).abs() < 1e-15);
        assert!((y - (8.0 * a).fract()).abs() < 1e-14);
        let (x1, y1) = skew_apply(&t, skew_apply(&t, (0.0, 0.0)));
        assert!((x1 - x).abs() < 1e-14 && (y1 - y).abs() < 1e-13);
    }
}
