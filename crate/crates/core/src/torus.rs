//! The quantized torus `H^N` at `h = 1/N`, `N` even.
//!
//! States are stored as their `N` Fourier coefficients
//! `d_n = (Sigma g)(x -> exp(2 i pi n x))`, for which the Hermitian structure
//! is the plain sum `sum_n d1_n conj(d2_n)`. Gaussian states on the line enter
//! through symmetrization; every infinite sum carries a certified tail bound.

use crate::classical::{Sl2IntMatrix, TorusPoint};
use crate::dd::{cis_pi, Dd};
use crate::error::{CatError, Result};
use crate::metaplectic::{
    gaussian_eval, gaussian_overlap, propagate_gaussian, propagate_power, translate, wavepacket,
    GaussianState, PlaneTranslation,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Hard cap on the number of lattice terms in one sum.
pub const DEFAULT_TERM_CAP: u64 = 200_000_000;

/// Relative size of the discarded tail of a lattice sum.
pub const TAIL_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeTruncation {
    /// Largest `|k1|` or `|k2|` offset from the sum's center that was kept.
    pub radius: u64,
    pub terms: u64,
    /// Upper bound on the modulus of the discarded terms.
    pub certified_tail: f64,
}

/// `N` with `h = 1/N`, checked to be an even integer.
pub fn dimension_from_h(h: f64) -> Result<usize> {
    if !(h > 0.0) {
        return Err(CatError::NonPositiveH(h));
    }
    let n = (1.0 / h).round();
    if (n * h - 1.0).abs() > 1e-12 {
        return Err(CatError::MismatchedH(h, 1.0 / n));
    }
    let n = n as i64;
    if n % 2 != 0 {
        return Err(CatError::OddN(n));
    }
    Ok(n as usize)
}

pub fn check_even(n: usize) -> Result<()> {
    if n == 0 || n % 2 != 0 {
        return Err(CatError::OddN(n as i64));
    }
    Ok(())
}

/// `sum_{|v - c| > r} exp(-a (v - c)^2)` over integers `v` is below
/// `2 exp(-a r^2) (1 + sqrt(pi / a) / 2)`.
fn row_tail(a: f64, r: f64) -> f64 {
    2.0 * (-a * r * r).exp() * (1.0 + 0.5 * (PI / a).sqrt())
}

/// `sum_v exp(-a (v - c)^2) <= 1 + sqrt(pi / a)` for any real `c`.
fn row_total(a: f64) -> f64 {
    1.0 + (PI / a).sqrt()
}

/// Modulus `|<x, T_k y>| = scale * exp(-(pi/h) Q(delta, v))` with
/// `delta = q_y + k1 - q_x` and `v = p_x - p_y - k2`.
struct OverlapForm {
    scale: f64,
    s11: f64,
    s12: f64,
    s22: f64,
}

fn overlap_form(x: &GaussianState, y: &GaussianState) -> OverlapForm {
    let i = Complex64::new(0.0, 1.0);
    let t1 = x.theta;
    let t2c = y.theta.conj();
    let a = -i * (t1 - t2c);
    let inv = 1.0 / a;
    OverlapForm {
        scale: x.amplitude.norm() * y.amplitude.norm() * (x.h * inv.norm()).sqrt(),
        s11: (t1 * t2c * inv).re,
        s12: (t1 * inv).re,
        s22: inv.re,
    }
}

/// Calls `f(k1, k2, <x, T_(k1,k2) y>)` for every integer vector in an ellipse
/// large enough that the omitted terms sum to less than `TAIL_TOLERANCE`
/// times `||x|| ||y||`. Order: `k1` ascending, then `k2` ascending.
pub fn for_each_lattice_term<F>(
    x: &GaussianState,
    y: &GaussianState,
    cap: u64,
    mut f: F,
) -> Result<LatticeTruncation>
where
    F: FnMut(i64, i64, Complex64),
{
    let h = x.h;
    if (h - y.h).abs() > 1e-14 * h {
        return Err(CatError::MismatchedH(h, y.h));
    }
    let form = overlap_form(x, y);
    let det = form.s11 * form.s22 - form.s12 * form.s12;
    let s1 = det / form.s22;
    let target = TAIL_TOLERANCE * (x.norm_sq() * y.norm_sq()).sqrt();

    // Q = s22 (v + s12/s22 delta)^2 + s1 delta^2; scan r^2 in units of h.
    let a_row = PI * form.s22 / h;
    let a_col = PI * s1 / h;
    let tail_at = |r: f64| {
        let e = (-PI * r * r / h).exp();
        form.scale
            * e
            * ((2.0 * r * (1.0 / s1).sqrt() + 1.0) * 2.0 * (1.0 + 0.5 * (PI / a_row).sqrt())
                + 2.0 * (1.0 + 0.5 * (PI / a_col).sqrt()) * row_total(a_row))
    };
    let mut r = 0.0;
    let dr = 0.05 * h.sqrt();
    while tail_at(r) > target {
        r += dr;
    }
    let certified_tail = tail_at(r);

    let delta0 = y.q - x.q;
    let v0 = x.p - y.p;
    let half_rows = r / s1.sqrt();
    let k1_lo = (-delta0 - half_rows).ceil() as i64;
    let k1_hi = (-delta0 + half_rows).floor() as i64;
    let approx_terms = (PI * r * r / det.sqrt()) + (k1_hi - k1_lo + 1).max(0) as f64 * 2.0;
    if approx_terms > cap as f64 {
        return Err(CatError::TruncationOverflow { needed: approx_terms as u64, cap });
    }

    let mut terms = 0u64;
    let mut radius = 0u64;
    for k1 in k1_lo..=k1_hi {
        let delta = delta0 + k1 as f64;
        let rem = r * r - s1 * delta * delta;
        if rem < 0.0 {
            continue;
        }
        // v = v0 - k2 within half-width of c.
        let c = -form.s12 / form.s22 * delta;
        let w = (rem / form.s22).sqrt();
        let k2_lo = (v0 - c - w).ceil() as i64;
        let k2_hi = (v0 - c + w).floor() as i64;
        for k2 in k2_lo..=k2_hi {
            let ty = translate(y, PlaneTranslation::new(k1 as f64, k2 as f64));
            f(k1, k2, gaussian_overlap(x, &ty)?);
            terms += 1;
            radius = radius.max(k1.unsigned_abs()).max(k2.unsigned_abs());
        }
    }
    Ok(LatticeTruncation { radius, terms, certified_tail })
}

/// `<Sigma g, Sigma test>_{H^N} = sum_k <T_k g, test>`.
pub fn pair_symmetrized(g: &GaussianState, test: &GaussianState) -> Result<Complex64> {
    pair_symmetrized_with_truncation(g, test, DEFAULT_TERM_CAP).map(|(v, _)| v)
}

pub fn pair_symmetrized_with_truncation(
    g: &GaussianState,
    test: &GaussianState,
    cap: u64,
) -> Result<(Complex64, LatticeTruncation)> {
    dimension_from_h(g.h)?;
    let mut acc = Complex64::new(0.0, 0.0);
    // sum_k <T_k g, test> = sum_k <g, T_k test> for N even.
    let tr = for_each_lattice_term(g, test, cap, |_, _, v| acc += v)?;
    Ok((acc, tr))
}

/// Element of `H^N` by its Fourier coefficients `d_0 .. d_{N-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusState {
    pub coeffs: DVector<Complex64>,
}

impl TorusState {
    pub fn new(coeffs: DVector<Complex64>) -> Result<Self> {
        check_even(coeffs.len())?;
        Ok(TorusState { coeffs })
    }

    pub fn dimension(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient `d_n` for any integer `n`, read periodically.
    pub fn coeff(&self, n: i64) -> Complex64 {
        self.coeffs[n.rem_euclid(self.dimension() as i64) as usize]
    }

    pub fn inner(&self, other: &TorusState) -> Complex64 {
        self.coeffs.iter().zip(other.coeffs.iter()).map(|(a, b)| a * b.conj()).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn scaled(&self, z: Complex64) -> Self {
        TorusState { coeffs: self.coeffs.map(|c| c * z) }
    }

    pub fn apply(&self, u: &DMatrix<Complex64>) -> Self {
        TorusState { coeffs: u * &self.coeffs }
    }
}

/// Moves the center of `g` into `[0, 1)^2` by an integer translation, which
/// leaves `Sigma g` unchanged for even `N`.
fn reduce_center(g: &GaussianState) -> GaussianState {
    let v = PlaneTranslation::new(-g.q.floor(), -g.p.floor());
    translate(g, v)
}

/// Coefficients of `Sigma g`:
/// `d_n = sum_m G(n - m N)` with `G(k) = int g(x) exp(2 i pi k x) dx`.
pub fn torus_coefficients(g: &GaussianState) -> Result<TorusState> {
    let n_dim = dimension_from_h(g.h)?;
    let g = reduce_center(g);
    let h = g.h;
    let i = Complex64::new(0.0, 1.0);
    // G(k) = A exp(2 i pi k q) sqrt(h / (-i Theta)) gamma(p + k h),
    // gamma(u) = exp(i pi w u^2 / h), w = -1 / Theta.
    let w = -1.0 / g.theta;
    let pref = g.amplitude * (h / (-i * g.theta)).sqrt();
    let gamma = GaussianState { amplitude: Complex64::new(1.0, 0.0), theta: w, q: 0.0, p: 0.0, h };
    // In m the terms decay as exp(-a (m - p - n h)^2).
    let a = PI * w.im / h;
    let mut r = 1.0;
    while row_tail(a, r) > 1e-16 {
        r *= 1.25;
    }
    let per_n = (2.0 * r + 2.0) as u64;
    if per_n.saturating_mul(n_dim as u64) > DEFAULT_TERM_CAP {
        return Err(CatError::TruncationOverflow {
            needed: per_n.saturating_mul(n_dim as u64),
            cap: DEFAULT_TERM_CAP,
        });
    }
    let coeffs: Vec<Complex64> = (0..n_dim as i64)
        .into_par_iter()
        .map(|n| {
            let c = g.p + n as f64 * h;
            let lo = (c - r).floor() as i64;
            let hi = (c + r).ceil() as i64;
            let mut acc = Complex64::new(0.0, 0.0);
            for m in lo..=hi {
                let k = n - m * n_dim as i64;
                let u = Dd::sum(g.p, k as f64 * h).to_f64();
                acc += cis_pi(Dd::prod(2.0 * k as f64, g.q)) * gaussian_eval(&gamma, u);
            }
            acc * pref
        })
        .collect();
    TorusState::new(DVector::from_vec(coeffs))
}

/// Narrow Gaussian `exp(-pi N^2 (x - j/N)^2)`; its symmetrization is close to
/// the Dirac comb element of index `j`.
pub fn comb_basis_state(j: usize, n_dim: usize) -> GaussianState {
    let nf = n_dim as f64;
    GaussianState {
        amplitude: Complex64::new(1.0, 0.0),
        theta: Complex64::new(0.0, nf),
        q: j as f64 / nf,
        p: 0.0,
        h: 1.0 / nf,
    }
}

fn columns(states: &[GaussianState]) -> Result<DMatrix<Complex64>> {
    let n = states[0].h.recip().round() as usize;
    let cols = states.par_iter().map(torus_coefficients).collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(n, cols.len(), |r, c| cols[c].coeffs[r]))
}

/// Matrix of the quantized map on the coefficient space of `H^N`.
///
/// Built from the comb basis: `U B = B'` where the columns of `B` are the
/// coefficients of `Sigma g_j` and those of `B'` of `Sigma (M^ g_j)`.
pub fn build_propagator_matrix(m: &Sl2IntMatrix, n_dim: usize) -> Result<DMatrix<Complex64>> {
    check_even(n_dim)?;
    if m.a() == 0 {
        return Err(CatError::ZeroACoefficient);
    }
    let basis: Vec<GaussianState> = (0..n_dim).map(|j| comb_basis_state(j, n_dim)).collect();
    let images = basis.iter().map(|g| propagate_gaussian(m, g)).collect::<Result<Vec<_>>>()?;
    let b = columns(&basis)?;
    let bp = columns(&images)?;
    // U = B' B^-1, i.e. B^T U^T = B'^T.
    let ut = b
        .transpose()
        .lu()
        .solve(&bp.transpose())
        .ok_or(CatError::NotNormalizable(0.0))?;
    Ok(ut.transpose())
}

pub fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let p = u.adjoint() * u;
    let n = p.nrows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((p[(r, c)] - target).norm());
        }
    }
    worst
}

/// Normalized Gram matrix `<Sigma g_j, Sigma g_k> / sqrt(G_jj G_kk)`.
pub fn gram_matrix(states: &[GaussianState]) -> Result<DMatrix<Complex64>> {
    let n = states.len();
    let entries: Vec<Complex64> = (0..n * n)
        .into_par_iter()
        .map(|idx| pair_symmetrized(&states[idx % n], &states[idx / n]))
        .collect::<Result<Vec<_>>>()?;
    let raw = DMatrix::from_vec(n, n, entries);
    let d: Vec<f64> = (0..n).map(|j| raw[(j, j)].re.sqrt()).collect();
    Ok(DMatrix::from_fn(n, n, |r, c| raw[(r, c)] / (d[r] * d[c])))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(g: &DMatrix<Complex64>) -> Vec<f64> {
    let mut v: Vec<f64> = g.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Gram matrix of the symmetrized comb basis of `H^N`.
pub fn comb_gram(n_dim: usize) -> Result<DMatrix<Complex64>> {
    check_even(n_dim)?;
    let basis: Vec<GaussianState> = (0..n_dim).map(|j| comb_basis_state(j, n_dim)).collect();
    gram_matrix(&basis)
}

/// `<(M^)^n Sigma Phi_src, Sigma Phi_dst>_{H^N}`.
///
/// With `M^n src = j0 + w`, `j0` integer and `w` in `[0, 1)^2`, the propagated
/// packet is `exp(-i pi a b / h) exp(i pi N det(j0, w)) T_j0 T_w M^n Phi_0`,
/// and `T_j0` drops out after symmetrization.
pub fn matrix_element_exact(
    m: &Sl2IntMatrix,
    n: u32,
    src: TorusPoint,
    dst: TorusPoint,
    n_dim: usize,
) -> Result<Complex64> {
    matrix_element_exact_with_cap(m, n, src, dst, n_dim, DEFAULT_TERM_CAP)
}

pub fn matrix_element_exact_with_cap(
    m: &Sl2IntMatrix,
    n: u32,
    src: TorusPoint,
    dst: TorusPoint,
    n_dim: usize,
    cap: u64,
) -> Result<Complex64> {
    check_even(n_dim)?;
    let h = 1.0 / n_dim as f64;
    let (phase, w) = lifted_source(m, n, src, n_dim)?;
    let moved = propagate_power(m, n, &wavepacket(0.0, 0.0, h)?)?;
    let x = translate(&moved, w);
    let y = wavepacket(dst.q(), dst.p(), h)?;
    let (v, _) = pair_symmetrized_with_truncation(&x, &y, cap)?;
    Ok(phase * v)
}

/// Splits `M^n (a, b)` into integer part `j0` and fractional part `w` and
/// returns `(exp(-i pi a b N) exp(i pi N det(j0, w)), w)`.
pub fn lifted_source(
    m: &Sl2IntMatrix,
    n: u32,
    src: TorusPoint,
    n_dim: usize,
) -> Result<(Complex64, PlaneTranslation)> {
    let (j0, w) = lift_split(m, n, src)?;
    let nf = n_dim as f64;
    let det = w.1.mul_f64(j0.0) - w.0.mul_f64(j0.1);
    let phase = cis_pi(Dd::prod(src.q(), src.p()).mul_f64(-nf)) * cis_pi(det.mul_f64(nf));
    Ok((phase, PlaneTranslation::new(w.0.to_f64(), w.1.to_f64())))
}

/// `(floor(M^n src), frac(M^n src))` in double-double.
pub fn lift_split(m: &Sl2IntMatrix, n: u32, src: TorusPoint) -> Result<((f64, f64), (Dd, Dd))> {
    let mn = m
        .checked_pow(n)
        .filter(|p| p.entries().iter().all(|e| e.unsigned_abs() < (1u64 << 52)))
        .ok_or(CatError::TruncationOverflow { needed: u64::MAX, cap: 1 << 52 })?;
    let (x, y) = mn.apply_dd(src.q(), src.p());
    let (fx, fy) = (x.floor(), y.floor());
    let (wx, wy) = (x - fx, y - fy);
    // floor of a double-double can leave a representative at exactly 1.
    let norm = |f: Dd, w: Dd| {
        if w.to_f64() >= 1.0 {
            (f.to_f64() + 1.0, w - Dd::new(1.0))
        } else if w.to_f64() < 0.0 {
            (f.to_f64() - 1.0, w + Dd::new(1.0))
        } else {
            (f.to_f64(), w)
        }
    };
    let (jx, wx) = norm(fx, wx);
    let (jy, wy) = norm(fy, wy);
    Ok(((jx, jy), (wx, wy)))
}

/// Husimi density `(1/h) |<D, Sigma Phi_(q,p)>|^2` on an `R x R` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    pub resolution: usize,
    /// Row-major: `values[i * R + j]` at `(q, p) = (i / R, j / R)`.
    pub values: Vec<f64>,
    pub h: f64,
}

impl HusimiGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.resolution + j]
    }

    /// Riemann sum over the torus.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() / (self.resolution * self.resolution) as f64
    }

    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = k;
            }
        }
        (best / self.resolution, best % self.resolution)
    }

    /// Riemann mass of the grid cells whose torus distance to `c` is at most `radius`.
    pub fn disk_mass(&self, c: TorusPoint, radius: f64) -> f64 {
        let r = self.resolution;
        let mut acc = 0.0;
        for i in 0..r {
            for j in 0..r {
                let dq = circle_distance(i as f64 / r as f64, c.q());
                let dp = circle_distance(j as f64 / r as f64, c.p());
                if dq * dq + dp * dp <= radius * radius {
                    acc += self.at(i, j);
                }
            }
        }
        acc / (r * r) as f64
    }
}

/// Representative of `x - y` in `]-1/2, 1/2]`.
pub fn circle_distance(x: f64, y: f64) -> f64 {
    let r = crate::dd::frac(x - y);
    if r > 0.5 {
        r - 1.0
    } else {
        r
    }
}

pub fn husimi<F>(pairing: F, n_dim: usize, resolution: usize) -> Result<HusimiGrid>
where
    F: Fn(TorusPoint) -> Result<Complex64> + Sync,
{
    check_even(n_dim)?;
    let r = resolution;
    let values = (0..r * r)
        .into_par_iter()
        .map(|k| {
            let pt = TorusPoint::new((k / r) as f64 / r as f64, (k % r) as f64 / r as f64);
            pairing(pt).map(|z| n_dim as f64 * z.norm_sqr())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HusimiGrid { resolution: r, values, h: 1.0 / n_dim as f64 })
}

/// Husimi grid of a state given by its coefficients.
pub fn husimi_of_state(state: &TorusState, resolution: usize) -> Result<HusimiGrid> {
    let n = state.dimension();
    let h = 1.0 / n as f64;
    husimi(
        |pt| {
            let packet = torus_coefficients(&wavepacket(pt.q(), pt.p(), h)?)?;
            Ok(state.inner(&packet))
        },
        n,
        resolution,
    )
}

/// The `K x K` grid of spacing `1/K` for `N = K^2`.
pub fn wavepacket_lattice(n_dim: usize) -> Result<Vec<TorusPoint>> {
    let k = (n_dim as f64).sqrt().round() as usize;
    if k * k != n_dim {
        return Err(CatError::NotPerfectSquare(n_dim as i64));
    }
    let mut out = Vec::with_capacity(n_dim);
    for j in 0..k {
        for l in 0..k {
            out.push(TorusPoint::new(j as f64 / k as f64, l as f64 / k as f64));
        }
    }
    Ok(out)
}

/// Condition number of the normalized Gram matrix of the wave-packet lattice.
pub fn frame_condition_number(n_dim: usize) -> Result<f64> {
    let h = 1.0 / n_dim as f64;
    let states = wavepacket_lattice(n_dim)?
        .into_iter()
        .map(|p| wavepacket(p.q(), p.p(), h))
        .collect::<Result<Vec<_>>>()?;
    let ev = hermitian_eigenvalues(&gram_matrix(&states)?);
    Ok(ev[ev.len() - 1] / ev[0])
}

/// Argument of `z` in `[0, 2 pi)`.
pub fn phase_of(z: Complex64) -> f64 {
    let r = z.arg().rem_euclid(2.0 * PI);
    // rem_euclid rounds tiny negative arguments up to exactly 2 pi.
    if r >= 2.0 * PI { 0.0 } else { r }
}

/// Eigenphases in `[0, 2 pi)`, ascending.
pub fn eigenphases(u: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let mut ph: Vec<f64> = eigenvalues(u)?.into_iter().map(phase_of).collect();
    ph.sort_by(f64::total_cmp);
    Ok(ph)
}

/// Eigenvalues of `u` from its complex Schur form. The deflation tolerance is
/// relative; at machine epsilon the QR sweep stalls on the clustered spectra
/// of parabolic maps.
pub fn eigenvalues(u: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let dim = u.nrows();
    let max_iter = 10_000 + 100 * dim;
    let schur = u.clone().try_schur(1e-14, max_iter).ok_or(CatError::EigenNonConvergence { dim, max_iter })?;
    Ok(schur.unpack().1.diagonal().iter().copied().collect())
}
