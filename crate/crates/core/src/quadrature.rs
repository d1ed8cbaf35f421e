//! Composite tanh-sinh quadrature for smooth complex integrands on a finite
//! window. Used as an independent oracle for the closed forms.

use crate::error::{CatError, Result};
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

const T_MAX: f64 = 3.2;
const MAX_LEVEL: u32 = 12;

/// Nodes of one level: level 0 holds every integer multiple of the base step,
/// higher levels only the new odd multiples.
fn level_nodes(level: u32) -> Vec<(f64, f64)> {
    let step = 2f64.powi(-(level as i32));
    let n = (T_MAX / step).ceil() as i64;
    let mut out = Vec::new();
    for k in -n..=n {
        if level > 0 && k % 2 == 0 {
            continue;
        }
        let t = k as f64 * step;
        let u = FRAC_PI_2 * t.sinh();
        let x = u.tanh();
        let ch = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (ch * ch);
        out.push((x, w));
    }
    out
}

/// Integral of `f` over `[a, b]`, split into panels of width at most `panel`.
///
/// Refinement stops once two successive levels agree to `tol` relative to
/// the L1 mass of the integrand.
pub fn integrate<F>(f: F, a: f64, b: f64, panel: f64, tol: f64) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let npanels = (((b - a) / panel).ceil() as usize).max(1);
    let width = (b - a) / npanels as f64;
    let centers: Vec<f64> = (0..npanels).map(|i| a + (i as f64 + 0.5) * width).collect();
    let r = 0.5 * width;

    let mut sum = Complex64::new(0.0, 0.0);
    let mut mass = 0.0;
    let mut prev: Option<Complex64> = None;
    let mut last_delta = f64::INFINITY;
    let mut agreed = 0;
    for level in 0..=MAX_LEVEL {
        for (x, w) in level_nodes(level) {
            for &c in &centers {
                let v = f(c + r * x) * (w * r);
                sum += v;
                mass += v.norm();
            }
        }
        let step = 2f64.powi(-(level as i32));
        let est = sum * step;
        let scale = (mass * step).max(f64::MIN_POSITIVE);
        if let Some(p) = prev {
            last_delta = (est - p).norm();
            if last_delta <= tol * scale {
                agreed += 1;
                if agreed >= 1 || last_delta == 0.0 {
                    return Ok(est);
                }
            } else {
                agreed = 0;
            }
        }
        prev = Some(est);
    }
    Err(CatError::QuadratureNonConvergence { tol, delta: last_delta })
}
