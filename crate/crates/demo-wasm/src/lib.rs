//! Browser bindings: Husimi frames of a propagated packet, eigenphases of the
//! quantized map and the matrix-element comparison of the main estimate.
//!
//! Every function returns a flat `Float64Array`; errors surface as JS
//! exceptions carrying the core error message.

use catmap_core::birkhoff::{theorem_rhs, WindowCenter};
use catmap_core::classical::{Sl2IntMatrix, TorusPoint};
use catmap_core::metaplectic::{propagate_power, wavepacket};
use catmap_core::torus::{build_propagator_matrix, eigenphases as phases, husimi_of_state, matrix_element_exact, torus_coefficients};
use num_complex::Complex64;
use wasm_bindgen::prelude::*;

fn matrix(entries: &[i32]) -> Result<Sl2IntMatrix, JsError> {
    let [a, b, c, d] = <[i32; 4]>::try_from(entries).map_err(|_| JsError::new("matrix needs four entries"))?;
    Ok(Sl2IntMatrix::new(a as i64, b as i64, c as i64, d as i64)?)
}

/// Row-major `resolution x resolution` Husimi density of `M^n` applied to the
/// packet at `(q, p)` on the torus with `h = 1/n_dim`.
#[wasm_bindgen]
pub fn husimi_frame(entries: &[i32], n_dim: usize, n: u32, q: f64, p: f64, resolution: usize) -> Result<Vec<f64>, JsError> {
    let m = matrix(entries)?;
    let moved = propagate_power(&m, n, &wavepacket(q, p, 1.0 / n_dim as f64)?)?;
    Ok(husimi_of_state(&torus_coefficients(&moved)?, resolution)?.values)
}

/// Eigenphases in `[0, 2 pi)`, ascending.
#[wasm_bindgen]
pub fn eigenphases(entries: &[i32], n_dim: usize) -> Result<Vec<f64>, JsError> {
    Ok(phases(&build_propagator_matrix(&matrix(entries)?, n_dim)?)?)
}

/// `[lhs_re, lhs_im, rhs_re, rhs_im]` for the packet pair, with the prediction
/// scaled by `D = d_re + i d_im`.
#[wasm_bindgen]
pub fn matrix_element(
    entries: &[i32],
    n_dim: usize,
    n: u32,
    src: &[f64],
    dst: &[f64],
    d_re: f64,
    d_im: f64,
) -> Result<Vec<f64>, JsError> {
    let m = matrix(entries)?;
    let point = |v: &[f64]| match v {
        [q, p] => Ok(TorusPoint::new(*q, *p)),
        _ => Err(JsError::new("points need two coordinates")),
    };
    let (s, t) = (point(src)?, point(dst)?);
    let lhs = matrix_element_exact(&m, n, s, t, n_dim)?;
    let rhs = theorem_rhs(&m, n, 1.0 / n_dim as f64, s, t, WindowCenter::Lift, Complex64::new(d_re, d_im))?;
    Ok(vec![lhs.re, lhs.im, rhs.re, rhs.im])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_has_unit_mass() {
        let v = husimi_frame(&[2, 1, 1, 1], 16, 1, 0.3, 0.4, 32).unwrap_or_else(|_| panic!());
        assert_eq!(v.len(), 32 * 32);
        let mass = v.iter().sum::<f64>() / (32.0 * 32.0);
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }

    #[test]
    fn eigenphases_count() {
        let v = eigenphases(&[2, 1, 1, 1], 8).unwrap_or_else(|_| panic!());
        assert_eq!(v.len(), 8);
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn matrix_element_shape() {
        let v = matrix_element(&[2, 1, 1, 1], 64, 4, &[0.3, 0.4], &[0.71, 0.12], 1.4, 0.0).unwrap_or_else(|_| panic!());
        assert_eq!(v.len(), 4);
        assert!(v.iter().all(|x| x.is_finite()));
    }
}
