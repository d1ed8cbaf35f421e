use crate::config::ExperimentConfig;
use crate::output::ResultTable;
use crate::HarnessError;
use catmap_core::birkhoff::{fit_uniform_constant, theorem_error_table, theorem_rhs_unscaled, WindowCenter};
use catmap_core::classical::{cat_apply, ehrenfest_time, spectral_data, Sl2IntMatrix, TorusPoint};
use catmap_core::lagrangian::{band_sums, band_threshold};
use catmap_core::metaplectic::{propagate_power, wavepacket};
use catmap_core::torus::{
    build_propagator_matrix, comb_gram, eigenvalues, hermitian_eigenvalues, husimi_of_state,
    matrix_element_exact, phase_of, torus_coefficients, unitarity_defect,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::time::Instant;

fn lambda_of(m: &Sl2IntMatrix) -> Result<f64, HarnessError> {
    Ok(spectral_data(m)?.lambda)
}

/// Deviation and comb Gram table, plus a separate wall-time table.
pub fn run_unitarity(cfg: &ExperimentConfig) -> Result<(ResultTable, ResultTable), HarnessError> {
    let m = cfg.matrix()?;
    let mut table = ResultTable::new("unitarity", &["N", "max_unitarity_defect", "gram_min_eigenvalue"]);
    let mut timing = ResultTable::new("unitarity_timing", &["N", "seconds"]);
    for n_dim in cfg.sorted_dims() {
        let t0 = Instant::now();
        let u = build_propagator_matrix(&m, n_dim)?;
        let defect = unitarity_defect(&u);
        let ev = hermitian_eigenvalues(&comb_gram(n_dim)?);
        let gram_min = ev[0] / ev[ev.len() - 1];
        table.push(vec![n_dim.into(), defect.into(), gram_min.into()]);
        timing.push(vec![n_dim.into(), t0.elapsed().as_secs_f64().into()]);
    }
    Ok((table, timing))
}

/// A rendered Husimi frame: file name and body.
pub type Frame = (String, String);

fn render_frame(n_dim: usize, n: u32, pt: TorusPoint, values: &[f64], r: usize) -> String {
    let mut s = format!("N,{n_dim}\nn,{n}\npoint,{:?},{:?}\n", pt.q(), pt.p());
    for i in 0..r {
        let row: Vec<String> = values[i * r..(i + 1) * r].iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn run_egorov(cfg: &ExperimentConfig) -> Result<(ResultTable, Vec<Frame>), HarnessError> {
    let m = cfg.matrix()?;
    let lambda = lambda_of(&m)?;
    let mut table = ResultTable::new(
        "egorov",
        &["N", "n", "point", "q", "p", "n_over_te", "disk_mass", "total_mass", "disk_fraction"],
    );
    let mut frames = Vec::new();
    for n_dim in cfg.sorted_dims() {
        let h = 1.0 / n_dim as f64;
        for n in cfg.times(n_dim)? {
            for (idx, pt) in cfg.torus_points().into_iter().enumerate() {
                let moved = propagate_power(&m, n, &wavepacket(pt.q(), pt.p(), h)?)?;
                let grid = husimi_of_state(&torus_coefficients(&moved)?, cfg.grid_resolution)?;
                let mut centre = pt;
                for _ in 0..n {
                    centre = cat_apply(&m, centre);
                }
                let disk = grid.disk_mass(centre, 10.0 * h.sqrt());
                let total = grid.total_mass();
                table.push(vec![
                    n_dim.into(),
                    n.into(),
                    idx.into(),
                    pt.q().into(),
                    pt.p().into(),
                    (n as f64 / ehrenfest_time(h, lambda)).into(),
                    disk.into(),
                    total.into(),
                    (disk / total).into(),
                ]);
                frames.push((
                    format!("husimi_N{n_dim}_n{n}_p{idx}.csv"),
                    render_frame(n_dim, n, pt, &grid.values, grid.resolution),
                ));
            }
        }
    }
    Ok((table, frames))
}

/// Eight reference pairs drawn from `seed`.
pub fn reference_pairs(seed: u64) -> Vec<(TorusPoint, TorusPoint)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..8)
        .map(|_| (TorusPoint::new(rng.gen(), rng.gen()), TorusPoint::new(rng.gen(), rng.gen())))
        .collect()
}

/// `D` fitted at `N = 64`, `n = ceil(1.5 t_E)` on the reference pairs.
pub fn fit_reference_constant(m: &Sl2IntMatrix, seed: u64) -> Result<Complex64, HarnessError> {
    let h = 1.0 / 64.0;
    let n_ref = (1.5 * ehrenfest_time(h, lambda_of(m)?)).ceil() as u32;
    let samples = reference_pairs(seed)
        .into_iter()
        .map(|(s, d)| {
            Ok((
                matrix_element_exact(m, n_ref, s, d, 64)?,
                theorem_rhs_unscaled(m, n_ref, h, s, d, WindowCenter::Lift)?,
            ))
        })
        .collect::<Result<Vec<_>, catmap_core::CatError>>()?;
    Ok(fit_uniform_constant(&samples))
}

/// `(points[k], points[k + 1 mod len])` for every `k`.
pub fn theorem_pairs(cfg: &ExperimentConfig) -> Result<Vec<(TorusPoint, TorusPoint)>, HarnessError> {
    let pts = cfg.torus_points();
    if pts.len() < 2 {
        return Err(HarnessError::Config("key `points`: theorem needs at least two points".into()));
    }
    Ok((0..pts.len()).map(|k| (pts[k], pts[(k + 1) % pts.len()])).collect())
}

pub fn run_theorem(cfg: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    let m = cfg.matrix()?;
    let d = fit_reference_constant(&m, cfg.seed)?;
    let pairs = theorem_pairs(cfg)?;
    let mut cells = Vec::new();
    for n_dim in cfg.sorted_dims() {
        for n in cfg.times(n_dim)? {
            cells.push((n_dim, n));
        }
    }
    let rows = theorem_error_table(&m, &cells, &pairs, WindowCenter::Lift, d)?;
    let mut table = ResultTable::new(
        "theorem",
        &[
            "N", "n", "pair", "n_over_te", "src_q", "src_p", "dst_q", "dst_p", "lhs_re", "lhs_im",
            "lhs_abs", "rhs_re", "rhs_im", "rhs_abs", "residual", "bound", "ratio", "flagged",
        ],
    );
    for (k, r) in rows.iter().enumerate() {
        let rhs = r.rhs.unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        table.push(vec![
            r.n_dim.into(),
            r.n.into(),
            (k % pairs.len()).into(),
            r.n_over_te.into(),
            r.src.q().into(),
            r.src.p().into(),
            r.dst.q().into(),
            r.dst.p().into(),
            r.lhs.re.into(),
            r.lhs.im.into(),
            r.lhs.norm().into(),
            rhs.re.into(),
            rhs.im.into(),
            rhs.norm().into(),
            r.residual.into(),
            r.bound.into(),
            r.ratio.into(),
            r.flagged().into(),
        ]);
    }
    Ok(table)
}

pub fn run_bands(cfg: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    let m = cfg.matrix()?;
    let lambda = lambda_of(&m)?;
    let mut jobs = Vec::new();
    for n_dim in cfg.sorted_dims() {
        for n in cfg.times(n_dim)? {
            for (idx, pt) in cfg.torus_points().into_iter().enumerate() {
                jobs.push((n_dim, n, idx, pt));
            }
        }
    }
    let sums = jobs
        .par_iter()
        .map(|&(n_dim, n, _, pt)| band_sums(&m, n, 1.0 / n_dim as f64, pt.q(), pt.p()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = ResultTable::new(
        "bands",
        &[
            "N", "n", "point", "q", "p", "off_band_tail", "off_band_tail_lagrangian", "band_difference",
            "bound", "ratio", "flagged",
        ],
    );
    for (&(n_dim, n, idx, pt), s) in jobs.iter().zip(&sums) {
        let h = 1.0 / n_dim as f64;
        let bound = h.sqrt() * lambda.powf(-(n as f64) / 2.0) + (-1.0 / h).exp();
        let flagged = (n as f64) < band_threshold(h, lambda);
        table.push(vec![
            n_dim.into(),
            n.into(),
            idx.into(),
            pt.q().into(),
            pt.p().into(),
            s.off_band_propagated.into(),
            s.off_band_lagrangian.into(),
            s.difference().into(),
            bound.into(),
            (s.difference() / bound).into(),
            flagged.into(),
        ]);
    }
    Ok(table)
}

pub fn run_eigenphases(cfg: &ExperimentConfig) -> Result<ResultTable, HarnessError> {
    let m = cfg.matrix()?;
    let mut table = ResultTable::new("eigenphases", &["N", "k", "phase", "spacing", "modulus_defect"]);
    for n_dim in cfg.sorted_dims() {
        let u = build_propagator_matrix(&m, n_dim)?;
        let mut ev: Vec<(f64, f64)> =
            eigenvalues(&u)?.iter().map(|&z| (phase_of(z), (z.norm() - 1.0).abs())).collect();
        ev.sort_by(|a, b| a.0.total_cmp(&b.0));
        for k in 0..ev.len() {
            let next = if k + 1 < ev.len() { ev[k + 1].0 } else { ev[0].0 + 2.0 * PI };
            table.push(vec![n_dim.into(), k.into(), ev[k].0.into(), (next - ev[k].0).into(), ev[k].1.into()]);
        }
    }
    Ok(table)
}
