use crate::HarnessError;
use catmap_core::classical::{ehrenfest_time, spectral_data, Sl2IntMatrix, TorusPoint};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NMode {
    Absolute,
    EhrenfestMultiples,
}

/// Parsed run configuration. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub matrix: [i64; 4],
    #[serde(rename = "N_values")]
    pub dims: Vec<usize>,
    pub n_mode: NMode,
    pub n_values: Vec<f64>,
    pub points: Vec<(f64, f64)>,
    pub grid_resolution: usize,
    pub output_dir: String,
    pub seed: u64,
}

fn invalid(key: &str, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("key `{key}`: {msg}"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let [a, b, c, d] = self.matrix;
        if a as i128 * d as i128 - b as i128 * c as i128 != 1 {
            return Err(invalid("matrix", "determinant must be 1"));
        }
        if self.dims.is_empty() {
            return Err(invalid("N_values", "list is empty"));
        }
        if let Some(n) = self.dims.iter().find(|&&n| n == 0 || n % 2 == 1) {
            return Err(invalid("N_values", format!("{n} is not a positive even integer")));
        }
        if self.grid_resolution < 8 {
            return Err(invalid("grid_resolution", "must be at least 8"));
        }
        for &v in &self.n_values {
            let ok = v.is_finite()
                && v >= 0.0
                && (self.n_mode == NMode::EhrenfestMultiples || v.fract() == 0.0);
            if !ok {
                return Err(invalid("n_values", format!("{v} is not a valid time")));
            }
        }
        if self.points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(invalid("points", "non-finite coordinate"));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Result<Sl2IntMatrix, HarnessError> {
        let [a, b, c, d] = self.matrix;
        Sl2IntMatrix::new(a, b, c, d).map_err(|e| invalid("matrix", e))
    }

    pub fn torus_points(&self) -> Vec<TorusPoint> {
        self.points.iter().map(|&(q, p)| TorusPoint::new(q, p)).collect()
    }

    pub fn sorted_dims(&self) -> Vec<usize> {
        let mut d = self.dims.clone();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Distinct integer times for dimension `n_dim`, ascending.
    pub fn times(&self, n_dim: usize) -> Result<Vec<u32>, HarnessError> {
        let mut out: Vec<u32> = match self.n_mode {
            NMode::Absolute => self.n_values.iter().map(|&v| v as u32).collect(),
            NMode::EhrenfestMultiples => {
                let lambda = spectral_data(&self.matrix()?).map_err(|e| invalid("matrix", e))?.lambda;
                let te = ehrenfest_time(1.0 / n_dim as f64, lambda);
                self.n_values.iter().map(|&v| (v * te).ceil() as u32).collect()
            }
        };
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}
