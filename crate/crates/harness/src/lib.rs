//! Experiment runner for the cat-map library: strict JSON configuration,
//! five experiments, deterministic CSV tables and a run manifest.

pub mod config;
pub mod experiments;
pub mod output;

use catmap_core::CatError;
use config::ExperimentConfig;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] CatError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Io(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Unitarity,
    Egorov,
    Theorem,
    Bands,
    Eigenphases,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Unitarity => "unitarity",
            Experiment::Egorov => "egorov",
            Experiment::Theorem => "theorem",
            Experiment::Bands => "bands",
            Experiment::Eigenphases => "eigenphases",
        }
    }
}

/// Runs one experiment and writes its CSV files and `manifest.json` into `out`.
pub fn run(experiment: Experiment, config_text: &str, out: Option<&Path>) -> Result<(), HarnessError> {
    let cfg = ExperimentConfig::from_json(config_text)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone().into());
    std::fs::create_dir_all(&dir)?;
    let name = experiment.name();
    let mut written = Vec::new();
    let main_csv = format!("{name}.csv");
    match experiment {
        Experiment::Unitarity => {
            let (table, timing) = experiments::run_unitarity(&cfg)?;
            written.push(output::write_file(&dir, &main_csv, &table.to_csv())?);
            written.push(output::write_file(&dir, "unitarity_timing.csv", &timing.to_csv())?);
        }
        Experiment::Egorov => {
            let (table, frames) = experiments::run_egorov(&cfg)?;
            written.push(output::write_file(&dir, &main_csv, &table.to_csv())?);
            for (file, body) in frames {
                written.push(output::write_file(&dir, &file, &body)?);
            }
        }
        Experiment::Theorem => {
            written.push(output::write_file(&dir, &main_csv, &experiments::run_theorem(&cfg)?.to_csv())?);
        }
        Experiment::Bands => {
            written.push(output::write_file(&dir, &main_csv, &experiments::run_bands(&cfg)?.to_csv())?);
        }
        Experiment::Eigenphases => {
            written.push(output::write_file(&dir, &main_csv, &experiments::run_eigenphases(&cfg)?.to_csv())?);
        }
    }
    output::write_manifest(&dir, name, config_text, &cfg, written)
}
