use catmap_harness::{run, Experiment, HarnessError};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "catmap", version, about = "Quantized cat map experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(clap::Args)]
struct Io {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    Unitarity(Io),
    Egorov(Io),
    Theorem(Io),
    Bands(Io),
    Eigenphases(Io),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, io) = match cli.command {
        Command::Unitarity(io) => (Experiment::Unitarity, io),
        Command::Egorov(io) => (Experiment::Egorov, io),
        Command::Theorem(io) => (Experiment::Theorem, io),
        Command::Bands(io) => (Experiment::Bands, io),
        Command::Eigenphases(io) => (Experiment::Eigenphases, io),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.threads {
        pool = pool.num_threads(k.max(1));
    }
    let result = pool
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))
        .and_then(|pool| {
            let text = std::fs::read_to_string(&io.config)?;
            if cli.verbose {
                eprintln!("{}: {} threads, config {}", experiment.name(), pool.current_num_threads(), io.config.display());
            }
            pool.install(|| run(experiment, &text, io.out.as_deref()))
        });
    match result {
        Ok(()) => {
            if cli.verbose {
                eprintln!("{}: done", experiment.name());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("catmap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
