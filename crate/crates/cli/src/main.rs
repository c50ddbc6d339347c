use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use probe_cli::emit::{emit_report, Format};
use probe_cli::run::{load_fact_set, run_probe, Resources};
use probe_cli::RunConfig;
use probe_core::aggregate::Strategy;

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUN: u8 = 3;

#[derive(Parser)]
#[command(name = "probe", version, about = "Test-time augmentation probes over relational facts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline and write records.csv, kcurve.csv, calibration.csv and report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated prompt counts, e.g. 1,2,5,10,20,30.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the config and the files it names without contacting any backend.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path) -> Result<RunConfig, ExitCode> {
    let mut config = RunConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_VALIDATION)
    })?;
    config.apply_env();
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<(), String> {
    config.validate().map_err(|e| e.to_string())?;
    let facts = load_fact_set(config).map_err(|e| e.to_string())?;
    Resources::load(config).map_err(|e| e.to_string())?;
    eprintln!("ok: {} facts, {} relations", facts.len(), facts.templates().len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => {
            let config = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match validate(&config) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_VALIDATION)
                }
            }
        }
        Command::Run { config, strategy, seed, k, out } => {
            let mut config = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Some(s) = strategy {
                config.strategy = s;
            }
            if let Some(s) = seed {
                config.seed = s;
            }
            if let Some(k) = k {
                config.k_values = k;
            }
            let out_dir = match out {
                Some(dir) => dir,
                None => config.resolve(&config.output_dir),
            };
            let report = match run_probe(&config) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_RUN });
                }
            };
            match emit_report(&report, &out_dir, &[Format::Csv, Format::Json]) {
                Ok(files) => {
                    for w in &report.warnings {
                        eprintln!("warning: {}", w.message);
                    }
                    eprintln!("wrote {} files to {}", files.len(), out_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_RUN)
                }
            }
        }
    }
}
