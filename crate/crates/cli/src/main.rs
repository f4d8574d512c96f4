//! `ruin analyze` runs the full analysis on a monthly claims CSV;
//! `ruin generate` writes a seeded synthetic dataset in the same format.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ruin_core::ingest::write_claims_csv;
use ruin_core::pipeline::{parse_grid, run_pipeline, LoadingMode, PipelineConfig};
use ruin_core::synthetic::{generate, SyntheticConfig};

#[derive(Debug, Parser)]
#[command(
    name = "ruin",
    version,
    about = "Ruin probabilities under claim dependence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit, simulate and test; write tables to the output directory.
    Analyze {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Flat `key=value` file; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        paths: Option<usize>,
        /// Comma-separated initial surpluses, e.g. `0,500,1000`.
        #[arg(long, value_parser = grid_arg)]
        grid: Option<Grid>,
        /// `fixed:<x>` or `implied`.
        #[arg(long)]
        loading: Option<LoadingMode>,
    },
    /// Write a synthetic three-product dataset.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 60)]
        months: u32,
        /// Draw counts and claim sizes independently.
        #[arg(long)]
        independent: bool,
    },
}

#[derive(Debug, Clone)]
struct Grid(Vec<f64>);

fn grid_arg(s: &str) -> Result<Grid, String> {
    parse_grid(s).map(Grid)
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn analyze(
    input: Option<PathBuf>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    paths: Option<usize>,
    grid: Option<Grid>,
    loading: Option<LoadingMode>,
) -> ExitCode {
    let mut cfg = match &config {
        Some(path) => {
            let text = match fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return input_error(format!("{}: {e}", path.display())),
            };
            match PipelineConfig::parse(&text) {
                Ok(c) => c,
                Err(e) => return input_error(format!("{}: {e}", path.display())),
            }
        }
        None => PipelineConfig::default(),
    };
    if let Some(v) = input {
        cfg.input = v;
    }
    if let Some(v) = out {
        cfg.out = v;
    }
    if let Some(v) = seed {
        cfg.seed = v;
    }
    if let Some(v) = paths {
        cfg.n_paths = v;
    }
    if let Some(Grid(v)) = grid {
        cfg.grid = v;
    }
    if let Some(v) = loading {
        cfg.loading = v;
    }

    match run_pipeline(&cfg) {
        Ok(report) => {
            for s in &report.segments {
                let first = &s.dependent[0];
                let last = &s.dependent[s.dependent.len() - 1];
                println!(
                    "{:<13} theta={:.3} psi_dep({})={:.4} psi_dep({})={:.4}",
                    s.segment, s.simulation_theta, first.u0, first.psi_hat, last.u0, last.psi_hat
                );
            }
            for w in report
                .warnings
                .iter()
                .chain(report.segments.iter().flat_map(|s| &s.warnings))
            {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", cfg.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: stage {}: {e}", e.stage);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Analyze {
            input,
            config,
            out,
            seed,
            paths,
            grid,
            loading,
        } => analyze(input, config, out, seed, paths, grid, loading),
        Command::Generate {
            out,
            seed,
            months,
            independent,
        } => {
            let mut synth = if independent {
                SyntheticConfig::independent(seed)
            } else {
                SyntheticConfig::three_products(seed)
            };
            synth.months = months;
            let records = generate(&synth);
            let written = fs::File::create(&out)
                .map_err(|e| e.to_string())
                .and_then(|f| write_claims_csv(f, &records).map_err(|e| e.to_string()));
            match written {
                Ok(()) => {
                    println!("wrote {} records to {}", records.len(), out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => input_error(format!("{}: {e}", out.display())),
            }
        }
    }
}
