use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use featgenn_cli::{report, ExperimentConfig, Overrides, EXIT_CONFIG, EXIT_OK, EXIT_RUN_FAILED};

#[derive(Parser)]
#[command(name = "featgenn", version, about = "Evolved convolutional feature generation for tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-validated f1 of the raw datasets.
    Baseline(Common),
    /// Evolve generators with the configured pooling and export the best features.
    Run(Common),
    /// Paired runs with correlation and max pooling.
    ComparePooling(Common),
    /// Evolution runs for several pooling-statistics row fractions.
    DataFraction(Common),
    /// Baseline plus evolution, with literature comparison and feature counts.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "configs/default.toml")]
    config: PathBuf,
    /// Restrict to these manifest entries (repeatable or comma separated).
    #[arg(long, value_delimiter = ',')]
    dataset: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            datasets: self.dataset.clone(),
            seed: self.seed,
            runs: self.runs,
            out: self.out.clone(),
            workers: self.workers,
            fractions: self.fractions.clone(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (common, run): (&Common, fn(&ExperimentConfig) -> anyhow::Result<featgenn_cli::CommandOutput>) =
        match &cli.command {
            Command::Baseline(c) => (c, featgenn_cli::cmd_baseline),
            Command::Run(c) => (c, featgenn_cli::cmd_run),
            Command::ComparePooling(c) => (c, featgenn_cli::cmd_compare_pooling),
            Command::DataFraction(c) => (c, featgenn_cli::cmd_data_fraction),
            Command::Bench(c) => (c, featgenn_cli::cmd_bench),
        };
    let cfg = ExperimentConfig::load(&common.config).and_then(|mut cfg| {
        cfg.apply(&common.overrides())?;
        Ok(cfg)
    });
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match run(&cfg) {
        Ok(out) => {
            report::print_table(&out.table);
            println!("results in {}", out.out_dir.display());
            if out.failures.is_empty() {
                ExitCode::from(EXIT_OK as u8)
            } else {
                for f in &out.failures {
                    eprintln!("failed: {f}");
                }
                ExitCode::from(EXIT_RUN_FAILED as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUN_FAILED as u8)
        }
    }
}
