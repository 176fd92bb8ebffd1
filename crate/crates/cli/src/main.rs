//! `imd2`: generate synthetic IMD2 datasets, train cancellers, evaluate them
//! and compare model/optimizer pairs.

mod bench;
mod config;
mod data;
mod error;
mod eval;
mod generate;
mod report;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use imd2_core::model::ModelKind;
use imd2_core::signal::DatasetFormat;
use imd2_core::train::Method;

use crate::error::Result;

#[derive(Parser)]
#[command(
    name = "imd2",
    version,
    about = "IMD2 self-interference cancellation toolkit"
)]
struct Cli {
    /// Print progress and diagnostics to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Bin,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Chebyshev,
    Nn,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ls,
    Adam,
    Lbfgs,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the leakage chain and write a dataset with a config sidecar.
    Generate {
        /// chain.toml with [chain] and [ofdm] tables.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Fit a model to a dataset.
    Train {
        #[arg(value_enum)]
        model: KindArg,
        #[arg(long, value_enum)]
        optimizer: Option<MethodArg>,
        #[arg(long)]
        data: PathBuf,
        /// TOML with [model] and [optimizer] tables.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<usize>>,
    },
    /// NMSE and PSDs of a trained model on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every model x optimizer cell of a suite on one dataset.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<usize>>,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    let verbose = cli.verbose;
    match cli.command {
        Command::Generate {
            config,
            seed,
            out,
            format,
        } => {
            let path = generate::run(generate::GenerateArgs {
                config: config.as_deref(),
                seed,
                out: &out,
                format: match format {
                    Format::Csv => DatasetFormat::Csv,
                    Format::Bin => DatasetFormat::Binary,
                },
                verbose,
            })?;
            println!("{}", path.display());
        }
        Command::Train {
            model,
            optimizer,
            data,
            config,
            seed,
            out,
            checkpoints,
        } => {
            let report = train::run(train::TrainArgs {
                kind: match model {
                    KindArg::Chebyshev => ModelKind::Chebyshev,
                    KindArg::Nn => ModelKind::Nn,
                },
                optimizer: optimizer.map(|m| match m {
                    MethodArg::Ls => Method::Ls,
                    MethodArg::Adam => Method::Adam,
                    MethodArg::Lbfgs => Method::Lbfgs,
                }),
                data: &data,
                config: config.as_deref(),
                seed,
                out: &out,
                checkpoints,
                verbose,
            })?;
            for (c, s) in report.checkpoints.iter().zip(&report.suppression_db) {
                println!("{c}\t{}", imd2_core::metrics::fmt_db(s.0));
            }
        }
        Command::Eval { model, data, out } => {
            let report = eval::run(eval::EvalArgs {
                model: &model,
                data: &data,
                out: &out,
                verbose,
            })?;
            println!(
                "nmse_db {}\tsuppression_db {}",
                imd2_core::metrics::fmt_db(report.nmse.nmse_db),
                imd2_core::metrics::fmt_db(report.nmse.suppression_db)
            );
        }
        Command::Bench {
            config,
            seed,
            out,
            checkpoints,
        } => {
            bench::run(bench::BenchArgs {
                config: config.as_deref(),
                seed,
                out: out.as_deref(),
                checkpoints,
                verbose,
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
