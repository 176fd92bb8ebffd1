//! Model x optimizer comparison on one shared synthetic dataset.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use imd2_core::chain::{gen_ofdm, imd2_chain};
use imd2_core::model::ModelKind;
use imd2_core::signal::Dataset;
use imd2_core::train::{train, Method, OptimizerConfig, StopReason};
use imd2_core::Error as CoreError;
use serde::{Serialize, Serializer};

use crate::config::{config_hash, load_toml, CellSpec, SuiteFile};
use crate::error::{create_dir, write, CliError, Result};

pub const THREADS_ENV: &str = "IMD2_THREADS";

pub struct BenchArgs<'a> {
    pub config: Option<&'a Path>,
    pub seed: Option<u64>,
    pub out: Option<&'a Path>,
    pub checkpoints: Option<Vec<usize>>,
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Db(f64),
    NotApplicable,
    Fail,
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Db(v) => imd2_core::metrics::ser_db(v, s),
            Self::NotApplicable => s.serialize_str("N/A"),
            Self::Fail => s.serialize_str("FAIL"),
        }
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Db(v) => f.write_str(&imd2_core::metrics::fmt_db(*v)),
            Self::NotApplicable => f.write_str("N/A"),
            Self::Fail => f.write_str("FAIL"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub model: ModelKind,
    pub optimizer: Method,
    pub descriptor: Option<String>,
    pub suppression_db: Vec<Cell>,
    pub iterations: Option<usize>,
    pub evals: Option<usize>,
    pub stop_reason: Option<StopReason>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub rows: usize,
    pub sample_rate_hz: f64,
}

/// Deterministic part of a bench run; wall times go to a separate file.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub config_hash: String,
    pub suite: SuiteFile,
    pub dataset: DatasetSummary,
    pub checkpoints: Vec<usize>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Serialize)]
struct Timing {
    model: ModelKind,
    optimizer: Method,
    wall_time_s: f64,
}

fn run_cell(suite: &SuiteFile, ds: &Dataset, spec: CellSpec) -> (Row, f64) {
    let start = Instant::now();
    let cfg = OptimizerConfig {
        method: spec.optimizer,
        ..suite.optimizer.clone()
    };
    let result = suite
        .model
        .model_config(spec.model)
        .build(cfg.seed)
        .and_then(|m| train(&m, ds, &cfg));
    let mut row = Row {
        model: spec.model,
        optimizer: spec.optimizer,
        descriptor: None,
        suppression_db: Vec::new(),
        iterations: None,
        evals: None,
        stop_reason: None,
        error: None,
    };
    match result {
        Ok(out) => {
            row.descriptor = Some(out.model.describe());
            row.suppression_db = suite
                .checkpoints
                .iter()
                .map(|&c| out.suppression_at(c).map_or(Cell::Fail, Cell::Db))
                .collect();
            row.iterations = out.history.last().map(|r| r.iter);
            row.evals = Some(out.evals);
            row.stop_reason = Some(out.stop);
        }
        Err(CoreError::Unsupported(msg)) => {
            row.suppression_db = vec![Cell::NotApplicable; suite.checkpoints.len()];
            row.error = Some(msg);
        }
        Err(e) => {
            row.suppression_db = vec![Cell::Fail; suite.checkpoints.len()];
            row.error = Some(e.to_string());
        }
    }
    (row, start.elapsed().as_secs_f64())
}

pub fn thread_limit() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::config(
                THREADS_ENV,
                format!("expected a positive integer, got `{v}`"),
            )),
        },
    }
}

#[cfg(feature = "parallel")]
fn run_cells(suite: &SuiteFile, ds: &Dataset, threads: Option<usize>) -> Result<Vec<(Row, f64)>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config(THREADS_ENV, e.to_string()))?;
    Ok(pool.install(|| {
        suite
            .cells
            .par_iter()
            .map(|&c| run_cell(suite, ds, c))
            .collect()
    }))
}

#[cfg(not(feature = "parallel"))]
fn run_cells(suite: &SuiteFile, ds: &Dataset, _threads: Option<usize>) -> Result<Vec<(Row, f64)>> {
    Ok(suite
        .cells
        .iter()
        .map(|&c| run_cell(suite, ds, c))
        .collect())
}

pub fn render_table(report: &BenchReport) -> String {
    let mut header = vec!["model".to_string(), "optimizer".to_string()];
    header.extend(report.checkpoints.iter().map(usize::to_string));
    let mut lines = vec![header];
    for r in &report.rows {
        let mut line = vec![
            serde_json::to_value(r.model)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
            r.optimizer.to_string(),
        ];
        line.extend(r.suppression_db.iter().map(Cell::to_string));
        lines.push(line);
    }
    let widths: Vec<usize> = (0..lines[0].len())
        .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (s, w))| {
                if i < 2 {
                    format!("{s:<w$}")
                } else {
                    format!("{s:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

/// Runs every cell and writes `bench.json`, `bench.txt` and
/// `bench_timing.json` when an output directory is given.
pub fn run(args: BenchArgs<'_>) -> Result<BenchReport> {
    let threads = thread_limit()?;
    let suite: SuiteFile = load_toml(args.config)?;
    let suite = suite.resolve(args.seed, args.checkpoints)?;
    let tx = gen_ofdm(&suite.ofdm)?;
    let ds = imd2_chain(&tx, &suite.chain)?;

    let results = run_cells(&suite, &ds, threads)?;
    let timing: Vec<Timing> = results
        .iter()
        .map(|(r, t)| Timing {
            model: r.model,
            optimizer: r.optimizer,
            wall_time_s: *t,
        })
        .collect();
    let report = BenchReport {
        config_hash: config_hash(&suite),
        dataset: DatasetSummary {
            rows: ds.len(),
            sample_rate_hz: ds.sample_rate_hz(),
        },
        checkpoints: suite.checkpoints.clone(),
        rows: results.into_iter().map(|(r, _)| r).collect(),
        suite,
    };
    let table = render_table(&report);
    print!("{table}");
    if args.verbose {
        for (r, t) in report.rows.iter().zip(&timing) {
            if let Some(e) = &r.error {
                eprintln!("{:?}/{}: {e}", r.model, r.optimizer);
            }
            eprintln!("{:?}/{}: {:.2} s", t.model, t.optimizer, t.wall_time_s);
        }
    }
    if let Some(out) = args.out {
        create_dir(out)?;
        write(
            &out.join("bench.json"),
            serde_json::to_string_pretty(&report).map_err(CoreError::from)? + "\n",
        )?;
        write(&out.join("bench.txt"), &table)?;
        write(
            &out.join("bench_timing.json"),
            serde_json::to_string_pretty(&timing).map_err(CoreError::from)? + "\n",
        )?;
    }
    Ok(report)
}
