use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use imd2_core::model::ModelKind;
use imd2_core::train::{train, Method, StopReason};
use imd2_core::Error as CoreError;
use serde::Serialize;

use crate::config::{
    checkpoints, config_hash, load_toml, Architecture, TrainFile, DEFAULT_CHECKPOINTS,
};
use crate::data;
use crate::error::{create_dir, write, Result};
use crate::report::{Db, RunReport};

pub struct TrainArgs<'a> {
    pub kind: ModelKind,
    pub optimizer: Option<Method>,
    pub data: &'a Path,
    pub config: Option<&'a Path>,
    pub seed: Option<u64>,
    pub out: &'a Path,
    pub checkpoints: Option<Vec<usize>>,
    pub verbose: bool,
}

#[derive(Serialize)]
struct Hashed<'a> {
    kind: ModelKind,
    model: &'a Architecture,
    optimizer: &'a imd2_core::train::OptimizerConfig,
    checkpoints: &'a [usize],
}

/// Fits a model and writes `model.json`, `report.json` and `history.csv`.
/// With `--checkpoints` the run lasts until the last checkpoint; otherwise
/// `max_iters` from the config applies.
pub fn run(args: TrainArgs<'_>) -> Result<RunReport> {
    let mut file: TrainFile = load_toml(args.config)?;
    if let Some(m) = args.optimizer {
        file.optimizer.method = m;
    }
    if let Some(seed) = args.seed {
        file.optimizer.seed = seed;
    }
    let explicit = args.checkpoints.is_some();
    let checkpoints = checkpoints(
        args.checkpoints
            .unwrap_or_else(|| DEFAULT_CHECKPOINTS.to_vec()),
    )?;
    if explicit {
        file.optimizer.max_iters = *checkpoints.last().expect("non-empty");
    }
    file.optimizer.validate()?;
    if file.optimizer.method == Method::Ls && args.kind == ModelKind::Nn {
        return Err(CoreError::Unsupported(
            "nn cannot be fitted by least squares (N/A); use adam or lbfgs".into(),
        )
        .into());
    }
    let hash = config_hash(&Hashed {
        kind: args.kind,
        model: &file.model,
        optimizer: &file.optimizer,
        checkpoints: &checkpoints,
    });

    let (dataset, _) = data::load(args.data)?;
    let model = file
        .model
        .model_config(args.kind)
        .build(file.optimizer.seed)?;
    let start = Instant::now();
    let outcome = train(&model, &dataset, &file.optimizer)?;
    let wall_time_s = start.elapsed().as_secs_f64();

    let last = outcome
        .history
        .last()
        .expect("training records at least once");
    let report = RunReport {
        model: outcome.model.describe(),
        model_kind: args.kind,
        param_count: outcome.model.param_count(),
        optimizer: file.optimizer.method,
        optimizer_config: file.optimizer.clone(),
        suppression_db: checkpoints
            .iter()
            .map(|&c| Db(outcome.suppression_at(c).unwrap_or(f64::NAN)))
            .collect(),
        checkpoints,
        final_suppression_db: Db(-last.nmse_db),
        iterations: last.iter,
        evals: outcome.evals,
        stop_reason: outcome.stop,
        wall_time_s,
        seed: file.optimizer.seed,
        config_hash: hash,
    };

    create_dir(args.out)?;
    write(
        &args.out.join("model.json"),
        outcome.model.to_json()? + "\n",
    )?;
    write(
        &args.out.join("report.json"),
        serde_json::to_string_pretty(&report).map_err(CoreError::from)? + "\n",
    )?;
    let mut csv = String::from("iter,loss,nmse_db,wall_time_s\n");
    for r in outcome.history.records() {
        let _ = writeln!(csv, "{},{},{},{}", r.iter, r.loss, r.nmse_db, r.wall_time);
    }
    write(&args.out.join("history.csv"), csv)?;

    if args.verbose {
        eprintln!(
            "{} + {}: {} iterations, {:?}, final suppression {:.2} dB",
            report.model,
            report.optimizer,
            report.iterations,
            report.stop_reason,
            report.final_suppression_db.0
        );
    }
    if outcome.stop == StopReason::NonFinite {
        return Err(CoreError::NonFinite {
            iter: last.iter + 1,
        }
        .into());
    }
    Ok(report)
}
