//! Fitting a canceller to a dataset with one of the three optimizers.
//!
//! One iteration is one full-batch step. History records are taken after
//! each iteration (every `log_every`); LS records a single entry at
//! iteration 1.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cheb::ChebyshevModel;
use crate::error::{Error, Result};
use crate::matrix::norm;
use crate::model::{Model, ModelKind, Objective};
use crate::nn::{Activation, NnModel, NnShape};
use crate::optim::{
    ls_solve, AdamHyper, AdamState, HistoryRecord, LbfgsState, LbfgsStep, LossProblem, TrainHistory,
};
use crate::signal::{Dataset, DelaySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ls,
    Adam,
    Lbfgs,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ls => "ls",
            Self::Adam => "adam",
            Self::Lbfgs => "lbfgs",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ls" => Ok(Self::Ls),
            "adam" => Ok(Self::Adam),
            "lbfgs" | "l-bfgs" => Ok(Self::Lbfgs),
            other => Err(Error::InvalidArgument(format!(
                "unknown optimizer `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub method: Method,
    pub max_iters: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub lbfgs_memory: usize,
    /// Stop once the gradient norm falls to this value.
    pub grad_tol: f64,
    pub log_every: usize,
    /// NN weight initialization seed.
    pub seed: u64,
    /// Ridge term for LS.
    pub lambda: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let adam = AdamHyper::default();
        Self {
            method: Method::Lbfgs,
            max_iters: 20_000,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            lbfgs_memory: 100,
            grad_tol: 1e-12,
            log_every: 1,
            seed: 0,
            lambda: 1e-6,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |field: &str, msg: &str| Error::Config {
            field: field.into(),
            msg: msg.into(),
        };
        if self.log_every == 0 {
            return Err(cfg_err("log_every", "must be positive"));
        }
        if self.lbfgs_memory == 0 {
            return Err(cfg_err("lbfgs_memory", "must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(cfg_err("lr", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(cfg_err("beta1", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(cfg_err("beta2", "must lie in [0, 1)"));
        }
        if !(self.eps > 0.0) {
            return Err(cfg_err("eps", "must be positive"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(cfg_err("lambda", "must be >= 0"));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(cfg_err("grad_tol", "must be >= 0"));
        }
        Ok(())
    }

    fn adam_hyper(&self) -> AdamHyper {
        AdamHyper {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }
}

/// Model architecture. `order` applies to Chebyshev; `widths` and
/// `activation` to the NN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub delays: Vec<usize>,
    pub order: usize,
    pub widths: Vec<usize>,
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::chebyshev()
    }
}

impl ModelConfig {
    /// Three contiguous taps, order 8: 24 coefficients.
    pub fn chebyshev() -> Self {
        Self {
            kind: ModelKind::Chebyshev,
            delays: vec![0, 1, 2],
            order: 8,
            widths: vec![3, 2, 1],
            activation: Activation::Tanh,
        }
    }

    /// Three contiguous taps, widths 3-2-1: 17 weights.
    pub fn nn() -> Self {
        Self {
            kind: ModelKind::Nn,
            ..Self::chebyshev()
        }
    }

    /// Initial model: zero coefficients for Chebyshev, seeded Glorot weights
    /// for the NN. `input_scale` is replaced during training.
    pub fn build(&self, seed: u64) -> Result<Model> {
        let delays = DelaySet::new(self.delays.clone()).map_err(|e| Error::Config {
            field: "delays".into(),
            msg: e.to_string(),
        })?;
        Ok(match self.kind {
            ModelKind::Chebyshev => Model::Chebyshev(ChebyshevModel::new(delays, self.order, 1.0)?),
            ModelKind::Nn => Model::Nn(NnModel::init_weights(
                NnShape {
                    delays,
                    widths: self.widths.clone(),
                    activation: self.activation,
                },
                1.0,
                seed,
            )?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Solved,
    MaxIters,
    GradTol,
    /// L-BFGS line search failed along steepest descent.
    Stuck,
    /// Loss became non-finite; the model holds the last finite iterate.
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: TrainHistory,
    pub stop: StopReason,
    pub evals: usize,
}

impl TrainOutcome {
    /// Suppression (negated NMSE, dB) after `iter` iterations.
    pub fn suppression_at(&self, iter: usize) -> Option<f64> {
        self.history.at(iter).map(|r| -r.nmse_db)
    }
}

/// Normalized delay embedding and aligned target for `model`'s taps.
pub fn prepare(model: &Model, dataset: &Dataset, scale: f64) -> Result<Objective> {
    let mut ds = dataset.scaled(scale)?;
    let (embedded, target) = ds.aligned(&model.delays())?;
    Objective::new(model, &embedded, target)
}

/// Aligned Rx samples and the model's prediction of them, using the input
/// scale stored in the model.
pub fn predict_aligned(model: &Model, dataset: &Dataset) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut ds = dataset.scaled(model.input_scale())?;
    let (embedded, target) = ds.aligned(&model.delays())?;
    let target = target.to_vec();
    let prediction = model.predict(&embedded)?;
    Ok((target, prediction))
}

struct Recorder {
    start: Instant,
    log_every: usize,
    history: TrainHistory,
}

impl Recorder {
    fn record(&mut self, obj: &Objective, iter: usize, loss: f64, force: bool) {
        if force || iter.is_multiple_of(self.log_every) {
            if self.history.last().is_some_and(|r| r.iter >= iter) {
                return;
            }
            self.history.push(HistoryRecord {
                iter,
                loss,
                nmse_db: obj.nmse_db(loss),
                wall_time: self.start.elapsed().as_secs_f64(),
            });
        }
    }
}

/// Fits `model` to `dataset`. The Tx signal is normalized by its peak
/// magnitude and that scale is stored in the returned model.
pub fn train(model: &Model, dataset: &Dataset, cfg: &OptimizerConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if cfg.method == Method::Ls && model.kind() == ModelKind::Nn {
        return Err(Error::Unsupported(
            "least squares needs a model that is linear in its parameters; use adam or lbfgs for nn"
                .into(),
        ));
    }
    let (_, scale) = dataset.normalized()?;
    let mut model = model.clone();
    model.set_input_scale(scale);
    let obj = prepare(&model, dataset, scale)?;
    let mut rec = Recorder {
        start: Instant::now(),
        log_every: cfg.log_every,
        history: TrainHistory::new(),
    };
    let mut theta = model.params();
    let (stop, evals) = match cfg.method {
        Method::Ls => {
            theta = ls_solve(obj.inputs(), obj.target(), cfg.lambda)?;
            let (loss, _) = obj.eval(&theta);
            rec.record(&obj, 1, loss, true);
            (StopReason::Solved, 1)
        }
        Method::Adam => run_adam(&obj, cfg, &mut theta, &mut rec),
        Method::Lbfgs => run_lbfgs(&obj, cfg, &mut theta, &mut rec)?,
    };
    model.set_params(&theta)?;
    Ok(TrainOutcome {
        model,
        history: rec.history,
        stop,
        evals,
    })
}

fn run_adam(
    obj: &Objective,
    cfg: &OptimizerConfig,
    theta: &mut Vec<f64>,
    rec: &mut Recorder,
) -> (StopReason, usize) {
    let mut state = AdamState::new(theta.len(), cfg.adam_hyper());
    let mut last_good = theta.clone();
    let mut evals = 0;
    for k in 0..=cfg.max_iters {
        let (loss, grad) = obj.eval(theta);
        evals += 1;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            *theta = last_good;
            return (StopReason::NonFinite, evals);
        }
        if k > 0 {
            rec.record(obj, k, loss, k == cfg.max_iters);
        }
        if norm(&grad) <= cfg.grad_tol {
            if k > 0 {
                rec.record(obj, k, loss, true);
            }
            return (StopReason::GradTol, evals);
        }
        if k == cfg.max_iters {
            break;
        }
        last_good.clone_from(theta);
        state.step(theta, &grad);
    }
    (StopReason::MaxIters, evals)
}

fn run_lbfgs(
    obj: &Objective,
    cfg: &OptimizerConfig,
    theta: &mut Vec<f64>,
    rec: &mut Recorder,
) -> Result<(StopReason, usize)> {
    let mut state = LbfgsState::new(cfg.lbfgs_memory);
    let mut last = None;
    for k in 1..=cfg.max_iters {
        let outcome = match state.step(obj, theta) {
            Ok(o) => o,
            Err(Error::NonFinite { .. }) => return Ok((StopReason::NonFinite, state.evals())),
            Err(e) => return Err(e),
        };
        match outcome {
            LbfgsStep::Accepted { loss, .. } => {
                rec.record(obj, k, loss, k == cfg.max_iters);
                last = Some((k, loss));
                let (_, g) = state.current().expect("evaluated");
                if norm(g) <= cfg.grad_tol {
                    rec.record(obj, k, loss, true);
                    return Ok((StopReason::GradTol, state.evals()));
                }
            }
            LbfgsStep::Converged | LbfgsStep::Stuck => {
                if let Some((k, loss)) = last {
                    rec.record(obj, k, loss, true);
                }
                let reason = if outcome == LbfgsStep::Converged {
                    StopReason::GradTol
                } else {
                    StopReason::Stuck
                };
                return Ok((reason, state.evals()));
            }
        }
    }
    Ok((StopReason::MaxIters, state.evals()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{gen_ofdm, imd2_chain, ChainConfig, OfdmConfig};

    fn dataset(noise: Option<f64>) -> Dataset {
        let tx = gen_ofdm(&OfdmConfig {
            n_symbols: 20,
            ..OfdmConfig::default()
        })
        .unwrap();
        imd2_chain(
            &tx,
            &ChainConfig {
                noise_floor_db: noise,
                ..ChainConfig::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn nn_with_ls_is_unsupported() {
        let model = ModelConfig::nn().build(0).unwrap();
        let cfg = OptimizerConfig {
            method: Method::Ls,
            ..OptimizerConfig::default()
        };
        assert!(matches!(
            train(&model, &dataset(None), &cfg),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn adam_history_length() {
        let model = ModelConfig::chebyshev().build(0).unwrap();
        let cfg = OptimizerConfig {
            method: Method::Adam,
            max_iters: 50,
            grad_tol: 0.0,
            ..OptimizerConfig::default()
        };
        let out = train(&model, &dataset(Some(-20.0)), &cfg).unwrap();
        assert_eq!(out.history.len(), 50);
        assert_eq!(out.stop, StopReason::MaxIters);
        assert_eq!(out.history.records()[0].iter, 1);
    }

    #[test]
    fn ls_stores_scale_and_single_record() {
        let ds = dataset(Some(-20.0));
        let model = ModelConfig::chebyshev().build(0).unwrap();
        let cfg = OptimizerConfig {
            method: Method::Ls,
            ..OptimizerConfig::default()
        };
        let out = train(&model, &ds, &cfg).unwrap();
        assert_eq!(out.history.len(), 1);
        assert_eq!(out.model.input_scale(), ds.tx().max_magnitude());
        assert_eq!(out.suppression_at(1000), out.suppression_at(20000));
    }

    #[test]
    fn log_every_thins_history() {
        let model = ModelConfig::chebyshev().build(0).unwrap();
        let cfg = OptimizerConfig {
            method: Method::Adam,
            max_iters: 25,
            log_every: 10,
            grad_tol: 0.0,
            ..OptimizerConfig::default()
        };
        let out = train(&model, &dataset(Some(-20.0)), &cfg).unwrap();
        let iters: Vec<usize> = out.history.records().iter().map(|r| r.iter).collect();
        assert_eq!(iters, vec![10, 20, 25]);
    }

    #[test]
    fn config_validation() {
        let bad = OptimizerConfig {
            log_every: 0,
            ..OptimizerConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config { .. })));
        assert_eq!("l-bfgs".parse::<Method>().unwrap(), Method::Lbfgs);
    }
}
