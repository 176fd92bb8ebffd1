use imd2_core::metrics::ser_db;
use imd2_core::model::ModelKind;
use imd2_core::train::{Method, OptimizerConfig, StopReason};
use serde::{Serialize, Serializer};

/// A dB value that serializes infinities as strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Db(pub f64);

impl Serialize for Db {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ser_db(&self.0, s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub model: String,
    pub model_kind: ModelKind,
    pub param_count: usize,
    pub optimizer: Method,
    pub optimizer_config: OptimizerConfig,
    pub checkpoints: Vec<usize>,
    pub suppression_db: Vec<Db>,
    pub final_suppression_db: Db,
    pub iterations: usize,
    pub evals: usize,
    pub stop_reason: StopReason,
    pub wall_time_s: f64,
    pub seed: u64,
    pub config_hash: String,
}
