//! TOML configuration files, seed derivation and config hashing.

use std::path::Path;

use imd2_core::chain::{ChainConfig, OfdmConfig};
use imd2_core::model::ModelKind;
use imd2_core::nn::Activation;
use imd2_core::train::{Method, ModelConfig, OptimizerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{read_to_string, CliError, Result};

pub const DEFAULT_CHECKPOINTS: [usize; 5] = [1000, 2000, 5000, 10000, 20000];

pub fn load_toml<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    toml::from_str(&read_to_string(path)?).map_err(|source| CliError::Toml {
        path: path.to_owned(),
        source,
    })
}

/// Hex SHA-256 of the compact JSON encoding.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(json))
}

/// Independent seeds for the waveform, the noise and weight init, all
/// drawn from one user-facing seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub ofdm: u64,
    pub noise: u64,
    pub init: u64,
}

impl Seeds {
    pub fn derive(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            ofdm: rng.gen(),
            noise: rng.gen(),
            init: rng.gen(),
        }
    }
}

pub fn checkpoints(list: Vec<usize>) -> Result<Vec<usize>> {
    let mut list = list;
    if list.is_empty() {
        return Err(CliError::config("checkpoints", "must not be empty"));
    }
    if list.contains(&0) {
        return Err(CliError::config("checkpoints", "iterations start at 1"));
    }
    list.sort_unstable();
    list.dedup();
    Ok(list)
}

/// `chain.toml`: `[chain]` and `[ofdm]` tables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainFile {
    pub chain: ChainConfig,
    pub ofdm: OfdmConfig,
}

impl ChainFile {
    pub fn reseed(&mut self, seed: u64) {
        let s = Seeds::derive(seed);
        self.ofdm.seed = s.ofdm;
        self.chain.seed = s.noise;
    }
}

/// Model architecture without the kind, which comes from the command line
/// or the bench cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Architecture {
    pub delays: Vec<usize>,
    pub order: usize,
    pub widths: Vec<usize>,
    pub activation: Activation,
}

impl Default for Architecture {
    fn default() -> Self {
        let m = ModelConfig::default();
        Self {
            delays: m.delays,
            order: m.order,
            widths: m.widths,
            activation: m.activation,
        }
    }
}

impl Architecture {
    pub fn model_config(&self, kind: ModelKind) -> ModelConfig {
        ModelConfig {
            kind,
            delays: self.delays.clone(),
            order: self.order,
            widths: self.widths.clone(),
            activation: self.activation,
        }
    }
}

/// `train --config`: `[model]` and `[optimizer]` tables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainFile {
    pub model: Architecture,
    pub optimizer: OptimizerConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub model: ModelKind,
    pub optimizer: Method,
}

/// Benchmark suite. The `seed` fields inside `[chain]`, `[ofdm]` and
/// `[optimizer]` are replaced by seeds derived from the top-level `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteFile {
    pub seed: u64,
    pub checkpoints: Vec<usize>,
    pub chain: ChainConfig,
    pub ofdm: OfdmConfig,
    pub model: Architecture,
    /// Shared hyperparameters; `method` and `max_iters` are set per cell.
    pub optimizer: OptimizerConfig,
    pub cells: Vec<CellSpec>,
}

impl Default for SuiteFile {
    fn default() -> Self {
        let cells = [ModelKind::Chebyshev, ModelKind::Nn]
            .into_iter()
            .flat_map(|model| {
                [Method::Ls, Method::Adam, Method::Lbfgs]
                    .into_iter()
                    .map(move |optimizer| CellSpec { model, optimizer })
            })
            .collect();
        Self {
            seed: 2,
            checkpoints: DEFAULT_CHECKPOINTS.to_vec(),
            chain: ChainConfig {
                memory_fir: vec![1.0],
                noise_floor_db: Some(-24.0),
                ..ChainConfig::default()
            },
            ofdm: OfdmConfig::default(),
            model: Architecture::default(),
            optimizer: OptimizerConfig::default(),
            cells,
        }
    }
}

impl SuiteFile {
    /// Applies command-line overrides and derived seeds.
    pub fn resolve(
        mut self,
        seed: Option<u64>,
        checkpoints_override: Option<Vec<usize>>,
    ) -> Result<Self> {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        if let Some(c) = checkpoints_override {
            self.checkpoints = c;
        }
        self.checkpoints = checkpoints(self.checkpoints)?;
        if self.cells.is_empty() {
            return Err(CliError::config("cells", "suite has no cells"));
        }
        let s = Seeds::derive(self.seed);
        self.ofdm.seed = s.ofdm;
        self.chain.seed = s.noise;
        self.optimizer.seed = s.init;
        self.optimizer.max_iters = *self.checkpoints.last().expect("non-empty");
        self.chain.validate()?;
        self.ofdm.validate()?;
        self.optimizer.validate()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_has_six_cells() {
        let s = SuiteFile::default();
        assert_eq!(s.cells.len(), 6);
        assert_eq!(s.checkpoints, DEFAULT_CHECKPOINTS);
    }

    #[test]
    fn suite_parses_partial_toml() {
        let s: SuiteFile = toml::from_str(
            "seed = 5\ncheckpoints = [20, 10]\n[chain]\nnoise_floor_db = -30.0\n\
             [[cells]]\nmodel = \"nn\"\noptimizer = \"adam\"\n",
        )
        .unwrap();
        let s = s.resolve(None, None).unwrap();
        assert_eq!(s.checkpoints, vec![10, 20]);
        assert_eq!(s.optimizer.max_iters, 20);
        assert_eq!(s.chain.noise_floor_db, Some(-30.0));
        assert_eq!(s.cells.len(), 1);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(toml::from_str::<ChainFile>("[chain]\nbogus = 1\n").is_err());
        assert!(toml::from_str::<TrainFile>("[optimizer]\nlearning_rate = 1\n").is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = SuiteFile::default();
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
        let b = SuiteFile {
            seed: a.seed + 1,
            ..a.clone()
        };
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn seeds_differ_per_stream() {
        let s = Seeds::derive(1);
        assert_ne!(s.ofdm, s.noise);
        assert_eq!(s, Seeds::derive(1));
    }

    #[test]
    fn checkpoint_validation() {
        assert!(checkpoints(vec![]).is_err());
        assert!(checkpoints(vec![0, 5]).is_err());
        assert_eq!(checkpoints(vec![5, 1, 5]).unwrap(), vec![1, 5]);
    }
}
