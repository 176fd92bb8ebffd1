//! Dataset files plus the JSON sidecar that records how they were made.

use std::path::{Path, PathBuf};

use imd2_core::signal::Dataset;
use imd2_core::signal::{load_dataset, DatasetFormat};
use serde::{Deserialize, Serialize};

use crate::config::ChainFile;
use crate::error::{read_to_string, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    #[serde(flatten)]
    pub config: ChainFile,
    pub sample_rate_hz: f64,
    pub rows: usize,
    pub config_hash: String,
}

pub fn sidecar_path(dataset: &Path) -> PathBuf {
    dataset.with_extension("json")
}

/// Loads a dataset and, when a sidecar sits next to it, its sample rate.
pub fn load(path: &Path) -> Result<(Dataset, Option<Sidecar>)> {
    let ds = load_dataset(path, DatasetFormat::from_path(path))?;
    let side = sidecar_path(path);
    if !side.exists() {
        return Ok((ds, None));
    }
    let sidecar: Sidecar =
        serde_json::from_str(&read_to_string(&side)?).map_err(imd2_core::Error::from)?;
    let ds = ds.with_sample_rate(sidecar.sample_rate_hz)?;
    Ok((ds, Some(sidecar)))
}
