use std::path::{Path, PathBuf};

use imd2_core::chain::{gen_ofdm, imd2_chain};
use imd2_core::signal::{save_dataset, DatasetFormat};

use crate::config::{config_hash, load_toml, ChainFile};
use crate::data::{sidecar_path, Sidecar};
use crate::error::{create_dir, write, Result};

pub struct GenerateArgs<'a> {
    pub config: Option<&'a Path>,
    pub seed: Option<u64>,
    pub out: &'a Path,
    pub format: DatasetFormat,
    pub verbose: bool,
}

/// Writes the dataset and its sidecar; returns the dataset path.
pub fn run(args: GenerateArgs<'_>) -> Result<PathBuf> {
    let mut cfg: ChainFile = load_toml(args.config)?;
    if let Some(seed) = args.seed {
        cfg.reseed(seed);
    }
    cfg.ofdm.validate()?;
    cfg.chain.validate()?;
    let tx = gen_ofdm(&cfg.ofdm)?;
    let ds = imd2_chain(&tx, &cfg.chain)?;

    create_dir(args.out)?;
    let name = match args.format {
        DatasetFormat::Csv => "dataset.csv",
        DatasetFormat::Binary => "dataset.bin",
    };
    let path = args.out.join(name);
    save_dataset(&ds, &path, args.format)?;
    let sidecar = Sidecar {
        config_hash: config_hash(&cfg),
        config: cfg,
        sample_rate_hz: ds.sample_rate_hz(),
        rows: ds.len(),
    };
    write(
        &sidecar_path(&path),
        serde_json::to_string_pretty(&sidecar).map_err(imd2_core::Error::from)? + "\n",
    )?;
    if args.verbose {
        eprintln!("wrote {} rows to {}", ds.len(), path.display());
    }
    Ok(path)
}
