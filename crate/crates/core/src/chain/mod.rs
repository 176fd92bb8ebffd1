//! Baseband-equivalent FDD leakage chain that synthesizes (Tx, Rx) datasets
//! with known IMD2 content.
//!
//! Tx -> Rapp PA -> duplexer stopband attenuation -> LNA gain -> second-order
//! mixer product `imd2_coeff * (fir * |x_leak|^2)` -> DC removal -> AWGN at a
//! fixed level below the IMD2 AC power. Carrier frequencies never enter the
//! math.

mod ofdm;
mod pa;

pub use ofdm::{gen_ofdm, OfdmConfig};
pub use pa::{dbm_to_amplitude, pa_model, rapp, rapp_saturation, RAPP_SMOOTHNESS};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ComplexSequence, Dataset, RealSequence};

/// Leakage-chain parameters. Powers are dBm with `|x|^2` in mW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    /// Mean Tx power at the PA input.
    pub pa_input_dbm: f64,
    pub pa_gain_db: f64,
    /// Output-referred 1 dB compression point.
    pub pa_p1db_dbm: f64,
    /// Bypass the Rapp compression (ideal linear gain).
    pub pa_linear: bool,
    pub duplexer_attenuation_db: f64,
    pub lna_gain_db: f64,
    pub imd2_coeff: f64,
    /// FIR applied to `|x_leak|^2`; normalized to unit sum.
    pub memory_fir: Vec<f64>,
    /// Noise power relative to the IMD2 AC power; `None` for noiseless.
    /// Config files may write `"none"` since TOML has no null.
    #[serde(deserialize_with = "noise_floor")]
    pub noise_floor_db: Option<f64>,
    pub seed: u64,
    /// Report metadata only.
    pub tx_carrier_hz: f64,
    pub rx_carrier_hz: f64,
}

fn noise_floor<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Level {
        Db(f64),
        Word(String),
    }
    match Option::<Level>::deserialize(d)? {
        None => Ok(None),
        Some(Level::Db(v)) => Ok(Some(v)),
        Some(Level::Word(w)) if w == "none" => Ok(None),
        Some(Level::Word(w)) => Err(serde::de::Error::custom(format!(
            "expected a dB value or \"none\", got \"{w}\""
        ))),
    }
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            pa_input_dbm: -18.0,
            pa_gain_db: 26.0,
            pa_p1db_dbm: 24.0,
            pa_linear: false,
            duplexer_attenuation_db: 30.0,
            lna_gain_db: 26.0,
            imd2_coeff: 1.0,
            memory_fir: vec![0.8, 0.15, 0.05],
            noise_floor_db: Some(-24.0),
            seed: 7,
            tx_carrier_hz: 814e6,
            rx_carrier_hz: 859e6,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |field: &str, msg: &str| Error::Config {
            field: field.into(),
            msg: msg.into(),
        };
        for (name, v) in [
            ("pa_input_dbm", self.pa_input_dbm),
            ("pa_gain_db", self.pa_gain_db),
            ("pa_p1db_dbm", self.pa_p1db_dbm),
            ("duplexer_attenuation_db", self.duplexer_attenuation_db),
            ("lna_gain_db", self.lna_gain_db),
            ("imd2_coeff", self.imd2_coeff),
        ] {
            if !v.is_finite() {
                return Err(cfg_err(name, "must be finite"));
            }
        }
        if self.imd2_coeff == 0.0 {
            return Err(cfg_err("imd2_coeff", "must be nonzero"));
        }
        if self.memory_fir.is_empty() {
            return Err(cfg_err("memory_fir", "must have at least one tap"));
        }
        if self.memory_fir.iter().any(|t| !t.is_finite()) {
            return Err(cfg_err("memory_fir", "taps must be finite"));
        }
        if self.memory_fir.iter().sum::<f64>() == 0.0 {
            return Err(cfg_err("memory_fir", "taps must not sum to zero"));
        }
        if let Some(n) = self.noise_floor_db {
            if !n.is_finite() {
                return Err(cfg_err("noise_floor_db", "must be finite"));
            }
        }
        Ok(())
    }

    pub fn normalized_fir(&self) -> Vec<f64> {
        let sum: f64 = self.memory_fir.iter().sum();
        self.memory_fir.iter().map(|t| t / sum).collect()
    }

    /// Leakage power at the mixer input for a given PA output power.
    pub fn leakage_dbm(&self, p_tx_dbm: f64) -> f64 {
        power_budget(p_tx_dbm, self.duplexer_attenuation_db, self.lna_gain_db)
    }
}

/// `p_tx - duplexer attenuation + LNA gain`.
pub fn power_budget(p_tx_dbm: f64, duplexer_attenuation_db: f64, lna_gain_db: f64) -> f64 {
    p_tx_dbm - duplexer_attenuation_db + lna_gain_db
}

/// Intermediate signals of one chain run.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub dataset: Dataset,
    /// Noiseless, DC-free IMD2 component of Rx.
    pub imd2: Vec<f64>,
    pub noise: Vec<f64>,
}

/// Runs the chain on baseband `tx` (scaled so its mean power equals
/// `pa_input_dbm`). The returned dataset pairs the unscaled `tx` with Rx.
pub fn imd2_chain(tx: &ComplexSequence, cfg: &ChainConfig) -> Result<Dataset> {
    Ok(imd2_chain_detailed(tx, cfg)?.dataset)
}

pub fn imd2_chain_detailed(tx: &ComplexSequence, cfg: &ChainConfig) -> Result<ChainOutput> {
    cfg.validate()?;
    let mean_power = tx.mean_power();
    if mean_power == 0.0 {
        return Err(Error::DegenerateInput("all-zero tx".into()));
    }
    let drive = dbm_to_amplitude(cfg.pa_input_dbm) / mean_power.sqrt();
    let driven = ComplexSequence::new(
        tx.samples().iter().map(|z| z * drive).collect(),
        tx.sample_rate_hz(),
    )?;
    let pa_out = if cfg.pa_linear {
        let g = pa::db_to_amplitude_gain(cfg.pa_gain_db);
        driven.samples().iter().map(|z| z * g).collect::<Vec<_>>()
    } else {
        pa_model(&driven, cfg.pa_gain_db, cfg.pa_p1db_dbm)
            .samples()
            .to_vec()
    };
    let leak_gain = pa::db_to_amplitude_gain(cfg.lna_gain_db - cfg.duplexer_attenuation_db);
    let envelope: Vec<f64> = pa_out.iter().map(|z| (z * leak_gain).norm_sqr()).collect();

    let fir = cfg.normalized_fir();
    let mut imd2: Vec<f64> = (0..envelope.len())
        .map(|n| {
            fir.iter()
                .enumerate()
                .take(n + 1)
                .map(|(j, h)| h * envelope[n - j])
                .sum::<f64>()
                * cfg.imd2_coeff
        })
        .collect();
    let dc = imd2.iter().sum::<f64>() / imd2.len() as f64;
    imd2.iter_mut().for_each(|v| *v -= dc);

    let ac_power = imd2.iter().map(|v| v * v).sum::<f64>() / imd2.len() as f64;
    let noise: Vec<f64> = match cfg.noise_floor_db {
        Some(db) => {
            let sigma = (ac_power * 10f64.powf(db / 10.0)).sqrt();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..imd2.len())
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sigma * z
                })
                .collect::<Vec<f64>>()
        }
        None => vec![0.0; imd2.len()],
    };
    let rx: Vec<f64> = imd2.iter().zip(&noise).map(|(a, b)| a + b).collect();
    let rx = RealSequence::new(rx, tx.sample_rate_hz())?;
    Ok(ChainOutput {
        dataset: Dataset::new(tx.clone(), rx)?,
        imd2,
        noise,
    })
}
