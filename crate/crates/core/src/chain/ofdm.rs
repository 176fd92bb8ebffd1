use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::ComplexSequence;

/// QPSK-loaded CP-OFDM waveform parameters. The sample rate equals
/// `bandwidth_hz`, one sample per subcarrier spacing times `n_subcarriers`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfdmConfig {
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    pub cp_len: usize,
    pub bandwidth_hz: f64,
    pub seed: u64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            n_subcarriers: 64,
            n_symbols: 160,
            cp_len: 16,
            bandwidth_hz: 5e6,
            seed: 1,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |field: &str, msg: String| Error::Config {
            field: field.into(),
            msg,
        };
        if self.n_subcarriers == 0 || !self.n_subcarriers.is_power_of_two() {
            return Err(cfg_err(
                "n_subcarriers",
                format!("must be a power of two, got {}", self.n_subcarriers),
            ));
        }
        if self.cp_len >= self.n_subcarriers {
            return Err(cfg_err(
                "cp_len",
                format!(
                    "must be smaller than n_subcarriers ({} >= {})",
                    self.cp_len, self.n_subcarriers
                ),
            ));
        }
        if self.n_symbols == 0 {
            return Err(cfg_err("n_symbols", "must be positive".into()));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(cfg_err("bandwidth_hz", "must be positive".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_symbols * (self.n_subcarriers + self.cp_len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Unit-power QPSK on every subcarrier, unitary inverse DFT per symbol,
/// cyclic prefix prepended. Mean sample power is 1.
pub fn gen_ofdm(cfg: &OfdmConfig) -> Result<ComplexSequence> {
    cfg.validate()?;
    let n = cfg.n_subcarriers;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let norm = 1.0 / (n as f64).sqrt();
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(cfg.len());
    let mut sym = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..cfg.n_symbols {
        for s in &mut sym {
            let re = if rng.gen::<bool>() { amp } else { -amp };
            let im = if rng.gen::<bool>() { amp } else { -amp };
            *s = Complex64::new(re, im);
        }
        ifft.process(&mut sym);
        sym.iter_mut().for_each(|z| *z *= norm);
        out.extend_from_slice(&sym[n - cfg.cp_len..]);
        out.extend_from_slice(&sym);
    }
    ComplexSequence::new(out, cfg.bandwidth_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_and_determinism() {
        let cfg = OfdmConfig {
            n_symbols: 1,
            ..OfdmConfig::default()
        };
        assert_eq!(gen_ofdm(&cfg).unwrap().len(), 80);
        let cfg = OfdmConfig::default();
        assert_eq!(gen_ofdm(&cfg).unwrap(), gen_ofdm(&cfg).unwrap());
        let other = OfdmConfig {
            seed: 2,
            ..cfg.clone()
        };
        assert_ne!(gen_ofdm(&cfg).unwrap(), gen_ofdm(&other).unwrap());
    }

    #[test]
    fn cyclic_prefix_copies_symbol_tail() {
        let cfg = OfdmConfig {
            n_symbols: 2,
            ..OfdmConfig::default()
        };
        let x = gen_ofdm(&cfg).unwrap();
        let s = x.samples();
        for sym in 0..2 {
            let base = sym * 80;
            assert_eq!(&s[base..base + 16], &s[base + 64..base + 80]);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = OfdmConfig {
            cp_len: 64,
            ..OfdmConfig::default()
        };
        match bad.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "cp_len"),
            other => panic!("{other:?}"),
        }
        let bad = OfdmConfig {
            n_subcarriers: 48,
            ..OfdmConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
