//! Loss, NMSE and Welch PSD estimates used for reporting.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Residual energies below this report an NMSE of negative infinity.
pub const ZERO_RESIDUAL: f64 = 1e-300;

/// Floor used when converting zero PSD bins to dB.
pub const PSD_DB_FLOOR: f64 = -300.0;

fn check_pair(y: &[f64], reference: &[f64]) -> Result<()> {
    if y.len() != reference.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            y.len(),
            reference.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::InvalidArgument("empty sequences".into()));
    }
    Ok(())
}

/// Mean of squared differences.
pub fn mse_loss(y: &[f64], reference: &[f64]) -> Result<f64> {
    check_pair(y, reference)?;
    let sum: f64 = y
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / y.len() as f64)
}

/// `10 log10(num / den)`, negative infinity when `num` is negligible.
pub fn ratio_db(num: f64, den: f64) -> f64 {
    if num < ZERO_RESIDUAL {
        f64::NEG_INFINITY
    } else {
        10.0 * (num / den).log10()
    }
}

/// Serializes a dB value as a number, or `"inf"`/`"-inf"` when infinite.
pub fn ser_db<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// Formats a dB value, rendering negative infinity as `-inf`.
pub fn fmt_db(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.2}")
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// NMSE normalized by reference (Rx) power. `suppression_db = -nmse_db`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NmseReport {
    #[serde(serialize_with = "ser_db")]
    pub nmse_db: f64,
    #[serde(serialize_with = "ser_db")]
    pub suppression_db: f64,
    pub num_samples: usize,
    pub denominator_convention: &'static str,
}

pub const REFERENCE_DENOMINATOR: &str = "reference_power";

pub fn nmse(y: &[f64], reference: &[f64]) -> Result<NmseReport> {
    check_pair(y, reference)?;
    let den: f64 = reference.iter().map(|v| v * v).sum();
    if den == 0.0 {
        return Err(Error::DegenerateInput("all-zero reference signal".into()));
    }
    let num: f64 = y
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let nmse_db = ratio_db(num, den);
    Ok(NmseReport {
        nmse_db,
        suppression_db: -nmse_db,
        num_samples: y.len(),
        denominator_convention: REFERENCE_DENOMINATOR,
    })
}

/// Residual energy over Tx energy, the alternative normalization.
pub fn nmse_tx_db(y: &[f64], reference: &[f64], tx: &[Complex64]) -> Result<f64> {
    check_pair(y, reference)?;
    let den: f64 = tx.iter().map(|z| z.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::DegenerateInput("all-zero tx signal".into()));
    }
    let num: f64 = y
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(ratio_db(num, den))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Hann,
}

impl Window {
    /// Periodic window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Self::Hann => (0..n)
                .map(|i| {
                    let s = (std::f64::consts::PI * i as f64 / n as f64).sin();
                    s * s
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub freqs_hz: Vec<f64>,
    /// Linear density, power per Hz.
    pub psd_per_hz: Vec<f64>,
    /// `10 log10` of the density, with zero bins at [`PSD_DB_FLOOR`].
    pub psd_db_per_hz: Vec<f64>,
    pub resolution_bw_hz: f64,
    pub segments: usize,
}

impl PsdEstimate {
    fn from_linear(freqs_hz: Vec<f64>, psd_per_hz: Vec<f64>, df: f64, segments: usize) -> Self {
        let psd_db_per_hz = psd_per_hz
            .iter()
            .map(|&p| {
                if p > 0.0 {
                    (10.0 * p.log10()).max(PSD_DB_FLOOR)
                } else {
                    PSD_DB_FLOOR
                }
            })
            .collect();
        Self {
            freqs_hz,
            psd_per_hz,
            psd_db_per_hz,
            resolution_bw_hz: df,
            segments,
        }
    }

    /// Bin spacing times the sum of the density.
    pub fn total_power(&self) -> f64 {
        self.psd_per_hz.iter().sum::<f64>() * self.resolution_bw_hz
    }

    /// Power in bins with `lo <= f <= hi`.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        self.freqs_hz
            .iter()
            .zip(&self.psd_per_hz)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .map(|(_, p)| p)
            .sum::<f64>()
            * self.resolution_bw_hz
    }

    /// `freq_hz,psd_db` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,psd_db\n");
        for (f, p) in self.freqs_hz.iter().zip(&self.psd_db_per_hz) {
            out.push_str(&format!("{f},{p}\n"));
        }
        out
    }
}

fn welch_segments(
    len: usize,
    segment_len: usize,
    overlap: usize,
) -> Result<impl Iterator<Item = usize>> {
    if segment_len == 0 || !segment_len.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "segment length must be a power of two, got {segment_len}"
        )));
    }
    if segment_len > len {
        return Err(Error::InvalidArgument(format!(
            "segment length {segment_len} exceeds signal length {len}"
        )));
    }
    if overlap >= segment_len {
        return Err(Error::InvalidArgument(format!(
            "overlap {overlap} must be smaller than segment length {segment_len}"
        )));
    }
    let hop = segment_len - overlap;
    let count = 1 + (len - segment_len) / hop;
    Ok((0..count).map(move |i| i * hop))
}

/// Averaged windowed periodograms of `x`, normalized so the density
/// integrates to the mean power.
fn welch_core(
    x: &[Complex64],
    sample_rate_hz: f64,
    segment_len: usize,
    overlap: usize,
    window: Window,
) -> Result<(Vec<f64>, usize)> {
    let starts: Vec<usize> = welch_segments(x.len(), segment_len, overlap)?.collect();
    let w = window.coefficients(segment_len);
    let w_energy: f64 = w.iter().map(|v| v * v).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment_len);
    let mut acc = vec![0.0; segment_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    for &s in &starts {
        for ((b, z), wi) in buf.iter_mut().zip(&x[s..s + segment_len]).zip(&w) {
            *b = z * wi;
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    let scale = 1.0 / (sample_rate_hz * w_energy * starts.len() as f64);
    acc.iter_mut().for_each(|a| *a *= scale);
    Ok((acc, starts.len()))
}

/// One-sided Welch PSD of a real signal.
pub fn psd_welch_real(
    x: &[f64],
    sample_rate_hz: f64,
    segment_len: usize,
    overlap: usize,
    window: Window,
) -> Result<PsdEstimate> {
    let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let (two_sided, segments) = welch_core(&z, sample_rate_hz, segment_len, overlap, window)?;
    let half = segment_len / 2;
    let df = sample_rate_hz / segment_len as f64;
    let mut psd = two_sided[..=half].to_vec();
    // fold negative frequencies; DC and Nyquist appear once
    for p in &mut psd[1..half] {
        *p *= 2.0;
    }
    if segment_len == 1 {
        psd.truncate(1);
    }
    let freqs = (0..psd.len()).map(|k| k as f64 * df).collect();
    Ok(PsdEstimate::from_linear(freqs, psd, df, segments))
}

/// Two-sided, zero-centered Welch PSD of a complex signal.
pub fn psd_welch_complex(
    x: &[Complex64],
    sample_rate_hz: f64,
    segment_len: usize,
    overlap: usize,
    window: Window,
) -> Result<PsdEstimate> {
    let (mut psd, segments) = welch_core(x, sample_rate_hz, segment_len, overlap, window)?;
    let half = segment_len / 2;
    psd.rotate_left(segment_len - half);
    let df = sample_rate_hz / segment_len as f64;
    let freqs = (0..segment_len)
        .map(|k| (k as f64 - half as f64) * df)
        .collect();
    Ok(PsdEstimate::from_linear(freqs, psd, df, segments))
}
