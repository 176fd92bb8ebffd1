use std::path::Path;

use imd2_core::metrics::{nmse, psd_welch_real, NmseReport, PsdEstimate, Window};
use imd2_core::model::Model;
use imd2_core::Error as CoreError;
use serde::Serialize;

use crate::data;
use crate::error::{create_dir, read_to_string, write, Result};
use crate::report::Db;

pub struct EvalArgs<'a> {
    pub model: &'a Path,
    pub data: &'a Path,
    pub out: &'a Path,
    pub verbose: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub model: String,
    #[serde(flatten)]
    pub nmse: NmseReport,
    pub sample_rate_hz: f64,
    pub scale_mismatch: bool,
    /// One-sided band checked for residual <= Rx, DC excluded.
    pub imd2_band_hz: [f64; 2],
    /// Largest per-bin excess of the residual PSD over the Rx PSD in the band.
    pub max_residual_excess_db: Db,
}

fn segment_len(n: usize) -> usize {
    let mut seg = 1024;
    while seg > n && seg > 1 {
        seg /= 2;
    }
    seg
}

fn max_excess(rx: &PsdEstimate, residual: &PsdEstimate, lo: f64, hi: f64) -> f64 {
    rx.freqs_hz
        .iter()
        .zip(rx.psd_db_per_hz.iter().zip(&residual.psd_db_per_hz))
        .filter(|(f, _)| **f > lo && **f <= hi)
        .map(|(_, (r, e))| e - r)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Writes `nmse.json`, `psd_rx.csv` and `psd_residual.csv`.
pub fn run(args: EvalArgs<'_>) -> Result<EvalReport> {
    let model = Model::from_json(&read_to_string(args.model)?)?;
    let (dataset, _) = data::load(args.data)?;
    let peak = dataset.tx().max_magnitude();
    let scale_mismatch = peak - model.input_scale() > 1e-12;
    if scale_mismatch {
        eprintln!(
            "warning: dataset peak |x| = {peak} exceeds the model input scale {}",
            model.input_scale()
        );
    }
    let (rx, prediction) = imd2_core::train::predict_aligned(&model, &dataset)?;
    let residual: Vec<f64> = rx.iter().zip(&prediction).map(|(r, p)| r - p).collect();
    let report = nmse(&prediction, &rx)?;

    let fs = dataset.sample_rate_hz();
    let seg = segment_len(rx.len());
    let psd_rx = psd_welch_real(&rx, fs, seg, seg / 2, Window::Hann)?;
    let psd_res = psd_welch_real(&residual, fs, seg, seg / 2, Window::Hann)?;
    let band = [0.0, fs / 2.0];
    let out = EvalReport {
        model: model.describe(),
        nmse: report,
        sample_rate_hz: fs,
        scale_mismatch,
        imd2_band_hz: band,
        max_residual_excess_db: Db(max_excess(&psd_rx, &psd_res, band[0], band[1])),
    };

    create_dir(args.out)?;
    write(
        &args.out.join("nmse.json"),
        serde_json::to_string_pretty(&out).map_err(CoreError::from)? + "\n",
    )?;
    write(&args.out.join("psd_rx.csv"), psd_rx.to_csv())?;
    write(&args.out.join("psd_residual.csv"), psd_res.to_csv())?;
    if args.verbose {
        eprintln!(
            "{}: NMSE {} dB over {} samples",
            out.model,
            imd2_core::metrics::fmt_db(out.nmse.nmse_db),
            out.nmse.num_samples
        );
    }
    Ok(out)
}
