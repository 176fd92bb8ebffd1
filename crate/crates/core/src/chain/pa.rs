use num_complex::Complex64;

use crate::signal::ComplexSequence;

/// Rapp smoothness factor.
pub const RAPP_SMOOTHNESS: f64 = 2.0;

/// Converts dBm to linear amplitude with `|x|^2` in mW.
pub fn dbm_to_amplitude(dbm: f64) -> f64 {
    10f64.powf(dbm / 20.0)
}

pub fn db_to_amplitude_gain(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Output saturation amplitude placing the output-referred 1 dB compression
/// point at `p1db_dbm`: at that point `g|x| = a1 * 10^(1/20)` and
/// `(1 + (g|x|/x_sat)^(2s))^(1/(2s)) = 10^(1/20)`.
pub fn rapp_saturation(p1db_dbm: f64) -> f64 {
    let s2 = 2.0 * RAPP_SMOOTHNESS;
    let linear_at_p1db = dbm_to_amplitude(p1db_dbm) * db_to_amplitude_gain(1.0);
    linear_at_p1db / (10f64.powf(s2 / 20.0) - 1.0).powf(1.0 / s2)
}

/// AM/AM of the Rapp model for one sample; phase is preserved.
#[inline]
pub fn rapp(x: Complex64, gain: f64, x_sat: f64) -> Complex64 {
    let s2 = 2.0 * RAPP_SMOOTHNESS;
    let lin = gain * x;
    let ratio = lin.norm() / x_sat;
    lin / (1.0 + ratio.powf(s2)).powf(1.0 / s2)
}

/// Memoryless Rapp PA with small-signal gain `gain_db` and output 1 dB
/// compression point `p1db_dbm`. Samples are amplitudes with `|x|^2` in mW.
pub fn pa_model(x: &ComplexSequence, gain_db: f64, p1db_dbm: f64) -> ComplexSequence {
    let gain = db_to_amplitude_gain(gain_db);
    let x_sat = rapp_saturation(p1db_dbm);
    let out = x.samples().iter().map(|&z| rapp(z, gain, x_sat)).collect();
    ComplexSequence::new(out, x.sample_rate_hz()).expect("Rapp output of finite input is finite")
}
