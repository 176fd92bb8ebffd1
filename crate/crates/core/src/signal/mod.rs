//! Sample sequences, delay embedding and dataset I/O.

mod io;

pub use io::{load_dataset, save_dataset, DatasetFormat};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

fn check_rate(sample_rate_hz: f64) -> Result<()> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sample rate must be positive and finite, got {sample_rate_hz}"
        )));
    }
    Ok(())
}

/// Complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSequence {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl ComplexSequence {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        check_rate(sample_rate_hz)?;
        if samples.is_empty() {
            return Err(Error::InvalidArgument("empty complex sequence".into()));
        }
        if let Some(i) = samples.iter().position(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite complex sample at index {i}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn from_pairs(pairs: &[(f64, f64)], sample_rate_hz: f64) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(re, im)| Complex64::new(re, im))
                .collect(),
            sample_rate_hz,
        )
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.len() as f64
    }
}

/// Real-valued samples (received signal, model output, residual).
#[derive(Debug, Clone, PartialEq)]
pub struct RealSequence {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl RealSequence {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        check_rate(sample_rate_hz)?;
        if samples.is_empty() {
            return Err(Error::InvalidArgument("empty real sequence".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite real sample at index {i}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.samples
    }
}

/// Strictly increasing tap delays `d_0 < d_1 < ... < d_{M-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DelaySet(Vec<usize>);

impl DelaySet {
    pub fn new(delays: Vec<usize>) -> Result<Self> {
        if delays.is_empty() {
            return Err(Error::InvalidArgument("delay set is empty".into()));
        }
        if delays.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "delays must be strictly increasing, got {delays:?}"
            )));
        }
        Ok(Self(delays))
    }

    /// Contiguous taps `0, 1, ..., count-1`.
    pub fn contiguous(count: usize) -> Result<Self> {
        Self::new((0..count).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_delay(&self) -> usize {
        *self.0.last().expect("delay set is nonempty")
    }
}

/// Paired transmit and received samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    tx: ComplexSequence,
    rx: RealSequence,
    valid_range: (usize, usize),
}

impl Dataset {
    pub fn new(tx: ComplexSequence, rx: RealSequence) -> Result<Self> {
        if tx.len() != rx.len() {
            return Err(Error::InvalidArgument(format!(
                "tx has {} samples but rx has {}",
                tx.len(),
                rx.len()
            )));
        }
        if tx.sample_rate_hz() != rx.sample_rate_hz() {
            return Err(Error::InvalidArgument(format!(
                "tx sample rate {} differs from rx sample rate {}",
                tx.sample_rate_hz(),
                rx.sample_rate_hz()
            )));
        }
        let n = tx.len();
        Ok(Self {
            tx,
            rx,
            valid_range: (0, n),
        })
    }

    pub fn tx(&self) -> &ComplexSequence {
        &self.tx
    }

    pub fn rx(&self) -> &RealSequence {
        &self.rx
    }

    pub fn len(&self) -> usize {
        self.tx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tx.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.tx.sample_rate_hz()
    }

    /// `[start, end)` of the samples that model outputs line up with.
    pub fn valid_range(&self) -> (usize, usize) {
        self.valid_range
    }

    pub fn with_sample_rate(self, sample_rate_hz: f64) -> Result<Self> {
        let tx = ComplexSequence::new(self.tx.samples, sample_rate_hz)?;
        let rx = RealSequence::new(self.rx.samples, sample_rate_hz)?;
        Self::new(tx, rx)
    }

    /// Delay embedding of the Tx signal plus the Rx samples aligned with its
    /// rows. Records the first usable index in `valid_range`.
    pub fn aligned(&mut self, delays: &DelaySet) -> Result<(Matrix, &[f64])> {
        let embedded = delay_embed(&self.tx, delays)?;
        self.valid_range.0 = self.valid_range.0.max(delays.max_delay());
        Ok((embedded, &self.rx.samples()[delays.max_delay()..]))
    }

    /// Divides the Tx samples by their peak magnitude. Rx is untouched.
    pub fn normalized(&self) -> Result<(Self, f64)> {
        let (tx, scale) = normalize_magnitude(&self.tx)?;
        Ok((
            Self {
                tx,
                rx: self.rx.clone(),
                valid_range: self.valid_range,
            },
            scale,
        ))
    }

    /// Applies a previously computed scale (e.g. stored with a trained model).
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid scale {scale}")));
        }
        let tx = ComplexSequence::new(
            self.tx.samples.iter().map(|z| z / scale).collect(),
            self.tx.sample_rate_hz,
        )?;
        Ok(Self {
            tx,
            rx: self.rx.clone(),
            valid_range: self.valid_range,
        })
    }
}

/// Rows `(|x_{n-d_0}|, ..., |x_{n-d_{M-1}}|)` for `n = max(d) .. len-1`.
///
/// The first `max(d)` samples have incomplete history and are dropped rather
/// than zero-padded.
pub fn delay_embed(tx: &ComplexSequence, delays: &DelaySet) -> Result<Matrix> {
    let len = tx.len();
    let max_delay = delays.max_delay();
    if max_delay >= len {
        return Err(Error::InvalidArgument(format!(
            "max delay {max_delay} must be less than sequence length {len}"
        )));
    }
    let mags: Vec<f64> = tx.samples().iter().map(|z| z.norm()).collect();
    let rows = len - max_delay;
    let cols = delays.len();
    let mut out = Matrix::zeros(rows, cols);
    for (r, row) in out.as_mut_slice().chunks_exact_mut(cols).enumerate() {
        let n = r + max_delay;
        for (slot, &d) in row.iter_mut().zip(delays.as_slice()) {
            *slot = mags[n - d];
        }
    }
    Ok(out)
}

/// Returns `(tx / scale, scale)` with `scale = max |x_n|`.
pub fn normalize_magnitude(tx: &ComplexSequence) -> Result<(ComplexSequence, f64)> {
    let scale = tx.max_magnitude();
    if scale == 0.0 {
        return Err(Error::DegenerateInput(
            "cannot normalize an all-zero sequence".into(),
        ));
    }
    let samples = tx.samples().iter().map(|z| z / scale).collect();
    Ok((ComplexSequence::new(samples, tx.sample_rate_hz())?, scale))
}
