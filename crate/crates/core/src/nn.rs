//! Delay-tapped feed-forward canceller.
//!
//! `y_n = w_out * s(W_{L-1} * ... s(W_1 * s(W_0 * f_n)))` where `f_n` holds the
//! delayed Tx magnitudes. Dense layers carry no bias and the output layer is
//! linear.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::signal::DelaySet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Self::Tanh => x.tanh(),
            Self::Relu => x.max(0.0),
            Self::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }

    /// Derivative expressed through the activation output `a = s(x)`.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Self::Tanh => 1.0 - a * a,
            Self::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Sigmoid => a * (1.0 - a),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Self::Tanh),
            "relu" => Ok(Self::Relu),
            "sigmoid" => Ok(Self::Sigmoid),
            other => Err(Error::InvalidArgument(format!(
                "unknown activation `{other}`"
            ))),
        }
    }
}

/// Layer shapes: `delays.len()` inputs, then `widths` outputs per layer; the
/// last width must be 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NnShape {
    pub delays: DelaySet,
    pub widths: Vec<usize>,
    pub activation: Activation,
}

impl NnShape {
    /// Three contiguous taps, widths 3-2-1, tanh: 17 weights.
    pub fn reference() -> Self {
        Self {
            delays: DelaySet::contiguous(3).expect("nonempty"),
            widths: vec![3, 2, 1],
            activation: Activation::Tanh,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.widths.is_empty() || *self.widths.last().unwrap() != 1 {
            return Err(Error::InvalidModel(format!(
                "widths must be nonempty and end with 1, got {:?}",
                self.widths
            )));
        }
        if self.widths.contains(&0) {
            return Err(Error::InvalidModel("zero-width layer".into()));
        }
        Ok(())
    }

    fn fan_ins(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.delays.len()).chain(self.widths.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NnWire", into = "NnWire")]
pub struct NnModel {
    delays: Vec<usize>,
    widths: Vec<usize>,
    activation: Activation,
    input_scale: f64,
    /// `weights[i]` is `widths[i] x fan_in(i)`; the last entry is `w_out`.
    weights: Vec<Matrix>,
}

/// Saved-model layout: one flat row-major array per layer.
#[derive(Serialize, Deserialize)]
struct NnWire {
    delays: Vec<usize>,
    widths: Vec<usize>,
    activation: Activation,
    input_scale: f64,
    weights: Vec<Vec<f64>>,
}

impl From<NnModel> for NnWire {
    fn from(m: NnModel) -> Self {
        Self {
            delays: m.delays,
            widths: m.widths,
            activation: m.activation,
            input_scale: m.input_scale,
            weights: m.weights.into_iter().map(Matrix::into_vec).collect(),
        }
    }
}

impl TryFrom<NnWire> for NnModel {
    type Error = Error;

    fn try_from(w: NnWire) -> Result<Self> {
        let delays = DelaySet::new(w.delays).map_err(|e| Error::InvalidModel(e.to_string()))?;
        let shape = NnShape {
            delays,
            widths: w.widths,
            activation: w.activation,
        };
        shape.validate()?;
        if w.weights.len() != shape.widths.len() {
            return Err(Error::InvalidModel(format!(
                "{} weight arrays for {} layers",
                w.weights.len(),
                shape.widths.len()
            )));
        }
        let weights = w
            .weights
            .into_iter()
            .zip(shape.widths.iter().zip(shape.fan_ins()))
            .map(|(data, (&r, c))| {
                Matrix::from_vec(r, c, data).map_err(|e| Error::InvalidModel(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_weights(shape, w.input_scale, weights)
    }
}

/// Per-layer outputs from one forward pass, reused by [`NnModel::backward`].
#[derive(Debug, Clone)]
pub struct Tape {
    /// `acts[0]` is the input; `acts[i + 1]` the output of layer `i`.
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    back: Vec<f64>,
}

impl Tape {
    /// Buffers sized for `model`, reusable across calls to [`NnModel::forward_into`].
    pub fn for_model(model: &NnModel) -> Self {
        let mut acts = vec![vec![0.0; model.delays.len()]];
        acts.extend(model.widths.iter().map(|&w| vec![0.0; w]));
        let widest = acts.iter().map(Vec::len).max().unwrap_or(1);
        Self {
            acts,
            delta: Vec::with_capacity(widest),
            back: Vec::with_capacity(widest),
        }
    }

    pub fn output(&self) -> f64 {
        self.acts.last().expect("tape has output")[0]
    }
}

impl NnModel {
    pub fn from_weights(shape: NnShape, input_scale: f64, weights: Vec<Matrix>) -> Result<Self> {
        let m = Self {
            delays: shape.delays.as_slice().to_vec(),
            widths: shape.widths,
            activation: shape.activation,
            input_scale,
            weights,
        };
        m.validate()?;
        Ok(m)
    }

    /// All-zero weights.
    pub fn zeros(shape: NnShape, input_scale: f64) -> Result<Self> {
        shape.validate()?;
        let weights = shape
            .widths
            .iter()
            .zip(shape.fan_ins())
            .map(|(&r, c)| Matrix::zeros(r, c))
            .collect();
        Self::from_weights(shape, input_scale, weights)
    }

    /// Glorot-uniform weights from ChaCha8 seeded with `seed`.
    pub fn init_weights(shape: NnShape, input_scale: f64, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(shape, input_scale)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in &mut model.weights {
            let bound = (6.0 / (w.rows() + w.cols()) as f64).sqrt();
            for v in w.as_mut_slice() {
                *v = rng.gen_range(-bound..=bound);
            }
        }
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let delays =
            DelaySet::new(self.delays.clone()).map_err(|e| Error::InvalidModel(e.to_string()))?;
        let shape = NnShape {
            delays,
            widths: self.widths.clone(),
            activation: self.activation,
        };
        shape.validate()?;
        if !(self.input_scale.is_finite() && self.input_scale > 0.0) {
            return Err(Error::InvalidModel(format!(
                "input_scale must be positive, got {}",
                self.input_scale
            )));
        }
        if self.weights.len() != self.widths.len() {
            return Err(Error::InvalidModel(format!(
                "{} weight matrices for {} layers",
                self.weights.len(),
                self.widths.len()
            )));
        }
        for (i, (w, (&rows, cols))) in self
            .weights
            .iter()
            .zip(self.widths.iter().zip(shape.fan_ins()))
            .enumerate()
        {
            if w.rows() != rows || w.cols() != cols || w.as_slice().len() != rows * cols {
                return Err(Error::InvalidModel(format!(
                    "layer {i} is {}x{}, expected {rows}x{cols}",
                    w.rows(),
                    w.cols()
                )));
            }
            if w.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "non-finite weight in layer {i}"
                )));
            }
        }
        Ok(())
    }

    pub fn delays(&self) -> DelaySet {
        DelaySet::new(self.delays.clone()).expect("validated at construction")
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_scale(&self) -> f64 {
        self.input_scale
    }

    pub fn set_input_scale(&mut self, scale: f64) {
        self.input_scale = scale;
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.as_slice().len()).sum()
    }

    /// Weights concatenated layer by layer, each row-major.
    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .flat_map(|w| w.as_slice().iter().copied())
            .collect()
    }

    pub fn unflatten(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::InvalidArgument(format!(
                "parameter vector has {} entries, model has {}",
                params.len(),
                self.param_count()
            )));
        }
        let mut rest = params;
        for w in &mut self.weights {
            let (head, tail) = rest.split_at(w.as_slice().len());
            w.as_mut_slice().copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    fn check_input(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.delays.len() {
            return Err(Error::InvalidModel(format!(
                "input has {} entries, model expects {}",
                f.len(),
                self.delays.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, f: &[f64]) -> Result<f64> {
        Ok(self.forward_tape(f)?.output())
    }

    pub fn forward_tape(&self, f: &[f64]) -> Result<Tape> {
        let mut tape = Tape::for_model(self);
        self.forward_into(f, &mut tape)?;
        Ok(tape)
    }

    /// Forward pass recording activations in an existing tape.
    pub fn forward_into(&self, f: &[f64], tape: &mut Tape) -> Result<f64> {
        self.check_input(f)?;
        let last = self.weights.len() - 1;
        tape.acts[0].copy_from_slice(f);
        for (i, w) in self.weights.iter().enumerate() {
            let (done, rest) = tape.acts.split_at_mut(i + 1);
            let z = &mut rest[0];
            w.matvec(&done[i], z);
            if i < last {
                z.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
        }
        Ok(tape.output())
    }

    /// Adds `upstream * dy/dW` to `grad` (flattened order, see [`Self::flatten`]).
    pub fn backward_into(&self, tape: &mut Tape, upstream: f64, grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.param_count());
        let mut end = grad.len();
        // delta = dL/dz for the current layer's pre-activation
        tape.delta.clear();
        tape.delta.push(upstream);
        for i in (0..self.weights.len()).rev() {
            let w = &self.weights[i];
            let input = &tape.acts[i];
            let start = end - w.as_slice().len();
            let g = &mut grad[start..end];
            end = start;
            for (r, d) in tape.delta.iter().enumerate() {
                let row = &mut g[r * w.cols()..(r + 1) * w.cols()];
                for (gv, x) in row.iter_mut().zip(input) {
                    *gv += d * x;
                }
            }
            if i == 0 {
                break;
            }
            tape.back.clear();
            tape.back.resize(w.cols(), 0.0);
            w.matvec_t(&tape.delta, &mut tape.back);
            for (b, a) in tape.back.iter_mut().zip(input) {
                *b *= self.activation.derivative_from_output(*a);
            }
            std::mem::swap(&mut tape.delta, &mut tape.back);
        }
    }

    /// `upstream * dy/dW` at input `f`.
    pub fn backward(&self, f: &[f64], upstream: f64) -> Result<Vec<f64>> {
        let mut tape = self.forward_tape(f)?;
        let mut grad = vec![0.0; self.param_count()];
        self.backward_into(&mut tape, upstream, &mut grad);
        Ok(grad)
    }
}
