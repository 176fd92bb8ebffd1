//! Chebyshev memory-polynomial canceller.
//!
//! `y_n = sum_k sum_p theta[k][p] * T_p(|x_{n - d_k}|)` with `T_p` the Chebyshev
//! polynomial of the first kind. The model is linear in `theta`, so the
//! gradient with respect to the coefficients is the feature row itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::signal::DelaySet;

/// Arguments up to this far above 1 are treated as 1.
pub const DOMAIN_SLACK: f64 = 1e-12;

fn check_domain(u: f64) -> Result<f64> {
    if !(0.0..=1.0 + DOMAIN_SLACK).contains(&u) {
        return Err(Error::Domain(u));
    }
    Ok(u.min(1.0))
}

/// Writes `T_0(u) .. T_{P-1}(u)` into `out` (`P = out.len()`).
pub fn cheb_basis_into(u: f64, out: &mut [f64]) -> Result<()> {
    let u = check_domain(u)?;
    let order = out.len();
    if order == 0 {
        return Ok(());
    }
    out[0] = 1.0;
    if order > 1 {
        out[1] = u;
    }
    for p in 2..order {
        out[p] = 2.0 * u * out[p - 1] - out[p - 2];
    }
    Ok(())
}

/// `(T_0(u), ..., T_{order-1}(u))` by the three-term recurrence.
pub fn cheb_basis(u: f64, order: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; order];
    cheb_basis_into(u, &mut out)?;
    Ok(out)
}

/// Expands each embedded row into `K * order` Chebyshev features, delay-major.
pub fn feature_matrix(embedded: &Matrix, order: usize) -> Result<Matrix> {
    let k = embedded.cols();
    let mut out = Matrix::zeros(embedded.rows(), k * order);
    for r in 0..embedded.rows() {
        feature_row_into(embedded.row(r), order, out.row_mut(r))?;
    }
    Ok(out)
}

fn feature_row_into(row: &[f64], order: usize, out: &mut [f64]) -> Result<()> {
    for (u, chunk) in row.iter().zip(out.chunks_exact_mut(order)) {
        cheb_basis_into(*u, chunk)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChebWire")]
pub struct ChebyshevModel {
    delays: Vec<usize>,
    order: usize,
    input_scale: f64,
    /// Row-major `K x P`.
    theta: Vec<f64>,
}

#[derive(Deserialize)]
struct ChebWire {
    delays: Vec<usize>,
    order: usize,
    input_scale: f64,
    theta: Vec<f64>,
}

impl TryFrom<ChebWire> for ChebyshevModel {
    type Error = Error;

    fn try_from(w: ChebWire) -> Result<Self> {
        let m = Self {
            delays: w.delays,
            order: w.order,
            input_scale: w.input_scale,
            theta: w.theta,
        };
        m.validate()?;
        Ok(m)
    }
}

impl ChebyshevModel {
    /// All-zero coefficients.
    pub fn new(delays: DelaySet, order: usize, input_scale: f64) -> Result<Self> {
        let theta = vec![0.0; delays.len() * order];
        Self::with_theta(delays, order, input_scale, theta)
    }

    pub fn with_theta(
        delays: DelaySet,
        order: usize,
        input_scale: f64,
        theta: Vec<f64>,
    ) -> Result<Self> {
        let m = Self {
            delays: delays.as_slice().to_vec(),
            order,
            input_scale,
            theta,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks invariants; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        DelaySet::new(self.delays.clone()).map_err(|e| Error::InvalidModel(e.to_string()))?;
        if self.order == 0 {
            return Err(Error::InvalidModel("order must be positive".into()));
        }
        if !(self.input_scale.is_finite() && self.input_scale > 0.0) {
            return Err(Error::InvalidModel(format!(
                "input_scale must be positive, got {}",
                self.input_scale
            )));
        }
        if self.theta.len() != self.delays.len() * self.order {
            return Err(Error::InvalidModel(format!(
                "theta has {} entries, expected {}",
                self.theta.len(),
                self.delays.len() * self.order
            )));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidModel("non-finite coefficient".into()));
        }
        Ok(())
    }

    pub fn delays(&self) -> DelaySet {
        DelaySet::new(self.delays.clone()).expect("validated at construction")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn input_scale(&self) -> f64 {
        self.input_scale
    }

    pub fn set_input_scale(&mut self, scale: f64) {
        self.input_scale = scale;
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Coefficient `theta[k][p]`.
    pub fn coeff(&self, k: usize, p: usize) -> f64 {
        self.theta[k * self.order + p]
    }

    pub fn set_theta(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.theta.len() {
            return Err(Error::InvalidArgument(format!(
                "theta length {} != {}",
                theta.len(),
                self.theta.len()
            )));
        }
        self.theta.copy_from_slice(theta);
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.theta.len()
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.delays.len() {
            return Err(Error::InvalidArgument(format!(
                "row has {} taps, model has {}",
                row.len(),
                self.delays.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, row: &[f64]) -> Result<f64> {
        let grad = self.gradient(row)?;
        Ok(dot(&self.theta, &grad))
    }

    /// `dy/dtheta`, which is the feature row and does not depend on `theta`.
    pub fn gradient(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_row(row)?;
        let mut feats = vec![0.0; self.param_count()];
        feature_row_into(row, self.order, &mut feats)?;
        Ok(feats)
    }
}
