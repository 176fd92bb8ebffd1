//! Common interface over both canceller families and the mean-squared-error
//! objective used by the iterative optimizers.

use serde::{Deserialize, Serialize};

use crate::cheb::{feature_matrix, ChebyshevModel};
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::metrics::ratio_db;
use crate::nn::{NnModel, Tape};
use crate::optim::LossProblem;
use crate::par;
use crate::signal::DelaySet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Chebyshev,
    Nn,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Chebyshev => "chebyshev",
            Self::Nn => "nn",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chebyshev" | "cheb" | "polynomial" => Ok(Self::Chebyshev),
            "nn" => Ok(Self::Nn),
            other => Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
        }
    }
}

/// A fitted or initial canceller. Serializes to the saved-model JSON with a
/// `type` tag of `chebyshev` or `nn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Model {
    Chebyshev(ChebyshevModel),
    Nn(NnModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Chebyshev(_) => ModelKind::Chebyshev,
            Self::Nn(_) => ModelKind::Nn,
        }
    }

    pub fn delays(&self) -> DelaySet {
        match self {
            Self::Chebyshev(m) => m.delays(),
            Self::Nn(m) => m.delays(),
        }
    }

    pub fn input_scale(&self) -> f64 {
        match self {
            Self::Chebyshev(m) => m.input_scale(),
            Self::Nn(m) => m.input_scale(),
        }
    }

    pub fn set_input_scale(&mut self, scale: f64) {
        match self {
            Self::Chebyshev(m) => m.set_input_scale(scale),
            Self::Nn(m) => m.set_input_scale(scale),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Self::Chebyshev(m) => m.param_count(),
            Self::Nn(m) => m.param_count(),
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Self::Chebyshev(m) => m.theta().to_vec(),
            Self::Nn(m) => m.flatten(),
        }
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        match self {
            Self::Chebyshev(m) => m.set_theta(params),
            Self::Nn(m) => m.unflatten(params),
        }
    }

    /// Short label such as `chebyshev(K=3,P=8)` or `nn(M=3,3-2-1,tanh)`.
    pub fn describe(&self) -> String {
        match self {
            Self::Chebyshev(m) => format!("chebyshev(K={},P={})", m.delays().len(), m.order()),
            Self::Nn(m) => format!(
                "nn(M={},{},{})",
                m.delays().len(),
                m.widths()
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join("-"),
                serde_json::to_value(m.activation())
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default()
            ),
        }
    }

    /// Model output for each row of a delay embedding.
    pub fn predict(&self, embedded: &Matrix) -> Result<Vec<f64>> {
        match self {
            Self::Chebyshev(m) => {
                let feats = feature_matrix(embedded, m.order())?;
                Ok(par::map_rows(feats.rows(), |r| {
                    dot(m.theta(), feats.row(r))
                }))
            }
            Self::Nn(m) => {
                if embedded.cols() != m.delays().len() {
                    return Err(Error::InvalidModel(format!(
                        "embedding has {} columns, model expects {}",
                        embedded.cols(),
                        m.delays().len()
                    )));
                }
                Ok(par::map_rows(embedded.rows(), |r| {
                    m.forward(embedded.row(r)).expect("row width checked")
                }))
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidModel(e.to_string()))
    }
}

/// `f(theta) = mean((model(theta, f_n) - target_n)^2)` over a fixed embedding.
#[derive(Debug, Clone)]
pub struct Objective {
    model: Model,
    /// Chebyshev feature rows, or raw embedding rows for the NN.
    inputs: Matrix,
    target: Vec<f64>,
    target_power: f64,
}

impl Objective {
    pub fn new(model: &Model, embedded: &Matrix, target: &[f64]) -> Result<Self> {
        if embedded.rows() != target.len() {
            return Err(Error::InvalidArgument(format!(
                "embedding has {} rows, target has {}",
                embedded.rows(),
                target.len()
            )));
        }
        if target.is_empty() {
            return Err(Error::InvalidArgument("empty training set".into()));
        }
        let inputs = match model {
            Model::Chebyshev(m) => feature_matrix(embedded, m.order())?,
            Model::Nn(m) => {
                if embedded.cols() != m.delays().len() {
                    return Err(Error::InvalidModel(format!(
                        "embedding has {} columns, model expects {}",
                        embedded.cols(),
                        m.delays().len()
                    )));
                }
                embedded.clone()
            }
        };
        let target_power = target.iter().map(|v| v * v).sum::<f64>() / target.len() as f64;
        if target_power == 0.0 {
            return Err(Error::DegenerateInput("all-zero target".into()));
        }
        Ok(Self {
            model: model.clone(),
            inputs,
            target: target.to_vec(),
            target_power,
        })
    }

    /// Chebyshev design matrix (rows x K*P); the NN embedding otherwise.
    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    /// NMSE in dB implied by a loss value (reference-power normalization).
    pub fn nmse_db(&self, loss: f64) -> f64 {
        ratio_db(loss, self.target_power)
    }

    fn kernel<'a>(
        &'a self,
        nn: Option<&'a NnModel>,
        theta: &'a [f64],
    ) -> impl Fn(std::ops::Range<usize>, &mut [f64]) + Sync + 'a {
        move |rows, acc| {
            let (loss, grad) = acc.split_first_mut().expect("accumulator nonempty");
            match nn {
                None => {
                    for r in rows {
                        let row = self.inputs.row(r);
                        let resid = dot(theta, row) - self.target[r];
                        *loss += resid * resid;
                        for (g, x) in grad.iter_mut().zip(row) {
                            *g += 2.0 * resid * x;
                        }
                    }
                }
                Some(m) => {
                    let mut tape = Tape::for_model(m);
                    for r in rows {
                        let y = m
                            .forward_into(self.inputs.row(r), &mut tape)
                            .expect("embedding width checked");
                        let resid = y - self.target[r];
                        *loss += resid * resid;
                        m.backward_into(&mut tape, 2.0 * resid, grad);
                    }
                }
            }
        }
    }

    fn eval_with(
        &self,
        theta: &[f64],
        reduce: impl FnOnce(
            usize,
            usize,
            &(dyn Fn(std::ops::Range<usize>, &mut [f64]) + Sync),
        ) -> Vec<f64>,
    ) -> (f64, Vec<f64>) {
        let dim = self.dim();
        assert_eq!(theta.len(), dim, "parameter dimension");
        let nn = match &self.model {
            Model::Chebyshev(_) => None,
            Model::Nn(m) => {
                let mut m = m.clone();
                m.unflatten(theta).expect("dimension checked");
                Some(m)
            }
        };
        let kernel = self.kernel(nn.as_ref(), theta);
        let acc = reduce(self.len(), dim + 1, &kernel);
        let inv_m = 1.0 / self.len() as f64;
        let loss = acc[0] * inv_m;
        let grad = acc[1..].iter().map(|g| g * inv_m).collect();
        (loss, grad)
    }

    /// Single-threaded evaluation; bit-identical to [`LossProblem::eval`].
    pub fn eval_sequential(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        self.eval_with(theta, |n, w, k| par::reduce_rows_seq(n, w, k))
    }
}

impl LossProblem for Objective {
    fn dim(&self) -> usize {
        self.model.param_count()
    }

    fn eval(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        self.eval_with(theta, |n, w, k| par::reduce_rows(n, w, k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::NnShape;

    fn embedding() -> (Matrix, Vec<f64>) {
        let rows: Vec<Vec<f64>> = (0..3000)
            .map(|i| {
                let a = ((i * 37) % 101) as f64 / 100.0;
                let b = ((i * 53) % 97) as f64 / 96.0;
                let c = ((i * 11) % 89) as f64 / 88.0;
                vec![a, b, c]
            })
            .collect();
        let target = rows.iter().map(|r| r[0] * r[0] - 0.3 * r[1]).collect();
        (Matrix::from_rows(&rows).unwrap(), target)
    }

    #[test]
    fn json_round_trip_and_tags() {
        let cheb = Model::Chebyshev(
            ChebyshevModel::with_theta(
                DelaySet::contiguous(2).unwrap(),
                2,
                0.5,
                vec![1.0, 2.0, 3.0, 4.0],
            )
            .unwrap(),
        );
        let json = cheb.to_json().unwrap();
        assert!(json.contains(r#""type": "chebyshev""#));
        assert_eq!(Model::from_json(&json).unwrap(), cheb);

        let nn = Model::Nn(NnModel::init_weights(NnShape::reference(), 2.0, 9).unwrap());
        let json = nn.to_json().unwrap();
        assert!(json.contains(r#""type": "nn""#));
        assert!(json.contains(r#""activation": "tanh""#));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["weights"].as_array().unwrap().len(), 3);
        assert_eq!(v["weights"][1].as_array().unwrap().len(), 6);
        assert_eq!(Model::from_json(&json).unwrap(), nn);
    }

    #[test]
    fn invalid_saved_models_rejected() {
        let bad =
            r#"{"type":"chebyshev","delays":[0,1],"order":2,"input_scale":1.0,"theta":[1,2,3]}"#;
        assert!(Model::from_json(bad).is_err());
        let bad = r#"{"type":"nn","delays":[0],"widths":[1],"activation":"tanh","input_scale":1.0,"weights":[[1,2]]}"#;
        assert!(Model::from_json(bad).is_err());
    }

    #[test]
    fn objective_matches_direct_loss() {
        let (emb, target) = embedding();
        for model in [
            Model::Nn(NnModel::init_weights(NnShape::reference(), 1.0, 4).unwrap()),
            Model::Chebyshev(
                ChebyshevModel::new(DelaySet::contiguous(3).unwrap(), 4, 1.0).unwrap(),
            ),
        ] {
            let obj = Objective::new(&model, &emb, &target).unwrap();
            let theta: Vec<f64> = (0..obj.dim()).map(|i| 0.1 * i as f64 - 0.3).collect();
            let (loss, grad) = obj.eval(&theta);
            let mut m = model.clone();
            m.set_params(&theta).unwrap();
            let y = m.predict(&emb).unwrap();
            let direct = crate::metrics::mse_loss(&y, &target).unwrap();
            assert!((loss - direct).abs() <= 1e-12 * direct);
            assert_eq!(grad.len(), obj.dim());
            assert_eq!(obj.eval_sequential(&theta), (loss, grad));
        }
    }
}
