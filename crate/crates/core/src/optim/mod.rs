//! Fitting procedures over a flat parameter vector: ridge least squares,
//! Adam, and L-BFGS with a strong-Wolfe line search.

mod adam;
mod lbfgs;
mod line_search;
mod ls;

pub use adam::{AdamHyper, AdamState};
pub use lbfgs::{two_loop_direction, LbfgsState, LbfgsStep, CURVATURE_THRESHOLD};
pub use line_search::{line_search, LineSearchResult, WolfeParams};
pub use ls::{gram_system, ls_solve, solve_spd};

use serde::{Deserialize, Serialize};

/// Differentiable objective `theta -> (loss, gradient)`.
pub trait LossProblem {
    fn dim(&self) -> usize;

    fn eval(&self, theta: &[f64]) -> (f64, Vec<f64>);
}

/// Wraps a closure as a [`LossProblem`].
pub struct FnProblem<F> {
    dim: usize,
    f: F,
}

impl<F> FnProblem<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> LossProblem for FnProblem<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        (self.f)(theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub iter: usize,
    pub loss: f64,
    pub nmse_db: f64,
    /// Seconds since training started.
    pub wall_time: f64,
}

/// Per-iteration training trace. Iteration 0 is the initial point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    records: Vec<HistoryRecord>,
}

impl TrainHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record; iterations must strictly increase.
    pub fn push(&mut self, rec: HistoryRecord) {
        if let Some(last) = self.records.last() {
            assert!(
                rec.iter > last.iter,
                "history iterations must increase ({} after {})",
                rec.iter,
                last.iter
            );
        }
        self.records.push(rec);
    }

    pub fn records(&self) -> &[HistoryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&HistoryRecord> {
        self.records.last()
    }

    /// Latest record with `iter <= at`.
    pub fn at(&self, at: usize) -> Option<&HistoryRecord> {
        let idx = self.records.partition_point(|r| r.iter <= at);
        idx.checked_sub(1).map(|i| &self.records[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(iter: usize, loss: f64) -> HistoryRecord {
        HistoryRecord {
            iter,
            loss,
            nmse_db: 0.0,
            wall_time: 0.0,
        }
    }

    #[test]
    fn history_lookup() {
        let mut h = TrainHistory::new();
        h.push(rec(0, 3.0));
        h.push(rec(5, 2.0));
        h.push(rec(10, 1.0));
        assert_eq!(h.at(4).unwrap().loss, 3.0);
        assert_eq!(h.at(5).unwrap().loss, 2.0);
        assert_eq!(h.at(1000).unwrap().loss, 1.0);
        assert_eq!(h.len(), 3);
    }

    #[test]
    #[should_panic]
    fn history_rejects_non_increasing() {
        let mut h = TrainHistory::new();
        h.push(rec(2, 1.0));
        h.push(rec(2, 1.0));
    }
}
