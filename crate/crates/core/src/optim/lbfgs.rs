use std::collections::VecDeque;

use super::line_search::{line_search, WolfeParams};
use super::LossProblem;
use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, norm};

/// Curvature pairs with `<d, g> <= CURVATURE_THRESHOLD * |d| |g|` are dropped.
pub const CURVATURE_THRESHOLD: f64 = 1e-10;

/// `-H grad`, with `H` the inverse-Hessian approximation built from `pairs`
/// (oldest first) on top of `h0_scale * I`.
pub fn two_loop_direction<'a, I>(grad: &[f64], pairs: I, h0_scale: f64) -> Vec<f64>
where
    I: DoubleEndedIterator<Item = &'a (Vec<f64>, Vec<f64>)> + Clone,
{
    let mut q = grad.to_vec();
    let mut alphas = Vec::new();
    for (s, y) in pairs.clone().rev() {
        let rho = 1.0 / dot(y, s);
        let alpha = rho * dot(s, &q);
        axpy(-alpha, y, &mut q);
        alphas.push((alpha, rho));
    }
    q.iter_mut().for_each(|v| *v *= h0_scale);
    for ((s, y), (alpha, rho)) in pairs.zip(alphas.into_iter().rev()) {
        let beta = rho * dot(y, &q);
        axpy(alpha - beta, s, &mut q);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Outcome of one [`LbfgsState::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LbfgsStep {
    Accepted {
        loss: f64,
        step: f64,
    },
    /// Gradient is exactly zero.
    Converged,
    /// Line search failed twice, the second time along steepest descent.
    Stuck,
}

#[derive(Debug, Clone)]
pub struct LbfgsState {
    memory: VecDeque<(Vec<f64>, Vec<f64>)>,
    capacity: usize,
    k: usize,
    evals: usize,
    current: Option<(f64, Vec<f64>)>,
    wolfe: WolfeParams,
}

impl LbfgsState {
    pub fn new(capacity: usize) -> Self {
        Self::with_wolfe(capacity, WolfeParams::default())
    }

    pub fn with_wolfe(capacity: usize, wolfe: WolfeParams) -> Self {
        assert!(capacity > 0, "L-BFGS memory must be positive");
        Self {
            memory: VecDeque::with_capacity(capacity),
            capacity,
            k: 0,
            evals: 0,
            current: None,
            wolfe,
        }
    }

    pub fn steps(&self) -> usize {
        self.k
    }

    /// Objective evaluations so far, line search included.
    pub fn evals(&self) -> usize {
        self.evals
    }

    pub fn memory_len(&self) -> usize {
        self.memory.len()
    }

    /// Stored `(delta, gamma)` pairs, oldest first.
    pub fn pairs(&self) -> impl DoubleEndedIterator<Item = &(Vec<f64>, Vec<f64>)> + Clone {
        self.memory.iter()
    }

    /// Loss and gradient at the current iterate, once evaluated.
    pub fn current(&self) -> Option<(f64, &[f64])> {
        self.current.as_ref().map(|(l, g)| (*l, g.as_slice()))
    }

    /// `<d, g> / <g, g>` of the newest pair, 1 with empty memory.
    pub fn initial_scale(&self) -> f64 {
        self.memory
            .back()
            .map_or(1.0, |(s, y)| dot(s, y) / dot(y, y))
    }

    pub fn direction(&self, grad: &[f64]) -> Vec<f64> {
        two_loop_direction(grad, self.memory.iter(), self.initial_scale())
    }

    fn ensure_current<P: LossProblem + ?Sized>(
        &mut self,
        problem: &P,
        theta: &[f64],
    ) -> Result<()> {
        if self.current.is_none() {
            let (loss, grad) = problem.eval(theta);
            self.evals += 1;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite { iter: self.k });
            }
            self.current = Some((loss, grad));
        }
        Ok(())
    }

    /// One quasi-Newton iteration; updates `theta` in place when accepted.
    pub fn step<P: LossProblem + ?Sized>(
        &mut self,
        problem: &P,
        theta: &mut Vec<f64>,
    ) -> Result<LbfgsStep> {
        self.ensure_current(problem, theta)?;
        let (loss, grad) = self.current.clone().expect("evaluated above");
        let gnorm = norm(&grad);
        if gnorm == 0.0 {
            return Ok(LbfgsStep::Converged);
        }

        let mut steepest = self.memory.is_empty();
        let mut dir = self.direction(&grad);
        if !(dot(&grad, &dir) < 0.0) {
            self.memory.clear();
            steepest = true;
            dir = grad.iter().map(|g| -g).collect();
        }
        let result = loop {
            let h0 = if steepest { 1.0 / gnorm } else { 1.0 };
            match line_search(problem, theta, loss, &grad, &dir, h0, self.wolfe) {
                Ok(r) => {
                    self.evals += r.evals;
                    break r;
                }
                Err(Error::LineSearch(_)) if !steepest => {
                    self.evals += self.wolfe.max_evals;
                    self.memory.clear();
                    steepest = true;
                    dir = grad.iter().map(|g| -g).collect();
                }
                Err(Error::LineSearch(_)) => {
                    self.evals += self.wolfe.max_evals;
                    return Ok(LbfgsStep::Stuck);
                }
                Err(e) => return Err(e),
            }
        };

        let delta: Vec<f64> = result
            .theta
            .iter()
            .zip(theta.iter())
            .map(|(a, b)| a - b)
            .collect();
        let gamma: Vec<f64> = result.grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        if dot(&delta, &gamma) > CURVATURE_THRESHOLD * norm(&delta) * norm(&gamma) {
            if self.memory.len() == self.capacity {
                self.memory.pop_front();
            }
            self.memory.push_back((delta, gamma));
        }
        *theta = result.theta;
        self.current = Some((result.loss, result.grad));
        self.k += 1;
        Ok(LbfgsStep::Accepted {
            loss: result.loss,
            step: result.step,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::FnProblem;

    fn rosenbrock() -> FnProblem<impl Fn(&[f64]) -> (f64, Vec<f64>)> {
        FnProblem::new(2, |x: &[f64]| {
            let (a, b) = (1.0, 100.0);
            let f = (a - x[0]).powi(2) + b * (x[1] - x[0] * x[0]).powi(2);
            let g = vec![
                -2.0 * (a - x[0]) - 4.0 * b * (x[1] - x[0] * x[0]) * x[0],
                2.0 * b * (x[1] - x[0] * x[0]),
            ];
            (f, g)
        })
    }

    #[test]
    fn first_step_is_steepest_descent() {
        let p = FnProblem::new(2, |x: &[f64]| {
            (
                x[0] * x[0] + 10.0 * x[1] * x[1],
                vec![2.0 * x[0], 20.0 * x[1]],
            )
        });
        let mut s = LbfgsState::new(100);
        let mut x = vec![1.0, 1.0];
        let LbfgsStep::Accepted { step, .. } = s.step(&p, &mut x).unwrap() else {
            panic!("expected accepted step");
        };
        let expected = [1.0 - step * 2.0, 1.0 - step * 20.0];
        assert!((x[0] - expected[0]).abs() < 1e-15 && (x[1] - expected[1]).abs() < 1e-15);
    }

    #[test]
    fn rosenbrock_converges() {
        let p = rosenbrock();
        let mut s = LbfgsState::new(100);
        let mut x = vec![-1.2, 1.0];
        let mut prev = f64::INFINITY;
        for _ in 0..100 {
            match s.step(&p, &mut x).unwrap() {
                LbfgsStep::Accepted { loss, .. } => {
                    assert!(loss <= prev);
                    prev = loss;
                }
                _ => break,
            }
            if norm(s.current().unwrap().1) < 1e-10 {
                break;
            }
        }
        assert!(
            (x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6,
            "{x:?}"
        );
        assert!(s.steps() <= 100);
    }

    #[test]
    fn zero_gradient_reports_converged() {
        let p = FnProblem::new(1, |x: &[f64]| (x[0] * x[0], vec![2.0 * x[0]]));
        let mut s = LbfgsState::new(5);
        let mut x = vec![0.0];
        assert_eq!(s.step(&p, &mut x).unwrap(), LbfgsStep::Converged);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let p = FnProblem::new(1, |_: &[f64]| (f64::NAN, vec![0.0]));
        let mut s = LbfgsState::new(5);
        assert!(matches!(
            s.step(&p, &mut vec![1.0]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn memory_is_bounded() {
        let p = rosenbrock();
        let mut s = LbfgsState::new(3);
        let mut x = vec![-1.2, 1.0];
        for _ in 0..20 {
            s.step(&p, &mut x).unwrap();
            assert!(s.memory_len() <= 3);
        }
        for (d, g) in s.pairs() {
            assert!(dot(d, g) > CURVATURE_THRESHOLD * norm(d) * norm(g));
        }
    }
}
