use super::LossProblem;
use crate::error::{Error, Result};
use crate::matrix::dot;

/// Strong Wolfe constants and evaluation budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WolfeParams {
    pub c1: f64,
    pub c2: f64,
    pub max_evals: usize,
    pub max_step: f64,
    /// After an acceptable step is found, try the cubic-interpolated
    /// minimizer once and keep it if it also passes. Exact on quadratics.
    pub refine: bool,
}

impl Default for WolfeParams {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.9,
            max_evals: 50,
            max_step: 1e10,
            refine: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LineSearchResult {
    pub step: f64,
    pub theta: Vec<f64>,
    pub loss: f64,
    pub grad: Vec<f64>,
    pub evals: usize,
}

struct Trial {
    step: f64,
    theta: Vec<f64>,
    loss: f64,
    grad: Vec<f64>,
    slope: f64,
}

struct Ray<'a, P: ?Sized> {
    problem: &'a P,
    origin: &'a [f64],
    dir: &'a [f64],
    evals: usize,
}

impl<P: LossProblem + ?Sized> Ray<'_, P> {
    fn at(&mut self, step: f64) -> Trial {
        let theta: Vec<f64> = self
            .origin
            .iter()
            .zip(self.dir)
            .map(|(x, d)| x + step * d)
            .collect();
        let (loss, grad) = self.problem.eval(&theta);
        self.evals += 1;
        let slope = dot(&grad, self.dir);
        let (loss, slope) = if loss.is_finite() && slope.is_finite() {
            (loss, slope)
        } else {
            (f64::INFINITY, f64::NAN)
        };
        Trial {
            step,
            theta,
            loss,
            grad,
            slope,
        }
    }
}

/// One cubic-interpolation step from an accepted trial `t` using a second
/// known point `other`; keeps the better of the two acceptable points.
fn refine<P: LossProblem + ?Sized>(
    ray: &mut Ray<'_, P>,
    other: &Trial,
    t: Trial,
    ok: impl Fn(&Trial) -> bool,
    params: &WolfeParams,
    slope0: f64,
) -> LineSearchResult {
    let done = |t: Trial, ray: &Ray<'_, P>| accept(t, ray.evals);
    if !params.refine || ray.evals >= params.max_evals || t.slope.abs() <= 1e-12 * slope0.abs() {
        return done(t, ray);
    }
    let Some(x) = cubic_min(other.step, other.loss, other.slope, t.step, t.loss, t.slope) else {
        return done(t, ray);
    };
    if !(x > 0.0 && x <= params.max_step) || (x - t.step).abs() <= 1e-12 * t.step {
        return done(t, ray);
    }
    let r = ray.at(x);
    if ok(&r) && r.loss <= t.loss {
        done(r, ray)
    } else {
        done(t, ray)
    }
}

fn accept(t: Trial, evals: usize) -> LineSearchResult {
    LineSearchResult {
        step: t.step,
        theta: t.theta,
        loss: t.loss,
        grad: t.grad,
        evals,
    }
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`, or `None`
/// when it does not exist.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let denom = db - da + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let x = b - (b - a) * (db + d2 - d1) / denom;
    x.is_finite().then_some(x)
}

/// Step length along `dir` from `theta` satisfying the strong Wolfe
/// conditions. `loss0` and `grad0` are the objective at `theta`.
pub fn line_search<P: LossProblem + ?Sized>(
    problem: &P,
    theta: &[f64],
    loss0: f64,
    grad0: &[f64],
    dir: &[f64],
    initial_step: f64,
    params: WolfeParams,
) -> Result<LineSearchResult> {
    let slope0 = dot(grad0, dir);
    if !(slope0 < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "line search direction is not a descent direction (slope {slope0:e})"
        )));
    }
    if !(initial_step > 0.0 && initial_step.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "initial step must be positive, got {initial_step}"
        )));
    }
    let WolfeParams {
        c1,
        c2,
        max_evals,
        max_step,
        ..
    } = params;
    let armijo = |t: &Trial| t.loss <= loss0 + c1 * t.step * slope0 && t.loss < loss0;
    let curvature = |t: &Trial| t.slope.abs() <= -c2 * slope0;
    let wolfe = |t: &Trial| armijo(t) && curvature(t);

    let mut ray = Ray {
        problem,
        origin: theta,
        dir,
        evals: 0,
    };
    let mut prev = Trial {
        step: 0.0,
        theta: theta.to_vec(),
        loss: loss0,
        grad: grad0.to_vec(),
        slope: slope0,
    };
    let mut step = initial_step.min(max_step);
    let (mut lo, mut hi) = loop {
        if ray.evals >= max_evals {
            return Err(Error::LineSearch(format!(
                "no bracket after {max_evals} evaluations"
            )));
        }
        let t = ray.at(step);
        if !armijo(&t) || (prev.step > 0.0 && t.loss >= prev.loss) {
            break (prev, t);
        }
        if curvature(&t) {
            return Ok(refine(&mut ray, &prev, t, wolfe, &params, slope0));
        }
        if t.slope >= 0.0 {
            break (t, prev);
        }
        if step >= max_step {
            return Err(Error::LineSearch("step reached max_step".into()));
        }
        step = (2.0 * step).min(max_step);
        prev = t;
    };

    // zoom: `lo` satisfies sufficient decrease and has the lowest loss so far
    loop {
        if ray.evals >= max_evals {
            return Err(Error::LineSearch(format!(
                "zoom did not converge in {max_evals} evaluations"
            )));
        }
        let (a, b) = (lo.step.min(hi.step), lo.step.max(hi.step));
        let width = b - a;
        if width <= f64::EPSILON * b.max(1e-300) {
            return Err(Error::LineSearch("bracket collapsed".into()));
        }
        let guess = if hi.loss.is_finite() && hi.slope.is_finite() {
            cubic_min(lo.step, lo.loss, lo.slope, hi.step, hi.loss, hi.slope)
        } else {
            None
        };
        let step = match guess {
            Some(x) if x >= a + 0.1 * width && x <= b - 0.1 * width => x,
            _ => 0.5 * (a + b),
        };
        let t = ray.at(step);
        if !armijo(&t) || t.loss >= lo.loss {
            hi = t;
        } else {
            if curvature(&t) {
                return Ok(refine(&mut ray, &lo, t, wolfe, &params, slope0));
            }
            if t.slope * (hi.step - lo.step) >= 0.0 {
                hi = lo;
            }
            lo = t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::FnProblem;

    #[test]
    fn quadratic_1d() {
        let p = FnProblem::new(1, |t: &[f64]| (t[0] * t[0], vec![2.0 * t[0]]));
        let r = line_search(
            &p,
            &[1.0],
            1.0,
            &[2.0],
            &[-2.0],
            1.0,
            WolfeParams::default(),
        )
        .unwrap();
        assert!(r.loss < 1.0);
        assert!(r.loss <= 1.0 + 1e-4 * r.step * -4.0);
        assert!((2.0 * r.theta[0] * -2.0).abs() <= 0.9 * 4.0);
        // starting at the exact minimizer step is accepted immediately
        let r = line_search(
            &p,
            &[1.0],
            1.0,
            &[2.0],
            &[-2.0],
            0.5,
            WolfeParams::default(),
        )
        .unwrap();
        assert_eq!(r.step, 0.5);
        assert_eq!(r.evals, 1);
    }

    #[test]
    fn rejects_ascent_direction() {
        let p = FnProblem::new(1, |t: &[f64]| (t[0] * t[0], vec![2.0 * t[0]]));
        let err = line_search(&p, &[1.0], 1.0, &[2.0], &[1.0], 1.0, WolfeParams::default());
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn extrapolates_short_initial_step() {
        let p = FnProblem::new(1, |t: &[f64]| {
            ((t[0] - 100.0).powi(2), vec![2.0 * (t[0] - 100.0)])
        });
        let r = line_search(
            &p,
            &[0.0],
            1e4,
            &[-200.0],
            &[1.0],
            1.0,
            WolfeParams::default(),
        )
        .unwrap();
        assert!(r.step > 10.0);
    }

    #[test]
    fn backs_off_from_non_finite_region() {
        let p = FnProblem::new(1, |t: &[f64]| {
            if t[0] > 2.0 {
                (f64::NAN, vec![f64::NAN])
            } else {
                ((t[0] - 1.0).powi(2), vec![2.0 * (t[0] - 1.0)])
            }
        });
        let r = line_search(
            &p,
            &[0.0],
            1.0,
            &[-2.0],
            &[1.0],
            10.0,
            WolfeParams::default(),
        )
        .unwrap();
        assert!(r.loss < 1.0 && r.theta[0] <= 2.0);
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        // linear decrease: never satisfies curvature, keeps doubling
        let p = FnProblem::new(1, |t: &[f64]| (-t[0], vec![-1.0]));
        let params = WolfeParams {
            max_evals: 5,
            ..WolfeParams::default()
        };
        assert!(matches!(
            line_search(&p, &[0.0], 0.0, &[-1.0], &[1.0], 1.0, params),
            Err(Error::LineSearch(_))
        ));
    }
}
