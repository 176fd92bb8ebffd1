//! Central finite-difference checks of the analytic gradients.

use imd2_core::cheb::ChebyshevModel;
use imd2_core::nn::{Activation, NnModel, NnShape};
use imd2_core::signal::DelaySet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Relative error, with the denominator floored at 1e-4: below that, central
/// differences at h = 1e-5 resolve only ~1e-11 absolute.
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

#[test]
fn nn_backward_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for case in 0..100 {
        let m = rng.gen_range(1..=4);
        let depth = rng.gen_range(1..=3);
        let mut widths: Vec<usize> = (0..depth).map(|_| rng.gen_range(1..=4)).collect();
        widths.push(1);
        let activation = [Activation::Tanh, Activation::Sigmoid][case % 2];
        let shape = NnShape {
            delays: DelaySet::contiguous(m).unwrap(),
            widths,
            activation,
        };
        let model = NnModel::init_weights(shape, 1.0, rng.gen()).unwrap();
        let input: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
        let upstream = rng.gen_range(-2.0..2.0);
        let grad = model.backward(&input, upstream).unwrap();
        let params = model.flatten();
        for i in 0..params.len() {
            let mut probe = model.clone();
            let mut p = params.clone();
            p[i] += h;
            probe.unflatten(&p).unwrap();
            let up = probe.forward(&input).unwrap();
            p[i] -= 2.0 * h;
            probe.unflatten(&p).unwrap();
            let down = probe.forward(&input).unwrap();
            let numeric = upstream * (up - down) / (2.0 * h);
            worst = worst.max(rel_err(grad[i], numeric));
        }
    }
    assert!(worst <= 1e-6, "worst relative error {worst:e}");
}

#[test]
fn chebyshev_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let k = rng.gen_range(1..=3);
        let order = rng.gen_range(1..=8);
        let theta: Vec<f64> = (0..k * order).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let model =
            ChebyshevModel::with_theta(DelaySet::contiguous(k).unwrap(), order, 1.0, theta.clone())
                .unwrap();
        let row: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let grad = model.gradient(&row).unwrap();
        for i in 0..theta.len() {
            let mut p = theta.clone();
            p[i] += h;
            let up = ChebyshevModel::with_theta(model.delays(), order, 1.0, p.clone())
                .unwrap()
                .forward(&row)
                .unwrap();
            p[i] -= 2.0 * h;
            let down = ChebyshevModel::with_theta(model.delays(), order, 1.0, p)
                .unwrap()
                .forward(&row)
                .unwrap();
            worst = worst.max(rel_err(grad[i], (up - down) / (2.0 * h)));
        }
    }
    assert!(worst <= 1e-6, "worst relative error {worst:e}");
}
