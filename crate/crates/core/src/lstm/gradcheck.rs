//! Finite-difference verification of the backpropagated gradients.

use rand::distributions::{Distribution, Uniform};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::train::{backward, forward_cached, init_model, Gradients, Scratch};
use super::{LstmError, LstmModel, TrainConfig};
use crate::hyper::HyperParams;

const STEP: f64 = 1e-5;

/// Compares analytic gradients against central finite differences on one
/// random window and returns the largest relative error over all
/// parameters.
///
/// Relative error of a pair `(a, n)` is `|a - n| / max(|a| + |n|, 1e-6)`.
/// The floor keeps difference-quotient roundoff on vanishing gradients from
/// drowning out real disagreement.
pub fn gradient_check(hyper: HyperParams, cfg: &TrainConfig) -> Result<f64, LstmError> {
    if cfg.lookback == 0 {
        return Err(LstmError::BadLookback);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x67726164));
    let dist = Uniform::new(0.3, 1.1);
    let window: Vec<f64> = (0..cfg.lookback).map(|_| dist.sample(&mut rng)).collect();
    let target = dist.sample(&mut rng);
    let init_seed = rng.next_u64();
    let model = init_model(hyper, cfg, init_seed, [0; 32]);
    let mut scratch = Scratch::new(&model);
    let mut grads = Gradients::zeroed(&model);
    let pred = forward_cached(&model, &window, &mut scratch);
    backward(&model, &window, target, pred, &mut scratch, &mut grads);
    let analytic = grads.flatten();
    let mut worst = 0.0f64;
    for index in 0..model.param_count() {
        let numeric = central_difference(&model, index, &window, target);
        let a = analytic[index];
        let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6);
        worst = worst.max(err);
    }
    Ok(worst)
}

fn central_difference(model: &LstmModel, index: usize, window: &[f64], target: f64) -> f64 {
    let mut probe = model.clone();
    probe.param_add(index, STEP);
    let plus = (probe.forward(window) - target).powi(2);
    probe.param_add(index, -2.0 * STEP);
    let minus = (probe.forward(window) - target).powi(2);
    (plus - minus) / (2.0 * STEP)
}
