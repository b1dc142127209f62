//! Gradient descent training with truncated backpropagation over windows.

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{dot, matvec_t_acc, sigmoid, LayerParams, LstmError, LstmModel, TrainConfig};
use crate::hyper::HyperParams;
use crate::types::{DetectorId, SpeedSeries};

/// Parameter gradients, shaped exactly like the model weights.
pub(crate) struct Gradients {
    layers: Vec<LayerParams>,
    head_weight: Vec<f64>,
    head_bias: f64,
}

impl Gradients {
    pub(crate) fn zeroed(model: &LstmModel) -> Self {
        Gradients {
            layers: model
                .layers
                .iter()
                .map(|l| LayerParams::zeroed(l.input_dim, l.units))
                .collect(),
            head_weight: vec![0.0; model.head_weight.len()],
            head_bias: 0.0,
        }
    }

    fn zero(&mut self) {
        for layer in &mut self.layers {
            layer.w_input.fill(0.0);
            layer.w_recurrent.fill(0.0);
            layer.bias.fill(0.0);
        }
        self.head_weight.fill(0.0);
        self.head_bias = 0.0;
    }

    fn squared_norm(&self) -> f64 {
        let mut sum = 0.0;
        for layer in &self.layers {
            sum += layer.w_input.iter().map(|g| g * g).sum::<f64>();
            sum += layer.w_recurrent.iter().map(|g| g * g).sum::<f64>();
            sum += layer.bias.iter().map(|g| g * g).sum::<f64>();
        }
        sum += self.head_weight.iter().map(|g| g * g).sum::<f64>();
        sum + self.head_bias * self.head_bias
    }

    /// Scales all gradients down when their global norm exceeds `clip`.
    fn clip(&mut self, clip: f64) {
        let norm = self.squared_norm().sqrt();
        if norm <= clip || norm == 0.0 {
            return;
        }
        let scale = clip / norm;
        for layer in &mut self.layers {
            layer.w_input.iter_mut().for_each(|g| *g *= scale);
            layer.w_recurrent.iter_mut().for_each(|g| *g *= scale);
            layer.bias.iter_mut().for_each(|g| *g *= scale);
        }
        self.head_weight.iter_mut().for_each(|g| *g *= scale);
        self.head_bias *= scale;
    }

    /// Gradients flattened in the canonical parameter order.
    pub(crate) fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend_from_slice(&layer.w_input);
            out.extend_from_slice(&layer.w_recurrent);
            out.extend_from_slice(&layer.bias);
        }
        out.extend_from_slice(&self.head_weight);
        out.push(self.head_bias);
        out
    }
}

impl LstmModel {
    pub(crate) fn param_count(&self) -> usize {
        let mut n = 0;
        for layer in &self.layers {
            n += layer.w_input.len() + layer.w_recurrent.len() + layer.bias.len();
        }
        n + self.head_weight.len() + 1
    }

    /// Adds `delta` to the parameter at `index` in canonical order.
    pub(crate) fn param_add(&mut self, index: usize, delta: f64) {
        let mut offset = 0;
        for layer in &mut self.layers {
            for tensor in [&mut layer.w_input, &mut layer.w_recurrent, &mut layer.bias] {
                if index < offset + tensor.len() {
                    tensor[index - offset] += delta;
                    return;
                }
                offset += tensor.len();
            }
        }
        if index < offset + self.head_weight.len() {
            self.head_weight[index - offset] += delta;
            return;
        }
        self.head_bias += delta;
    }

    fn apply_gradients(&mut self, grads: &Gradients, rate: f64) {
        for (layer, glayer) in self.layers.iter_mut().zip(&grads.layers) {
            for (p, g) in layer.w_input.iter_mut().zip(&glayer.w_input) {
                *p -= rate * g;
            }
            for (p, g) in layer.w_recurrent.iter_mut().zip(&glayer.w_recurrent) {
                *p -= rate * g;
            }
            for (p, g) in layer.bias.iter_mut().zip(&glayer.bias) {
                *p -= rate * g;
            }
        }
        for (p, g) in self.head_weight.iter_mut().zip(&grads.head_weight) {
            *p -= rate * g;
        }
        self.head_bias -= rate * grads.head_bias;
    }
}

/// Reusable forward and backward buffers for one architecture.
pub(crate) struct Scratch {
    depth: usize,
    units: usize,
    steps: usize,
    /// Post-activation gate values per layer and step, `[depth][steps][4u]`.
    gates: Vec<f64>,
    /// Cell states per layer and step, `[depth][steps][u]`.
    cells: Vec<f64>,
    /// `tanh` of each cell state, `[depth][steps][u]`.
    tanh_c: Vec<f64>,
    /// Hidden states per layer and step, `[depth][steps][u]`.
    hidden: Vec<f64>,
    preact: Vec<f64>,
    h_state: Vec<f64>,
    c_state: Vec<f64>,
    dh_carry: Vec<f64>,
    dc_carry: Vec<f64>,
    dh_t: Vec<f64>,
    da: Vec<f64>,
    dx_above: Vec<f64>,
    zeros: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(model: &LstmModel) -> Self {
        let depth = model.layers.len();
        let units = model.hyper.units() as usize;
        let steps = model.lookback;
        Scratch {
            depth,
            units,
            steps,
            gates: vec![0.0; depth * steps * 4 * units],
            cells: vec![0.0; depth * steps * units],
            tanh_c: vec![0.0; depth * steps * units],
            hidden: vec![0.0; depth * steps * units],
            preact: vec![0.0; 4 * units],
            h_state: vec![0.0; depth * units],
            c_state: vec![0.0; depth * units],
            dh_carry: vec![0.0; depth * units],
            dc_carry: vec![0.0; depth * units],
            dh_t: vec![0.0; units],
            da: vec![0.0; 4 * units],
            dx_above: vec![0.0; units],
            zeros: vec![0.0; units],
        }
    }

    fn slot(&self, layer: usize, step: usize) -> usize {
        (layer * self.steps + step) * self.units
    }

    fn gate_slot(&self, layer: usize, step: usize) -> usize {
        (layer * self.steps + step) * 4 * self.units
    }
}

/// Runs one window forward, filling the caches needed by `backward`.
pub(crate) fn forward_cached(model: &LstmModel, window: &[f64], scratch: &mut Scratch) -> f64 {
    let units = scratch.units;
    scratch.h_state.fill(0.0);
    scratch.c_state.fill(0.0);
    for (t, &x) in window.iter().enumerate() {
        let scalar = [x];
        for (l, layer) in model.layers.iter().enumerate() {
            let base = scratch.slot(l, t);
            let gate_base = scratch.gate_slot(l, t);
            {
                let x_in: &[f64] = if l == 0 {
                    &scalar
                } else {
                    let below = scratch.slot(l - 1, t);
                    &scratch.hidden[below..below + units]
                };
                layer.gate_preactivations(
                    x_in,
                    &scratch.h_state[l * units..(l + 1) * units],
                    &mut scratch.preact,
                );
            }
            for u in 0..units {
                let i = sigmoid(scratch.preact[u]);
                let f = sigmoid(scratch.preact[units + u]);
                let g = scratch.preact[2 * units + u].tanh();
                let o = sigmoid(scratch.preact[3 * units + u]);
                let c = f * scratch.c_state[l * units + u] + i * g;
                let tc = c.tanh();
                scratch.gates[gate_base + u] = i;
                scratch.gates[gate_base + units + u] = f;
                scratch.gates[gate_base + 2 * units + u] = g;
                scratch.gates[gate_base + 3 * units + u] = o;
                scratch.cells[base + u] = c;
                scratch.tanh_c[base + u] = tc;
                let h = o * tc;
                scratch.hidden[base + u] = h;
                scratch.h_state[l * units + u] = h;
                scratch.c_state[l * units + u] = c;
            }
        }
    }
    let top = scratch.slot(scratch.depth - 1, scratch.steps - 1);
    dot(&model.head_weight, &scratch.hidden[top..top + units]) + model.head_bias
}

/// Accumulates gradients of the squared error `(pred - target)^2` for one
/// window into `grads`.
pub(crate) fn backward(
    model: &LstmModel,
    window: &[f64],
    target: f64,
    pred: f64,
    scratch: &mut Scratch,
    grads: &mut Gradients,
) {
    let units = scratch.units;
    let depth = scratch.depth;
    let steps = scratch.steps;
    let dpred = 2.0 * (pred - target);
    let top = scratch.slot(depth - 1, steps - 1);
    for u in 0..units {
        grads.head_weight[u] += dpred * scratch.hidden[top + u];
    }
    grads.head_bias += dpred;
    scratch.dh_carry.fill(0.0);
    scratch.dc_carry.fill(0.0);
    for t in (0..steps).rev() {
        scratch.dx_above.fill(0.0);
        if t == steps - 1 {
            for u in 0..units {
                scratch.dx_above[u] = dpred * model.head_weight[u];
            }
        }
        for l in (0..depth).rev() {
            let base = scratch.slot(l, t);
            let gate_base = scratch.gate_slot(l, t);
            for u in 0..units {
                scratch.dh_t[u] = scratch.dh_carry[l * units + u] + scratch.dx_above[u];
            }
            let (c_prev_base, h_prev_base) = if t > 0 {
                (scratch.slot(l, t - 1), scratch.slot(l, t - 1))
            } else {
                (usize::MAX, usize::MAX)
            };
            for u in 0..units {
                let i = scratch.gates[gate_base + u];
                let f = scratch.gates[gate_base + units + u];
                let g = scratch.gates[gate_base + 2 * units + u];
                let o = scratch.gates[gate_base + 3 * units + u];
                let tc = scratch.tanh_c[base + u];
                let dc = scratch.dc_carry[l * units + u] + scratch.dh_t[u] * o * (1.0 - tc * tc);
                let c_prev = if t > 0 { scratch.cells[c_prev_base + u] } else { 0.0 };
                let di = dc * g;
                let df = dc * c_prev;
                let dg = dc * i;
                let do_ = scratch.dh_t[u] * tc;
                scratch.da[u] = di * i * (1.0 - i);
                scratch.da[units + u] = df * f * (1.0 - f);
                scratch.da[2 * units + u] = dg * (1.0 - g * g);
                scratch.da[3 * units + u] = do_ * o * (1.0 - o);
                scratch.dc_carry[l * units + u] = dc * f;
            }
            let scalar = [window[t]];
            let x: &[f64] = if l == 0 {
                &scalar
            } else {
                let below = scratch.slot(l - 1, t);
                &scratch.hidden[below..below + units]
            };
            let h_prev: &[f64] = if t > 0 {
                &scratch.hidden[h_prev_base..h_prev_base + units]
            } else {
                &scratch.zeros
            };
            let glayer = &mut grads.layers[l];
            outer_acc(&mut glayer.w_input, x.len(), &scratch.da, x);
            outer_acc(&mut glayer.w_recurrent, units, &scratch.da, h_prev);
            for (b, d) in glayer.bias.iter_mut().zip(&scratch.da) {
                *b += d;
            }
            let layer = &model.layers[l];
            let carry = &mut scratch.dh_carry[l * units..(l + 1) * units];
            carry.fill(0.0);
            matvec_t_acc(&layer.w_recurrent, units, &scratch.da, carry);
            if l > 0 {
                scratch.dx_above.fill(0.0);
                matvec_t_acc(
                    &layer.w_input,
                    layer.input_dim,
                    &scratch.da,
                    &mut scratch.dx_above,
                );
            }
        }
    }
}

/// `gw[r][k] += da[r] * x[k]` over a row-major gradient block.
fn outer_acc(gw: &mut [f64], cols: usize, da: &[f64], x: &[f64]) {
    for (row, d) in gw.chunks_exact_mut(cols).zip(da) {
        for (slot, xv) in row.iter_mut().zip(x) {
            *slot += d * xv;
        }
    }
}

fn derive_seed(detector: &DetectorId, hyper: &HyperParams, global: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"lstm-init");
    hasher.update(detector.as_str().as_bytes());
    hasher.update(hyper.learning_rate().to_le_bytes());
    hasher.update(hyper.layers().to_le_bytes());
    hasher.update(hyper.units().to_le_bytes());
    hasher.update(hyper.epochs().to_le_bytes());
    hasher.update(global.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Builds an untrained model with seeded uniform weights on (-0.08, 0.08),
/// zero biases, and forget-gate biases of 1.0.
pub(crate) fn init_model(
    hyper: HyperParams,
    cfg: &TrainConfig,
    seed: u64,
    fingerprint: [u8; 32],
) -> LstmModel {
    let units = hyper.units() as usize;
    let depth = hyper.layers() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new(-0.08, 0.08);
    let mut layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let input_dim = if l == 0 { 1 } else { units };
        let mut layer = LayerParams::zeroed(input_dim, units);
        for w in layer.w_input.iter_mut() {
            *w = dist.sample(&mut rng);
        }
        for w in layer.w_recurrent.iter_mut() {
            *w = dist.sample(&mut rng);
        }
        for b in layer.bias[units..2 * units].iter_mut() {
            *b = 1.0;
        }
        layers.push(layer);
    }
    let head_weight = (0..units).map(|_| dist.sample(&mut rng)).collect();
    LstmModel {
        hyper,
        lookback: cfg.lookback,
        reference_speed: cfg.reference_speed,
        seed,
        train_fingerprint: fingerprint,
        layers,
        head_weight,
        head_bias: 0.0,
    }
}

/// Trains a model on `series` with the given grid setting.
///
/// Runs exactly `hyper.epochs()` passes over every sliding window, visiting
/// them in a freshly shuffled order each pass and updating weights after
/// each window with gradient descent at `hyper.learning_rate()` under a
/// global gradient norm clip. The shuffle draws from its own seeded stream,
/// so identical inputs still produce bit-identical models.
///
/// # Errors
///
/// `SeriesTooShort` when fewer than `lookback + 2` values are available and
/// `NonFiniteLoss` when a prediction stops being finite.
pub fn train(
    series: &SpeedSeries,
    hyper: HyperParams,
    cfg: &TrainConfig,
) -> Result<LstmModel, LstmError> {
    if cfg.lookback == 0 {
        return Err(LstmError::BadLookback);
    }
    let min = cfg.lookback + 2;
    if series.len() < min {
        return Err(LstmError::SeriesTooShort {
            len: series.len(),
            lookback: cfg.lookback,
            min,
        });
    }
    let normalized = series.normalize(cfg.reference_speed)?;
    let seed = derive_seed(series.detector(), &hyper, cfg.seed);
    let fingerprint = LstmModel::fingerprint_of(series);
    let mut model = init_model(hyper, cfg, seed, fingerprint);
    let values = normalized.values().to_vec();
    let windows = values.len() - cfg.lookback;
    let mut scratch = Scratch::new(&model);
    let mut grads = Gradients::zeroed(&model);
    let rate = hyper.learning_rate();
    let mut order: Vec<usize> = (0..windows).collect();
    let mut order_rng = ChaCha8Rng::seed_from_u64(seed);
    order_rng.set_stream(1);
    for epoch in 0..hyper.epochs() {
        order.shuffle(&mut order_rng);
        for &w in &order {
            let window = &values[w..w + cfg.lookback];
            let target = values[w + cfg.lookback];
            let pred = forward_cached(&model, window, &mut scratch);
            if !pred.is_finite() {
                return Err(LstmError::NonFiniteLoss { epoch, window: w });
            }
            grads.zero();
            backward(&model, window, target, pred, &mut scratch, &mut grads);
            grads.clip(cfg.grad_clip);
            model.apply_gradients(&grads, rate);
        }
    }
    Ok(model)
}
