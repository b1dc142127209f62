//! Stacked LSTM speed forecaster with deterministic training.
//!
//! A model reads `lookback` consecutive normalized speeds and predicts the
//! next one. Layers use the gate order input, forget, candidate, output.
//! All arithmetic is sequential `f64`, so identical inputs and seeds produce
//! bit-identical models on a given platform.

mod gradcheck;
mod io;
mod train;

pub use gradcheck::gradient_check;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::hyper::HyperParams;
use crate::metrics::{AccuracyReport, ForecastPair, MetricError};
use crate::types::{SeriesError, SpeedSeries};
use crate::{DEFAULT_LOOKBACK, DEFAULT_REFERENCE_SPEED};

/// Errors raised by training, inference, and model persistence.
#[derive(Debug, Error)]
pub enum LstmError {
    #[error("series holds {len} values but lookback {lookback} needs at least {min}")]
    SeriesTooShort {
        len: usize,
        lookback: usize,
        min: usize,
    },
    #[error("lookback must be at least 1")]
    BadLookback,
    #[error("training diverged at epoch {epoch}, window {window}")]
    NonFiniteLoss { epoch: u32, window: usize },
    #[error("history must hold exactly {expected} values, got {got}")]
    WrongHistoryLength { expected: usize, got: usize },
    #[error("history value at index {index} is not finite")]
    NonFiniteHistory { index: usize },
    #[error("model file rejected: {0}")]
    Deserialize(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Settings shared by every training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Number of past observations per prediction.
    pub lookback: usize,
    /// Speed that maps to 1.0 after normalization.
    pub reference_speed: f64,
    /// Global seed mixed into each model's weight initialization.
    pub seed: u64,
    /// Upper bound on the global gradient norm per update.
    pub grad_clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lookback: DEFAULT_LOOKBACK,
            reference_speed: DEFAULT_REFERENCE_SPEED,
            seed: 0,
            grad_clip: 5.0,
        }
    }
}

/// Weights of one LSTM layer.
///
/// Gate rows are stacked input, forget, candidate, output. `w_input` is
/// `[4 * units, input_dim]` row-major and `w_recurrent` is
/// `[4 * units, units]`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LayerParams {
    pub(crate) input_dim: usize,
    pub(crate) units: usize,
    pub(crate) w_input: Vec<f64>,
    pub(crate) w_recurrent: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

impl LayerParams {
    pub(crate) fn zeroed(input_dim: usize, units: usize) -> Self {
        LayerParams {
            input_dim,
            units,
            w_input: vec![0.0; 4 * units * input_dim],
            w_recurrent: vec![0.0; 4 * units * units],
            bias: vec![0.0; 4 * units],
        }
    }
}

/// A trained speed forecaster for one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub(crate) hyper: HyperParams,
    pub(crate) lookback: usize,
    pub(crate) reference_speed: f64,
    /// Seed of the weight initialization stream.
    pub(crate) seed: u64,
    /// Digest of the series the model was trained on.
    pub(crate) train_fingerprint: [u8; 32],
    pub(crate) layers: Vec<LayerParams>,
    pub(crate) head_weight: Vec<f64>,
    pub(crate) head_bias: f64,
}

impl LstmModel {
    pub fn hyper(&self) -> HyperParams {
        self.hyper
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn reference_speed(&self) -> f64 {
        self.reference_speed
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn train_fingerprint(&self) -> &[u8; 32] {
        &self.train_fingerprint
    }

    /// Predicts the speed following `history`, a slice of the most recent
    /// `lookback` raw speeds in mph.
    pub fn predict_next(&self, history: &[f64]) -> Result<f64, LstmError> {
        if history.len() != self.lookback {
            return Err(LstmError::WrongHistoryLength {
                expected: self.lookback,
                got: history.len(),
            });
        }
        if let Some(index) = history.iter().position(|v| !v.is_finite()) {
            return Err(LstmError::NonFiniteHistory { index });
        }
        let window: Vec<f64> = history.iter().map(|v| v / self.reference_speed).collect();
        Ok(self.forward(&window) * self.reference_speed)
    }

    /// Predicts every test observation past the first `lookback` values,
    /// feeding actual observations back as history.
    pub fn predictions(&self, test: &SpeedSeries) -> Result<ForecastPair, LstmError> {
        let values = test.values();
        if values.len() < self.lookback + 1 {
            return Err(LstmError::SeriesTooShort {
                len: values.len(),
                lookback: self.lookback,
                min: self.lookback + 1,
            });
        }
        let mut actual = Vec::with_capacity(values.len() - self.lookback);
        let mut predicted = Vec::with_capacity(values.len() - self.lookback);
        let mut window = vec![0.0; self.lookback];
        for q in self.lookback..values.len() {
            for (w, v) in window.iter_mut().zip(&values[q - self.lookback..q]) {
                *w = v / self.reference_speed;
            }
            actual.push(values[q]);
            predicted.push(self.forward(&window) * self.reference_speed);
        }
        Ok(ForecastPair::new(actual, predicted)?)
    }

    /// Scores the model over a held-out series.
    pub fn evaluate(&self, test: &SpeedSeries) -> Result<AccuracyReport, LstmError> {
        let pair = self.predictions(test)?;
        Ok(AccuracyReport::from_pair(&pair)?)
    }

    /// Runs the network over one normalized window and returns the
    /// normalized prediction.
    pub(crate) fn forward(&self, window: &[f64]) -> f64 {
        let units = self.hyper.units() as usize;
        let depth = self.layers.len();
        let mut h = vec![0.0; depth * units];
        let mut c = vec![0.0; depth * units];
        let mut gates = vec![0.0; 4 * units];
        let mut input = vec![0.0; units];
        for &x in window {
            let scalar = [x];
            for (l, layer) in self.layers.iter().enumerate() {
                let x_in: &[f64] = if l == 0 { &scalar } else { &input };
                layer.gate_preactivations(x_in, &h[l * units..(l + 1) * units], &mut gates);
                let c_l = &mut c[l * units..(l + 1) * units];
                let h_l = &mut h[l * units..(l + 1) * units];
                for u in 0..units {
                    let i = sigmoid(gates[u]);
                    let f = sigmoid(gates[units + u]);
                    let g = gates[2 * units + u].tanh();
                    let o = sigmoid(gates[3 * units + u]);
                    c_l[u] = f * c_l[u] + i * g;
                    h_l[u] = o * c_l[u].tanh();
                }
                input.copy_from_slice(h_l);
            }
        }
        let top = &h[(depth - 1) * units..];
        dot(&self.head_weight, top) + self.head_bias
    }

    /// Digest of a training series, stored so a model can be matched to the
    /// data that produced it.
    pub fn fingerprint_of(series: &SpeedSeries) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(series.detector().as_str().as_bytes());
        hasher.update(series.interval_minutes().to_le_bytes());
        hasher.update(series.start().timestamp().to_le_bytes());
        for v in series.values() {
            hasher.update(v.to_le_bytes());
        }
        hasher.finalize().into()
    }
}

impl LayerParams {
    /// Writes `bias + w_input x + w_recurrent h_prev` into `out`.
    pub(crate) fn gate_preactivations(&self, x: &[f64], h_prev: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        matvec_acc(&self.w_input, self.input_dim, x, out);
        matvec_acc(&self.w_recurrent, self.units, h_prev, out);
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out[r] += sum_k w[r][k] * x[k]` for a row-major `w` with `cols` columns.
pub(crate) fn matvec_acc(w: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
    for (row, out_r) in w.chunks_exact(cols).zip(out.iter_mut()) {
        *out_r += dot(row, x);
    }
}

/// `out[k] += sum_r w[r][k] * v[r]`, the transposed product.
pub(crate) fn matvec_t_acc(w: &[f64], cols: usize, v: &[f64], out: &mut [f64]) {
    for (row, vr) in w.chunks_exact(cols).zip(v) {
        for (out_k, w_rk) in out.iter_mut().zip(row) {
            *out_k += w_rk * vr;
        }
    }
}

pub use train::train;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::DetectorId;
    use chrono::{TimeZone, Utc};

    pub(crate) fn series_from(id: &str, values: Vec<f64>) -> SpeedSeries {
        let start = Utc.with_ymd_and_hms(2017, 10, 16, 0, 0, 0).unwrap();
        SpeedSeries::new(DetectorId::new(id).unwrap(), 5, start, values).unwrap()
    }

    #[test]
    fn rejects_short_series() {
        let series = series_from("d1", vec![60.0; 13]);
        let err = train(
            &series,
            HyperParams::default_setting(),
            &TrainConfig::default(),
        );
        assert!(matches!(err, Err(LstmError::SeriesTooShort { min: 14, .. })));
    }

    #[test]
    fn rejects_wrong_history_length() {
        let series = series_from("d1", vec![60.0; 40]);
        let cfg = TrainConfig {
            lookback: 4,
            ..TrainConfig::default()
        };
        let model = train(&series, HyperParams::default_setting(), &cfg).unwrap();
        assert!(matches!(
            model.predict_next(&[60.0; 3]),
            Err(LstmError::WrongHistoryLength {
                expected: 4,
                got: 3
            })
        ));
    }

    #[test]
    fn zero_network_head_gradient_matches_finite_difference() {
        let hyper = HyperParams::new(0.01, 1, 2, 100).unwrap();
        let mut model = LstmModel {
            hyper,
            lookback: 3,
            reference_speed: 70.0,
            seed: 0,
            train_fingerprint: [0; 32],
            layers: vec![LayerParams::zeroed(1, 2)],
            head_weight: vec![0.0; 2],
            head_bias: 0.0,
        };
        let window = [0.0; 3];
        let target = 0.0;
        let pred = model.forward(&window);
        let analytic = 2.0 * (pred - target);
        let h = 1e-5;
        model.head_bias = h;
        let plus = (model.forward(&window) - target).powi(2);
        model.head_bias = -h;
        let minus = (model.forward(&window) - target).powi(2);
        let numeric = (plus - minus) / (2.0 * h);
        assert!((analytic - numeric).abs() < 1e-8);
    }
}
