//! Core building blocks for deterministic traffic speed forecasting: detector
//! series types, accuracy metrics, a from-scratch LSTM engine, and a
//! derivative-free hyperparameter tuner.

pub mod hyper;
pub mod lstm;
pub mod metrics;
pub mod tuner;
pub mod types;

pub use hyper::{snap_to_grid, GridError, HyperParams};
pub use lstm::{gradient_check, train, LstmError, LstmModel, TrainConfig};
pub use tuner::{
    tune, AxisChoice, Evaluation, ObjectiveError, SearchSpace, TraceEntry, TuneError,
    TuneOptions, TuneOutcome,
};
pub use metrics::{aae, aard, aare, rmse, AccuracyReport, ForecastPair, MetricError};
pub use types::{DetectorId, NormalizedSeries, SeriesError, SpeedSeries, Thresholds};

/// Reference speed in mph used to normalize raw speeds when no override is given.
pub const DEFAULT_REFERENCE_SPEED: f64 = 70.0;

/// Number of past observations fed to the forecaster for one prediction.
pub const DEFAULT_LOOKBACK: usize = 12;
