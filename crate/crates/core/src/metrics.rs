//! Forecast accuracy metrics and pattern deviation between detectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::NormalizedSeries;

/// Errors raised while computing metrics.
#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric input is empty")]
    EmptyInput,
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("value at index {index} is not finite")]
    NonFiniteValue { index: usize },
    #[error("actual speed {value} at index {index} is not positive")]
    NonPositiveActual { index: usize, value: f64 },
    #[error("denominator value {value} at index {index} is not positive")]
    NonPositiveDenominator { index: usize, value: f64 },
}

/// Aligned actual and predicted speeds for one evaluation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPair {
    actual: Vec<f64>,
    predicted: Vec<f64>,
}

impl ForecastPair {
    /// Pairs actual observations with predictions of the same length.
    pub fn new(actual: Vec<f64>, predicted: Vec<f64>) -> Result<Self, MetricError> {
        if actual.is_empty() {
            return Err(MetricError::EmptyInput);
        }
        if actual.len() != predicted.len() {
            return Err(MetricError::LengthMismatch {
                left: actual.len(),
                right: predicted.len(),
            });
        }
        for (index, value) in actual.iter().chain(predicted.iter()).enumerate() {
            if !value.is_finite() {
                return Err(MetricError::NonFiniteValue {
                    index: index % actual.len(),
                });
            }
        }
        Ok(ForecastPair { actual, predicted })
    }

    pub fn actual(&self) -> &[f64] {
        &self.actual
    }

    pub fn predicted(&self) -> &[f64] {
        &self.predicted
    }

    pub fn len(&self) -> usize {
        self.actual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actual.is_empty()
    }
}

/// Average absolute relative error of predictions against actual speeds.
///
/// # Errors
///
/// `NonPositiveActual` when any actual speed is zero or negative, since each
/// term divides by it.
pub fn aare(pair: &ForecastPair) -> Result<f64, MetricError> {
    for (index, &value) in pair.actual.iter().enumerate() {
        if value <= 0.0 {
            return Err(MetricError::NonPositiveActual { index, value });
        }
    }
    let sum: f64 = pair
        .actual
        .iter()
        .zip(&pair.predicted)
        .map(|(a, p)| (a - p).abs() / a)
        .sum();
    Ok(sum / pair.len() as f64)
}

/// Average absolute error in speed units.
pub fn aae(pair: &ForecastPair) -> Result<f64, MetricError> {
    let sum: f64 = pair
        .actual
        .iter()
        .zip(&pair.predicted)
        .map(|(a, p)| (a - p).abs())
        .sum();
    Ok(sum / pair.len() as f64)
}

/// Root mean squared error in speed units.
pub fn rmse(pair: &ForecastPair) -> Result<f64, MetricError> {
    let sum: f64 = pair
        .actual
        .iter()
        .zip(&pair.predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .sum();
    Ok((sum / pair.len() as f64).sqrt())
}

/// Average absolute relative deviation between two detectors' normalized
/// patterns.
///
/// The measure is asymmetric: every term divides by the first series, so
/// `aard(a, b)` and `aard(b, a)` differ in general.
pub fn aard(denominator: &NormalizedSeries, other: &NormalizedSeries) -> Result<f64, MetricError> {
    if denominator.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    if denominator.len() != other.len() {
        return Err(MetricError::LengthMismatch {
            left: denominator.len(),
            right: other.len(),
        });
    }
    let mut sum = 0.0;
    for (index, (&d, &o)) in denominator.values().iter().zip(other.values()).enumerate() {
        if d <= 0.0 {
            return Err(MetricError::NonPositiveDenominator { index, value: d });
        }
        sum += (d - o).abs() / d;
    }
    Ok(sum / denominator.len() as f64)
}

/// Accuracy of one model over one evaluation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub aare: f64,
    pub aae: f64,
    pub rmse: f64,
    /// Number of evaluated predictions.
    pub points: usize,
}

impl AccuracyReport {
    /// Computes all three metrics over one forecast window.
    pub fn from_pair(pair: &ForecastPair) -> Result<Self, MetricError> {
        Ok(AccuracyReport {
            aare: aare(pair)?,
            aae: aae(pair)?,
            rmse: rmse(pair)?,
            points: pair.len(),
        })
    }
}

/// Mean and sample standard deviation of each metric over several models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub mean_aare: f64,
    pub std_aare: f64,
    pub mean_aae: f64,
    pub std_aae: f64,
    pub mean_rmse: f64,
    pub std_rmse: f64,
    /// Number of reports aggregated.
    pub reports: usize,
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Averages per-model reports into one summary.
pub fn average_reports(reports: &[AccuracyReport]) -> Result<ReportSummary, MetricError> {
    if reports.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let aares: Vec<f64> = reports.iter().map(|r| r.aare).collect();
    let aaes: Vec<f64> = reports.iter().map(|r| r.aae).collect();
    let rmses: Vec<f64> = reports.iter().map(|r| r.rmse).collect();
    let (mean_aare, std_aare) = mean_and_std(&aares);
    let (mean_aae, std_aae) = mean_and_std(&aaes);
    let (mean_rmse, std_rmse) = mean_and_std(&rmses);
    Ok(ReportSummary {
        mean_aare,
        std_aare,
        mean_aae,
        std_aae,
        mean_rmse,
        std_rmse,
        reports: reports.len(),
    })
}
