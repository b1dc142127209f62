//! Detector identifiers, speed series containers, and normalization.

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while constructing or transforming series data.
#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("detector id must not be empty")]
    EmptyId,
    #[error("series for detector {detector} has no values")]
    EmptySeries { detector: String },
    #[error("interval must be a positive number of minutes")]
    NonPositiveInterval,
    #[error("speed at index {index} is not finite")]
    NonFiniteSpeed { index: usize },
    #[error("speed {value} at index {index} is not positive")]
    NonPositiveSpeed { index: usize, value: f64 },
    #[error("reference speed {0} is not positive")]
    NonPositiveReference(f64),
}

/// Unique name of a traffic detector.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DetectorId(String);

impl DetectorId {
    /// Creates an id from a non-empty string.
    pub fn new(id: impl Into<String>) -> Result<Self, SeriesError> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(SeriesError::EmptyId);
        }
        Ok(DetectorId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for DetectorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Evenly spaced speed observations from one detector.
///
/// Values are miles per hour, strictly positive and finite. Observation `k`
/// is timestamped `start + k * interval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedSeries {
    detector: DetectorId,
    interval_minutes: u32,
    start: DateTime<Utc>,
    values: Vec<f64>,
}

impl SpeedSeries {
    /// Creates a series, validating every observation.
    ///
    /// # Errors
    ///
    /// `EmptySeries` when `values` is empty, `NonPositiveInterval` when the
    /// spacing is zero, and `NonFiniteSpeed` / `NonPositiveSpeed` for bad
    /// observations.
    pub fn new(
        detector: DetectorId,
        interval_minutes: u32,
        start: DateTime<Utc>,
        values: Vec<f64>,
    ) -> Result<Self, SeriesError> {
        if values.is_empty() {
            return Err(SeriesError::EmptySeries {
                detector: detector.as_str().to_owned(),
            });
        }
        if interval_minutes == 0 {
            return Err(SeriesError::NonPositiveInterval);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(SeriesError::NonFiniteSpeed { index });
            }
            if value <= 0.0 {
                return Err(SeriesError::NonPositiveSpeed { index, value });
            }
        }
        Ok(SpeedSeries {
            detector,
            interval_minutes,
            start,
            values,
        })
    }

    pub fn detector(&self) -> &DetectorId {
        &self.detector
    }

    pub fn interval_minutes(&self) -> u32 {
        self.interval_minutes
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Timestamp of observation `index`.
    pub fn timestamp_at(&self, index: usize) -> DateTime<Utc> {
        self.start + Duration::minutes(self.interval_minutes as i64 * index as i64)
    }

    /// Observations per day at this interval, rounding down.
    pub fn slots_per_day(&self) -> usize {
        (24 * 60 / self.interval_minutes) as usize
    }

    /// Copies the half-open index range `[from, to)` into a new series with
    /// an adjusted start timestamp.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self, SeriesError> {
        SpeedSeries::new(
            self.detector.clone(),
            self.interval_minutes,
            self.timestamp_at(from),
            self.values[from..to].to_vec(),
        )
    }

    /// Divides every speed by `reference`.
    ///
    /// Values above `reference` map above 1.0 and are kept as is.
    pub fn normalize(&self, reference: f64) -> Result<NormalizedSeries, SeriesError> {
        if !(reference.is_finite() && reference > 0.0) {
            return Err(SeriesError::NonPositiveReference(reference));
        }
        let values = self.values.iter().map(|v| v / reference).collect();
        Ok(NormalizedSeries {
            detector: self.detector.clone(),
            values,
        })
    }
}

/// A speed series rescaled to its reference speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSeries {
    detector: DetectorId,
    values: Vec<f64>,
}

impl NormalizedSeries {
    /// Builds a normalized series from already rescaled values.
    ///
    /// # Errors
    ///
    /// `EmptySeries` without values, `NonFiniteSpeed` on NaN or infinity.
    pub fn new(detector: DetectorId, values: Vec<f64>) -> Result<Self, SeriesError> {
        if values.is_empty() {
            return Err(SeriesError::EmptySeries {
                detector: detector.as_str().to_owned(),
            });
        }
        for (index, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(SeriesError::NonFiniteSpeed { index });
            }
        }
        Ok(NormalizedSeries { detector, values })
    }

    pub fn detector(&self) -> &DetectorId {
        &self.detector
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Accuracy thresholds steering customization and sharing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// A model counts as accurate enough when its relative prediction error
    /// stays at or below this bound.
    pub aare: f64,
    /// Two detectors count as similar when their relative pattern deviation
    /// stays below this bound. Zero disables sharing: no pair is ever
    /// similar enough.
    pub aard: f64,
}

impl Thresholds {
    pub fn new(aare: f64, aard: f64) -> Result<Self, SeriesError> {
        if !(aare.is_finite() && aare > 0.0) {
            return Err(SeriesError::NonPositiveReference(aare));
        }
        if !(aard.is_finite() && aard >= 0.0) {
            return Err(SeriesError::NonPositiveReference(aard));
        }
        Ok(Thresholds { aare, aard })
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            aare: 0.05,
            aard: 0.1,
        }
    }
}
