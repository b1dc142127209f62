use disttune_core::{train, HyperParams, SpeedSeries, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// One row of the training-window comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowRow {
    pub weeks: usize,
    pub train_points: usize,
    /// Sliding windows trained per epoch times epochs; the
    /// hardware-independent stand-in for training time.
    pub work: u64,
    pub train_ms: u64,
    pub aare: f64,
    pub aae: f64,
    pub rmse: f64,
}

/// Trains the default-setting network once per requested window length on
/// the tail of `series` and scores each on the final day.
///
/// Window lengths are working-day weeks (5 days each). The series must end
/// with the test day and reach back far enough for the longest window.
///
/// # Errors
///
/// `BadSplit` when the series is too short, plus propagated training
/// errors.
pub fn window_study(
    series: &SpeedSeries,
    weeks_list: &[usize],
    cfg: &TrainConfig,
) -> Result<Vec<WindowRow>, DataError> {
    let slots = series.slots_per_day();
    let total = series.values().len();
    let longest = weeks_list.iter().copied().max().unwrap_or(0);
    if longest == 0 {
        return Err(DataError::BadSpec("no window lengths requested".into()));
    }
    let needed = (longest * 5 + 1) * slots;
    if total < needed {
        return Err(DataError::BadSplit {
            expected: needed,
            actual: total,
        });
    }

    let hyper = HyperParams::default_setting();
    let test_start = total - slots;
    let mut rows = Vec::with_capacity(weeks_list.len());
    for &weeks in weeks_list {
        let train_points = weeks * 5 * slots;
        let train_part = series.slice(test_start - train_points, test_start)?;
        let test_part = series.slice(test_start - cfg.lookback, total)?;

        let started = std::time::Instant::now();
        let model = train(&train_part, hyper, cfg)?;
        let train_ms = started.elapsed().as_millis() as u64;
        let report = model.evaluate(&test_part)?;

        let windows = (train_points - cfg.lookback) as u64;
        rows.push(WindowRow {
            weeks,
            train_points,
            work: windows * hyper.epochs() as u64,
            train_ms,
            aare: report.aare,
            aae: report.aae,
            rmse: report.rmse,
        });
    }
    Ok(rows)
}
