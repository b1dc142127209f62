use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use disttune_core::{DetectorId, SpeedSeries};

use crate::error::DataError;

const HEADER: &str = "timestamp,speed_mph";

/// A parsed detector file.
#[derive(Debug, Clone)]
pub struct LoadedSeries {
    pub series: SpeedSeries,
    /// Points filled in for small gaps.
    pub interpolated: usize,
}

/// Reads a detector CSV, naming the series after the file stem.
///
/// The expected layout is a `timestamp,speed_mph` header followed by
/// RFC 3339 timestamps in strictly increasing time. The sampling interval
/// is taken from the first two rows; gaps of one or two missing points are
/// linearly interpolated and counted, larger holes are refused.
///
/// # Errors
///
/// `Io`, `BadHeader`, `EmptyFile`, `Parse` (with the offending line),
/// `NonPositiveSpeed`, and `GapTooLarge`.
pub fn load_csv(path: &Path) -> Result<LoadedSeries, DataError> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| DataError::BadManifest(format!("unusable file name {}", path.display())))?;
    let id = DetectorId::new(stem)?;
    load_csv_as(path, id)
}

/// Reads a detector CSV under an explicit detector id.
pub fn load_csv_as(path: &Path, detector: DetectorId) -> Result<LoadedSeries, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| DataError::EmptyFile {
        path: display.clone(),
    })?;
    if header.trim_end() != HEADER {
        return Err(DataError::BadHeader {
            path: display,
            found: header.to_string(),
        });
    }

    let mut rows: Vec<(DateTime<Utc>, f64)> = Vec::new();
    for (index, line) in lines {
        let line_no = index + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (stamp, speed) = parse_row(line, &display, line_no)?;
        if speed <= 0.0 {
            return Err(DataError::NonPositiveSpeed {
                path: display,
                line: line_no,
                value: speed,
            });
        }
        if let Some(&(prev, _)) = rows.last() {
            if stamp <= prev {
                return Err(DataError::Parse {
                    path: display,
                    line: line_no,
                    message: format!("timestamp {stamp} does not increase past {prev}"),
                });
            }
        }
        rows.push((stamp, speed));
    }

    if rows.is_empty() {
        return Err(DataError::EmptyFile { path: display });
    }
    if rows.len() == 1 {
        return Err(DataError::Parse {
            path: display,
            line: 2,
            message: "need at least two rows to infer the sampling interval".to_string(),
        });
    }

    let interval = rows[1].0 - rows[0].0;
    let interval_minutes = interval.num_minutes();
    if interval_minutes <= 0 || interval != chrono::Duration::minutes(interval_minutes) {
        return Err(DataError::Parse {
            path: display,
            line: 3,
            message: format!("first two rows are {interval} apart, expected whole minutes"),
        });
    }

    let mut values = vec![rows[0].1];
    let mut interpolated = 0usize;
    let mut expected = rows[0].0 + interval;
    for (offset, &(stamp, speed)) in rows.iter().enumerate().skip(1) {
        let line_no = offset + 2;
        let delta = stamp - (expected - interval);
        let steps = delta.num_minutes() / interval_minutes;
        if delta != chrono::Duration::minutes(steps * interval_minutes) {
            return Err(DataError::Parse {
                path: display,
                line: line_no,
                message: format!("timestamp {stamp} is off the {interval_minutes}-minute cadence"),
            });
        }
        let missing = steps - 1;
        if missing > 2 {
            return Err(DataError::GapTooLarge {
                path: display,
                line: line_no,
                gap_minutes: missing * interval_minutes,
            });
        }
        let previous = *values.last().expect("seeded with the first row");
        for k in 1..=missing {
            let t = k as f64 / (missing + 1) as f64;
            values.push(previous + (speed - previous) * t);
            interpolated += 1;
        }
        values.push(speed);
        expected = stamp + interval;
    }

    let series = SpeedSeries::new(detector, interval_minutes as u32, rows[0].0, values)?;
    Ok(LoadedSeries {
        series,
        interpolated,
    })
}

fn parse_row(line: &str, path: &str, line_no: usize) -> Result<(DateTime<Utc>, f64), DataError> {
    let mut parts = line.trim_end().splitn(2, ',');
    let stamp_text = parts.next().unwrap_or("");
    let speed_text = parts.next().ok_or_else(|| DataError::Parse {
        path: path.to_string(),
        line: line_no,
        message: "expected two comma-separated fields".to_string(),
    })?;
    let stamp = DateTime::parse_from_rfc3339(stamp_text)
        .map_err(|e| DataError::Parse {
            path: path.to_string(),
            line: line_no,
            message: format!("bad timestamp `{stamp_text}`: {e}"),
        })?
        .with_timezone(&Utc);
    let speed: f64 = speed_text.trim().parse().map_err(|_| DataError::Parse {
        path: path.to_string(),
        line: line_no,
        message: format!("bad speed `{speed_text}`"),
    })?;
    if !speed.is_finite() {
        return Err(DataError::Parse {
            path: path.to_string(),
            line: line_no,
            message: format!("non-finite speed `{speed_text}`"),
        });
    }
    Ok((stamp, speed))
}

/// Writes a series back out in the same format `load_csv` reads.
///
/// Output is deterministic: fixed header, RFC 3339 UTC timestamps, shortest
/// round-trip float formatting.
pub fn write_csv(path: &Path, series: &SpeedSeries) -> Result<(), DataError> {
    let mut out = String::with_capacity(series.values().len() * 32);
    out.push_str(HEADER);
    out.push('\n');
    for (index, value) in series.values().iter().enumerate() {
        let stamp = series.timestamp_at(index);
        out.push_str(&stamp.to_rfc3339_opts(SecondsFormat::Secs, true));
        out.push(',');
        out.push_str(&format!("{value}"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| DataError::io(path, e))
}
