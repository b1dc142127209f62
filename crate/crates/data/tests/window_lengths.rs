use disttune_core::TrainConfig;
use disttune_data::{base_pattern, drifting_series, window_study, DriftSpec, SLOTS_PER_DAY};

#[test]
fn drifting_detector_favors_the_short_window() {
    let spec = DriftSpec {
        weeks: 2,
        drift_per_week: 0.2,
        seed: 7,
        ..DriftSpec::default()
    };
    let series = drifting_series(&spec).unwrap();
    assert_eq!(series.values().len(), (2 * 5 + 1) * SLOTS_PER_DAY);

    let cfg = TrainConfig::default();
    let rows = window_study(&series, &[1, 2], &cfg).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(
        rows[0].aare < rows[1].aare,
        "1-week AARE {} should beat 2-week AARE {}",
        rows[0].aare,
        rows[1].aare
    );
    assert!(rows[0].work < rows[1].work);
    assert!(rows[0].train_points == 5 * SLOTS_PER_DAY);
    assert!(rows[1].train_points == 10 * SLOTS_PER_DAY);
}

#[test]
fn zero_drift_control_still_reports_rows() {
    let spec = DriftSpec {
        weeks: 2,
        drift_per_week: 0.0,
        seed: 3,
        ..DriftSpec::default()
    };
    let series = drifting_series(&spec).unwrap();
    let cfg = TrainConfig::default();
    let rows = window_study(&series, &[1, 2], &cfg).unwrap();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert!(row.aare.is_finite());
        assert!(row.rmse >= row.aae);
    }
    assert!(rows[0].work < rows[1].work);
}

#[test]
fn study_rejects_short_series() {
    let spec = DriftSpec {
        weeks: 1,
        ..DriftSpec::default()
    };
    let series = drifting_series(&spec).unwrap();
    assert!(window_study(&series, &[1, 4], &TrainConfig::default()).is_err());
}

#[test]
fn fresh_days_stay_exact_while_old_days_drift() {
    let spec = DriftSpec {
        weeks: 2,
        drift_per_week: 0.2,
        noise_std: 0.0,
        ..DriftSpec::default()
    };
    let series = drifting_series(&spec).unwrap();
    let values = series.values();
    let days: Vec<&[f64]> = values.chunks(SLOTS_PER_DAY).collect();
    assert_eq!(days.len(), 11);

    let profile = base_pattern(spec.pattern);
    for day in 5..11 {
        for (value, base) in days[day].iter().zip(&profile) {
            assert!(
                (value - base).abs() < 1e-12,
                "fresh day {day} should repeat the base pattern exactly"
            );
        }
    }

    let mean = |day: &[f64]| day.iter().sum::<f64>() / SLOTS_PER_DAY as f64;
    assert!(
        mean(days[0]) < mean(days[5]) - 1.0,
        "oldest day should lean toward the slower legacy regime"
    );
    let deviates = days[0]
        .iter()
        .zip(&profile)
        .any(|(value, base)| (value - base).abs() > 1.0);
    assert!(deviates, "oldest day should carry degraded measurement noise");
}
