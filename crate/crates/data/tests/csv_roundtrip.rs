use chrono::DateTime;
use disttune_core::{DetectorId, SpeedSeries};
use disttune_data::{load_csv, split_train_test, write_csv, DataError};
use proptest::prelude::*;

fn series(detector: &str, values: Vec<f64>) -> SpeedSeries {
    SpeedSeries::new(
        DetectorId::new(detector).unwrap(),
        5,
        DateTime::from_timestamp(1_508_112_000, 0).unwrap(),
        values,
    )
    .unwrap()
}

#[test]
fn six_days_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d1.csv");
    let values: Vec<f64> = (0..6 * 288).map(|i| 40.0 + (i % 288) as f64 * 0.05).collect();
    let original = series("d1", values);
    write_csv(&path, &original).unwrap();

    let loaded = load_csv(&path).unwrap();
    assert_eq!(loaded.interpolated, 0);
    assert_eq!(loaded.series.values().len(), 1728);
    assert_eq!(loaded.series.detector().as_str(), "d1");
    assert_eq!(loaded.series.interval_minutes(), 5);
    assert_eq!(loaded.series.start(), original.start());
    for (a, b) in loaded.series.values().iter().zip(original.values()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn ten_minute_gap_interpolates_one_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gap.csv");
    let mut text = String::from("timestamp,speed_mph\n");
    text.push_str("2017-10-16T00:00:00Z,50\n");
    text.push_str("2017-10-16T00:05:00Z,52\n");
    text.push_str("2017-10-16T00:15:00Z,58\n");
    text.push_str("2017-10-16T00:20:00Z,60\n");
    std::fs::write(&path, text).unwrap();

    let loaded = load_csv(&path).unwrap();
    assert_eq!(loaded.interpolated, 1);
    assert_eq!(loaded.series.values(), &[50.0, 52.0, 55.0, 58.0, 60.0]);
}

#[test]
fn two_missing_points_interpolate_linearly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gap2.csv");
    let text = "timestamp,speed_mph\n\
        2017-10-16T00:00:00Z,50\n\
        2017-10-16T00:05:00Z,51\n\
        2017-10-16T00:20:00Z,60\n";
    std::fs::write(&path, text).unwrap();

    let loaded = load_csv(&path).unwrap();
    assert_eq!(loaded.interpolated, 2);
    assert_eq!(loaded.series.values(), &[50.0, 51.0, 54.0, 57.0, 60.0]);
}

#[test]
fn twenty_minute_hole_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hole.csv");
    let text = "timestamp,speed_mph\n\
        2017-10-16T00:00:00Z,50\n\
        2017-10-16T00:05:00Z,51\n\
        2017-10-16T00:25:00Z,60\n";
    std::fs::write(&path, text).unwrap();

    match load_csv(&path) {
        Err(DataError::GapTooLarge { line, gap_minutes, .. }) => {
            assert_eq!(line, 4);
            assert_eq!(gap_minutes, 15);
        }
        other => panic!("expected GapTooLarge, got {other:?}"),
    }
}

#[test]
fn bad_speed_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let text = "timestamp,speed_mph\n\
        2017-10-16T04:00:00Z,55\n\
        2017-10-16T04:05:00Z,abc\n";
    std::fs::write(&path, text).unwrap();

    match load_csv(&path) {
        Err(DataError::Parse { line, message, .. }) => {
            assert_eq!(line, 3);
            assert!(message.contains("abc"), "message was {message}");
        }
        other => panic!("expected Parse, got {other:?}"),
    }
}

#[test]
fn non_positive_speed_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("neg.csv");
    let text = "timestamp,speed_mph\n\
        2017-10-16T04:00:00Z,55\n\
        2017-10-16T04:05:00Z,-3\n";
    std::fs::write(&path, text).unwrap();

    match load_csv(&path) {
        Err(DataError::NonPositiveSpeed { line, value, .. }) => {
            assert_eq!(line, 3);
            assert_eq!(value, -3.0);
        }
        other => panic!("expected NonPositiveSpeed, got {other:?}"),
    }
}

#[test]
fn wrong_header_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hdr.csv");
    std::fs::write(&path, "time,speed\n2017-10-16T04:00:00Z,55\n").unwrap();
    assert!(matches!(load_csv(&path), Err(DataError::BadHeader { .. })));
}

#[test]
fn backwards_timestamps_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("back.csv");
    let text = "timestamp,speed_mph\n\
        2017-10-16T04:05:00Z,55\n\
        2017-10-16T04:00:00Z,54\n";
    std::fs::write(&path, text).unwrap();
    assert!(matches!(load_csv(&path), Err(DataError::Parse { line: 3, .. })));
}

#[test]
fn paper_shaped_split_1440_288() {
    let s = series("s", (0..1728).map(|i| 30.0 + (i % 288) as f64 * 0.1).collect());
    let (train, test) = split_train_test(&s, 5, 1).unwrap();
    assert_eq!(train.values().len(), 1440);
    assert_eq!(test.values().len(), 288);
    assert_eq!(test.start(), s.timestamp_at(1440));

    let (train2, test2) = split_train_test(&s, 4, 2).unwrap();
    assert_eq!(train2.values().len(), 1152);
    assert_eq!(test2.values().len(), 576);

    assert!(matches!(
        split_train_test(&s, 5, 2),
        Err(DataError::BadSplit { expected: 2016, actual: 1728 })
    ));
}

#[test]
fn load_split_concatenate_reproduces_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("whole.csv");
    let values: Vec<f64> = (0..3 * 288).map(|i| 35.0 + ((i * 7) % 50) as f64 * 0.3).collect();
    write_csv(&path, &series("whole", values.clone())).unwrap();

    let loaded = load_csv(&path).unwrap().series;
    let (train, test) = split_train_test(&loaded, 2, 1).unwrap();
    let rejoined: Vec<f64> = train
        .values()
        .iter()
        .chain(test.values())
        .copied()
        .collect();
    assert_eq!(rejoined, values);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn write_load_write_is_byte_identical(
        values in prop::collection::vec(0.5f64..95.0, 2..400),
        interval in prop::sample::select(vec![1u32, 5, 15]),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let s = SpeedSeries::new(
            DetectorId::new("p").unwrap(),
            interval,
            DateTime::from_timestamp(1_508_112_000, 0).unwrap(),
            values,
        ).unwrap();
        let first = dir.path().join("p.csv");
        write_csv(&first, &s).unwrap();
        let loaded = load_csv(&first).unwrap();
        prop_assert_eq!(loaded.interpolated, 0);
        let second = dir.path().join("p2.csv");
        write_csv(&second, &loaded.series).unwrap();
        prop_assert_eq!(
            std::fs::read(&first).unwrap(),
            std::fs::read(&second).unwrap()
        );
    }
}
