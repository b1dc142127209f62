use disttune_core::SpeedSeries;

use crate::error::DataError;

/// Splits a series into leading training days and trailing test days.
///
/// # Errors
///
/// `BadSplit` unless the series is exactly `(train_days + test_days)` whole
/// days long at its interval.
pub fn split_train_test(
    series: &SpeedSeries,
    train_days: usize,
    test_days: usize,
) -> Result<(SpeedSeries, SpeedSeries), DataError> {
    let slots = series.slots_per_day();
    let expected = (train_days + test_days) * slots;
    let actual = series.values().len();
    if expected != actual || train_days == 0 || test_days == 0 {
        return Err(DataError::BadSplit { expected, actual });
    }
    let cut = train_days * slots;
    let train = series.slice(0, cut)?;
    let test = series.slice(cut, actual)?;
    Ok((train, test))
}
