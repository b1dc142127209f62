//! Property tests for relationships the metrics must satisfy on any input.

use disttune_core::{aae, aard, aare, rmse, DetectorId, ForecastPair, NormalizedSeries};
use proptest::prelude::*;

fn pair_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    prop::collection::vec((1.0f64..95.0, 0.5f64..95.0), 1..64)
        .prop_map(|v| v.into_iter().unzip())
}

proptest! {
    #[test]
    fn rmse_dominates_aae((actual, predicted) in pair_strategy()) {
        let pair = ForecastPair::new(actual, predicted).unwrap();
        let a = aae(&pair).unwrap();
        let r = rmse(&pair).unwrap();
        prop_assert!(r >= a - 1e-12);
    }

    #[test]
    fn aare_is_zero_iff_exact(actual in prop::collection::vec(1.0f64..95.0, 1..64)) {
        let pair = ForecastPair::new(actual.clone(), actual).unwrap();
        prop_assert!(aare(&pair).unwrap() < 1e-15);
        prop_assert!(aae(&pair).unwrap() < 1e-15);
        prop_assert!(rmse(&pair).unwrap() < 1e-15);
    }

    #[test]
    fn aard_is_scale_invariant(
        base in prop::collection::vec((0.1f64..1.2, 0.1f64..1.2), 1..64),
        scale in 0.5f64..3.0,
    ) {
        let (denom, other): (Vec<f64>, Vec<f64>) = base.into_iter().unzip();
        let id_a = DetectorId::new("a").unwrap();
        let id_b = DetectorId::new("b").unwrap();
        let plain = aard(
            &NormalizedSeries::new(id_a.clone(), denom.clone()).unwrap(),
            &NormalizedSeries::new(id_b.clone(), other.clone()).unwrap(),
        ).unwrap();
        let scaled = aard(
            &NormalizedSeries::new(id_a, denom.iter().map(|v| v * scale).collect()).unwrap(),
            &NormalizedSeries::new(id_b, other.iter().map(|v| v * scale).collect()).unwrap(),
        ).unwrap();
        prop_assert!((plain - scaled).abs() < 1e-9, "plain {plain} scaled {scaled}");
    }

    #[test]
    fn aard_of_identical_series_is_zero(values in prop::collection::vec(0.1f64..1.5, 1..64)) {
        let a = NormalizedSeries::new(DetectorId::new("a").unwrap(), values.clone()).unwrap();
        let b = NormalizedSeries::new(DetectorId::new("b").unwrap(), values).unwrap();
        prop_assert!(aard(&a, &b).unwrap() < 1e-15);
    }

    #[test]
    fn aare_shrinks_when_prediction_moves_toward_actual(
        (actual, predicted) in pair_strategy(),
    ) {
        let halfway: Vec<f64> = actual
            .iter()
            .zip(&predicted)
            .map(|(a, p)| p + (a - p) * 0.5)
            .collect();
        let far = ForecastPair::new(actual.clone(), predicted).unwrap();
        let near = ForecastPair::new(actual, halfway).unwrap();
        prop_assert!(aare(&near).unwrap() <= aare(&far).unwrap() + 1e-12);
    }
}
