use disttune_core::aard;
use disttune_data::{
    base_pattern, generate_feed, generate_synthetic, load_network, NetworkManifest, SyntheticSpec,
    BASE_PATTERN_COUNT, SLOTS_PER_DAY,
};

fn normalized(series: &disttune_core::SpeedSeries) -> disttune_core::NormalizedSeries {
    series.normalize(70.0).unwrap()
}

fn pairwise_aard(a: &disttune_core::SpeedSeries, b: &disttune_core::SpeedSeries) -> f64 {
    let (na, nb) = (normalized(a), normalized(b));
    aard(&na, &nb).unwrap().max(aard(&nb, &na).unwrap())
}

#[test]
fn four_cluster_network_passes_an_independent_aard_check() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec::default();
    let manifest = generate_synthetic(&spec, dir.path()).unwrap();

    assert_eq!(manifest.detectors.len(), 20);
    let loaded = load_network(&manifest, dir.path()).unwrap();
    assert_eq!(loaded.len(), 20);
    for series in &loaded {
        assert_eq!(series.values().len(), 6 * SLOTS_PER_DAY);
    }

    let thd = 0.1;
    for i in 0..loaded.len() {
        for j in i + 1..loaded.len() {
            let d = pairwise_aard(&loaded[i], &loaded[j]);
            if i / 5 == j / 5 {
                assert!(
                    d < thd / 2.0,
                    "same-cluster pair {i},{j} has AARD {d:.4}"
                );
            } else {
                assert!(d > thd, "cross-cluster pair {i},{j} has AARD {d:.4}");
            }
        }
    }
}

#[test]
fn single_cluster_zero_noise_is_pairwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        n_base_patterns: 1,
        detectors_per_pattern: 3,
        noise_std: 0.0,
        days: 2,
        ..SyntheticSpec::default()
    };
    let manifest = generate_synthetic(&spec, dir.path()).unwrap();
    let loaded = load_network(&manifest, dir.path()).unwrap();
    assert_eq!(loaded.len(), 3);
    for i in 0..3 {
        for j in i + 1..3 {
            assert_eq!(pairwise_aard(&loaded[i], &loaded[j]), 0.0);
        }
    }
}

#[test]
fn same_spec_and_seed_writes_byte_identical_files() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        detectors_per_pattern: 2,
        days: 2,
        seed: 77,
        ..SyntheticSpec::default()
    };
    let manifest = generate_synthetic(&spec, dir_a.path()).unwrap();
    generate_synthetic(&spec, dir_b.path()).unwrap();

    for entry in &manifest.detectors {
        let a = std::fs::read(dir_a.path().join(&entry.file)).unwrap();
        let b = std::fs::read(dir_b.path().join(&entry.file)).unwrap();
        assert_eq!(a, b, "file {} differs between runs", entry.file);
    }
    let ma = std::fs::read(dir_a.path().join("manifest.json")).unwrap();
    let mb = std::fs::read(dir_b.path().join("manifest.json")).unwrap();
    assert_eq!(ma, mb);
}

#[test]
fn different_seed_changes_the_noise() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        detectors_per_pattern: 1,
        n_base_patterns: 1,
        days: 1,
        seed: 1,
        ..SyntheticSpec::default()
    };
    let other = SyntheticSpec { seed: 2, ..spec.clone() };
    let ma = generate_synthetic(&spec, dir_a.path()).unwrap();
    generate_synthetic(&other, dir_b.path()).unwrap();
    let a = std::fs::read(dir_a.path().join(&ma.detectors[0].file)).unwrap();
    let b = std::fs::read(dir_b.path().join(&ma.detectors[0].file)).unwrap();
    assert_ne!(a, b);
}

#[test]
fn base_patterns_are_mutually_distant() {
    for a in 0..BASE_PATTERN_COUNT {
        let na = disttune_core::NormalizedSeries::new(
            disttune_core::DetectorId::new("a").unwrap(),
            base_pattern(a),
        )
        .unwrap();
        for b in 0..BASE_PATTERN_COUNT {
            if a == b {
                continue;
            }
            let nb = disttune_core::NormalizedSeries::new(
                disttune_core::DetectorId::new("b").unwrap(),
                base_pattern(b),
            )
            .unwrap();
            let d = aard(&na, &nb).unwrap();
            assert!(d > 0.2, "patterns {a},{b} only {d:.4} apart");
        }
    }
}

#[test]
fn feed_continues_after_the_network_and_flips_patterns() {
    let dir = tempfile::tempdir().unwrap();
    let feed_dir = dir.path().join("feed");
    let spec = SyntheticSpec {
        detectors_per_pattern: 2,
        days: 2,
        ..SyntheticSpec::default()
    };
    let manifest = generate_synthetic(&spec, dir.path()).unwrap();
    let network = load_network(&manifest, dir.path()).unwrap();

    let feed = generate_feed(&spec, &[(0, 2)], 1, &feed_dir).unwrap();
    assert_eq!(feed.len(), 8);
    for (series, original) in feed.iter().zip(&network) {
        assert_eq!(series.detector(), original.detector());
        assert_eq!(
            series.start(),
            original.timestamp_at(original.values().len() - 1) + chrono::Duration::minutes(5)
        );
        assert_eq!(series.values().len(), SLOTS_PER_DAY);
    }

    let swapped_feed = &feed[0];
    let donor_base = disttune_core::SpeedSeries::new(
        disttune_core::DetectorId::new("base").unwrap(),
        5,
        swapped_feed.start(),
        base_pattern(2),
    )
    .unwrap();
    assert!(pairwise_aard(swapped_feed, &donor_base) < 0.05);

    let unswapped_feed = &feed[1];
    let own_base = disttune_core::SpeedSeries::new(
        disttune_core::DetectorId::new("base").unwrap(),
        5,
        unswapped_feed.start(),
        base_pattern(0),
    )
    .unwrap();
    assert!(pairwise_aard(unswapped_feed, &own_base) < 0.05);
    assert!(pairwise_aard(swapped_feed, &own_base) > 0.1);
}

#[test]
fn deployment_order_respects_explicit_indices() {
    let manifest = NetworkManifest {
        network_name: "t".into(),
        interval_minutes: 5,
        reference_speed: 70.0,
        detectors: vec![
            disttune_data::ManifestEntry {
                id: disttune_core::DetectorId::new("late").unwrap(),
                file: "late.csv".into(),
                order: Some(9),
            },
            disttune_data::ManifestEntry {
                id: disttune_core::DetectorId::new("early").unwrap(),
                file: "early.csv".into(),
                order: Some(1),
            },
            disttune_data::ManifestEntry {
                id: disttune_core::DetectorId::new("unordered").unwrap(),
                file: "unordered.csv".into(),
                order: None,
            },
        ],
    };
    let order: Vec<&str> = manifest
        .deployment_order()
        .iter()
        .map(|e| e.id.as_str())
        .collect();
    assert_eq!(order, vec!["early", "late", "unordered"]);
}

#[test]
fn duplicate_ids_are_refused() {
    let manifest = NetworkManifest {
        network_name: "t".into(),
        interval_minutes: 5,
        reference_speed: 70.0,
        detectors: vec![
            disttune_data::ManifestEntry {
                id: disttune_core::DetectorId::new("same").unwrap(),
                file: "a.csv".into(),
                order: None,
            },
            disttune_data::ManifestEntry {
                id: disttune_core::DetectorId::new("same").unwrap(),
                file: "b.csv".into(),
                order: None,
            },
        ],
    };
    assert!(manifest.validate().is_err());
}
