use std::path::Path;

use chrono::{DateTime, Utc};
use disttune_core::{aard, DetectorId, NormalizedSeries, SpeedSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::csv_io::write_csv;
use crate::error::DataError;
use crate::manifest::{ManifestEntry, NetworkManifest};

pub const SLOTS_PER_DAY: usize = 288;
pub const BASE_PATTERN_COUNT: usize = 5;

const INTERVAL_MINUTES: u32 = 5;
const MIN_SPEED: f64 = 3.0;
const MAX_ATTEMPTS: u64 = 50;
const EPOCH_START: i64 = 1_508_112_000;

/// Daily profile knots, hour-scaled to slots: a free-flow corridor, a
/// morning commuter route, an all-day congested stretch, an evening-peak
/// reverse commute, and a peak-spread corridor that stays slow from the
/// morning rush until the evening recovery.
const PATTERN_KNOTS: [&[(usize, f64)]; BASE_PATTERN_COUNT] = [
    &[(0, 70.0), (72, 70.0), (90, 63.0), (120, 60.0), (192, 62.0), (228, 66.0), (288, 70.0)],
    &[
        (0, 58.0),
        (78, 57.0),
        (90, 34.0),
        (114, 26.0),
        (138, 40.0),
        (168, 48.0),
        (204, 38.0),
        (234, 33.0),
        (258, 50.0),
        (288, 58.0),
    ],
    &[
        (0, 46.0),
        (66, 42.0),
        (90, 24.0),
        (126, 18.0),
        (186, 20.0),
        (222, 27.0),
        (258, 38.0),
        (288, 46.0),
    ],
    &[
        (0, 63.0),
        (96, 58.0),
        (168, 52.0),
        (192, 30.0),
        (222, 20.0),
        (246, 32.0),
        (270, 52.0),
        (288, 63.0),
    ],
    &[
        (0, 52.0),
        (72, 50.0),
        (84, 30.0),
        (108, 24.0),
        (132, 30.0),
        (156, 24.0),
        (186, 27.0),
        (210, 31.0),
        (240, 52.0),
        (276, 52.0),
        (288, 52.0),
    ],
];

/// The noise-free daily profile for one base pattern.
pub fn base_pattern(index: usize) -> Vec<f64> {
    let knots = PATTERN_KNOTS[index];
    let mut profile = Vec::with_capacity(SLOTS_PER_DAY);
    let mut segment = 0;
    for slot in 0..SLOTS_PER_DAY {
        while knots[segment + 1].0 <= slot {
            segment += 1;
        }
        let (s0, v0) = knots[segment];
        let (s1, v1) = knots[segment + 1];
        let t = (slot - s0) as f64 / (s1 - s0) as f64;
        profile.push(v0 + (v1 - v0) * t);
    }
    profile
}

/// Recipe for a synthetic detector network.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub network_name: String,
    /// How many of the built-in base patterns to use.
    pub n_base_patterns: usize,
    pub detectors_per_pattern: usize,
    /// Noise standard deviation as a fraction of the pattern's mean speed.
    pub noise_std: f64,
    pub days: usize,
    pub seed: u64,
    /// Similarity threshold the emitted clusters are verified against.
    pub thd_aard: f64,
    pub reference_speed: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            network_name: "synthetic".to_string(),
            n_base_patterns: 4,
            detectors_per_pattern: 5,
            noise_std: 0.02,
            days: 6,
            seed: 0,
            thd_aard: 0.1,
            reference_speed: 70.0,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), DataError> {
        if self.n_base_patterns == 0 || self.n_base_patterns > BASE_PATTERN_COUNT {
            return Err(DataError::BadSpec(format!(
                "n_base_patterns must be 1..={BASE_PATTERN_COUNT}"
            )));
        }
        if self.detectors_per_pattern == 0 {
            return Err(DataError::BadSpec("detectors_per_pattern must be positive".into()));
        }
        if self.days == 0 {
            return Err(DataError::BadSpec("days must be positive".into()));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(DataError::BadSpec(format!("bad noise_std {}", self.noise_std)));
        }
        if !(self.thd_aard.is_finite() && self.thd_aard > 0.0) {
            return Err(DataError::BadSpec(format!("bad thd_aard {}", self.thd_aard)));
        }
        Ok(())
    }

    pub fn detector_count(&self) -> usize {
        self.n_base_patterns * self.detectors_per_pattern
    }

    /// Pattern index of the `global`-th detector.
    pub fn pattern_of(&self, global: usize) -> usize {
        global / self.detectors_per_pattern
    }

    pub fn detector_id(&self, global: usize) -> DetectorId {
        let pattern = self.pattern_of(global);
        let member = global % self.detectors_per_pattern;
        DetectorId::new(format!("det-p{pattern}-{member:02}")).expect("non-empty id")
    }
}

fn start_time() -> DateTime<Utc> {
    DateTime::from_timestamp(EPOCH_START, 0).expect("valid epoch")
}

fn detector_series(
    spec: &SyntheticSpec,
    global: usize,
    pattern: usize,
    days: usize,
    start: DateTime<Utc>,
    attempt: u64,
    feed_tag: u64,
) -> SpeedSeries {
    let profile = base_pattern(pattern);
    let mean = profile.iter().sum::<f64>() / profile.len() as f64;
    let sigma = spec.noise_std * mean;
    let mut rng = ChaCha8Rng::seed_from_u64(
        spec.seed
            .wrapping_mul(0x9e3779b97f4a7c15)
            .wrapping_add(attempt)
            .wrapping_add(feed_tag.wrapping_mul(0x2545f4914f6cdd1d)),
    );
    rng.set_stream(global as u64 + 1);
    let mut values = Vec::with_capacity(days * SLOTS_PER_DAY);
    for _ in 0..days {
        for &base in &profile {
            let noise: f64 = rng.sample(StandardNormal);
            values.push((base + sigma * noise).max(MIN_SPEED));
        }
    }
    SpeedSeries::new(spec.detector_id(global), INTERVAL_MINUTES, start, values)
        .expect("generated values are positive")
}

fn normalized(series: &SpeedSeries, reference: f64) -> NormalizedSeries {
    series.normalize(reference).expect("positive reference")
}

/// Checks every same-cluster pair under `thd/2` and every cross-cluster
/// pair above `thd`, in both AARD directions.
fn clusters_pass(
    spec: &SyntheticSpec,
    detectors: &[SpeedSeries],
) -> Result<bool, DataError> {
    let norms: Vec<NormalizedSeries> = detectors
        .iter()
        .map(|s| normalized(s, spec.reference_speed))
        .collect();
    for i in 0..norms.len() {
        for j in i + 1..norms.len() {
            let same = spec.pattern_of(i) == spec.pattern_of(j);
            let forward = aard(&norms[i], &norms[j]).map_err(|e| DataError::BadSpec(e.to_string()))?;
            let backward = aard(&norms[j], &norms[i]).map_err(|e| DataError::BadSpec(e.to_string()))?;
            let worst = forward.max(backward);
            if same && worst >= spec.thd_aard / 2.0 {
                return Ok(false);
            }
            if !same && forward.min(backward) <= spec.thd_aard {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Verifies that the noise-free base patterns in use are mutually separated
/// by more than twice the similarity threshold.
fn bases_separated(spec: &SyntheticSpec) -> Result<(), DataError> {
    let start = start_time();
    for a in 0..spec.n_base_patterns {
        for b in 0..spec.n_base_patterns {
            if a == b {
                continue;
            }
            let pa = SpeedSeries::new(
                DetectorId::new("base-a").expect("non-empty"),
                INTERVAL_MINUTES,
                start,
                base_pattern(a),
            )?;
            let pb = SpeedSeries::new(
                DetectorId::new("base-b").expect("non-empty"),
                INTERVAL_MINUTES,
                start,
                base_pattern(b),
            )?;
            let d = aard(
                &normalized(&pa, spec.reference_speed),
                &normalized(&pb, spec.reference_speed),
            )
            .map_err(|e| DataError::BadSpec(e.to_string()))?;
            if d <= 2.0 * spec.thd_aard {
                return Err(DataError::BadSpec(format!(
                    "base patterns {a} and {b} are only {d:.4} apart, need > {}",
                    2.0 * spec.thd_aard
                )));
            }
        }
    }
    Ok(())
}

/// Generates the network in memory, re-sampling noise until the cluster
/// oracle passes.
pub fn generate_series(spec: &SyntheticSpec) -> Result<Vec<SpeedSeries>, DataError> {
    spec.validate()?;
    bases_separated(spec)?;
    let start = start_time();
    for attempt in 0..MAX_ATTEMPTS {
        let detectors: Vec<SpeedSeries> = (0..spec.detector_count())
            .map(|global| {
                detector_series(spec, global, spec.pattern_of(global), spec.days, start, attempt, 0)
            })
            .collect();
        if clusters_pass(spec, &detectors)? {
            return Ok(detectors);
        }
    }
    Err(DataError::BadSpec(format!(
        "no noise draw satisfied the cluster oracle in {MAX_ATTEMPTS} attempts; lower noise_std ({}) or raise thd_aard ({})",
        spec.noise_std, spec.thd_aard
    )))
}

/// Generates the network and writes one CSV per detector plus
/// `manifest.json` into `out_dir`.
pub fn generate_synthetic(spec: &SyntheticSpec, out_dir: &Path) -> Result<NetworkManifest, DataError> {
    let detectors = generate_series(spec)?;
    std::fs::create_dir_all(out_dir).map_err(|e| DataError::io(out_dir, e))?;
    let mut entries = Vec::with_capacity(detectors.len());
    for series in &detectors {
        let file = format!("{}.csv", series.detector());
        write_csv(&out_dir.join(&file), series)?;
        entries.push(ManifestEntry {
            id: series.detector().clone(),
            file,
            order: None,
        });
    }
    let manifest = NetworkManifest {
        network_name: spec.network_name.clone(),
        interval_minutes: INTERVAL_MINUTES,
        reference_speed: spec.reference_speed,
        detectors: entries,
    };
    manifest.save(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Fresh days of data continuing after a generated network, with selected
/// detectors switched to a different base pattern.
///
/// `swaps` maps global detector index to its new pattern. Unswapped
/// detectors keep their original pattern with fresh noise. Files are
/// written to `out_dir` with the same names the network generator uses.
pub fn generate_feed(
    spec: &SyntheticSpec,
    swaps: &[(usize, usize)],
    feed_days: usize,
    out_dir: &Path,
) -> Result<Vec<SpeedSeries>, DataError> {
    spec.validate()?;
    if feed_days == 0 {
        return Err(DataError::BadSpec("feed_days must be positive".into()));
    }
    for &(global, pattern) in swaps {
        if global >= spec.detector_count() {
            return Err(DataError::BadSpec(format!(
                "swap target {global} outside the {}-detector network",
                spec.detector_count()
            )));
        }
        if pattern >= spec.n_base_patterns {
            return Err(DataError::BadSpec(format!(
                "swap pattern {pattern} outside the {}-pattern network",
                spec.n_base_patterns
            )));
        }
    }
    let start = start_time() + chrono::Duration::days(spec.days as i64);
    std::fs::create_dir_all(out_dir).map_err(|e| DataError::io(out_dir, e))?;
    let mut feed = Vec::with_capacity(spec.detector_count());
    for global in 0..spec.detector_count() {
        let pattern = swaps
            .iter()
            .find(|(g, _)| *g == global)
            .map(|(_, p)| *p)
            .unwrap_or_else(|| spec.pattern_of(global));
        let series = detector_series(spec, global, pattern, feed_days, start, 0, 1);
        write_csv(&out_dir.join(format!("{}.csv", series.detector())), &series)?;
        feed.push(series);
    }
    Ok(feed)
}

/// Recipe for a single detector that drifts week over week: the further
/// back a day lies, the more its profile leans toward the corridor's older
/// slow regime and the worse its measurement quality gets.
#[derive(Debug, Clone)]
pub struct DriftSpec {
    pub detector: String,
    /// Base pattern the fresh trailing days follow exactly.
    pub pattern: usize,
    /// Working-day weeks of history before the final day.
    pub weeks: usize,
    /// Trailing days at the current regime and measurement quality,
    /// including the final day.
    pub fresh_days: usize,
    /// Per week of age: blend fraction toward the legacy regime, and
    /// additional measurement noise as a fraction of the pattern mean.
    pub drift_per_week: f64,
    /// Measurement noise of the fresh days, as a fraction of the pattern
    /// mean.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for DriftSpec {
    fn default() -> Self {
        DriftSpec {
            detector: "drifting".to_string(),
            pattern: 4,
            weeks: 12,
            fresh_days: 6,
            drift_per_week: 0.01,
            noise_std: 0.01,
            seed: 0,
        }
    }
}

/// The corridor's older slow regime: jammed near the pattern's floor all
/// day, with a mild undulation.
fn legacy_profile(profile: &[f64]) -> Vec<f64> {
    let low = profile.iter().cloned().fold(f64::MAX, f64::min);
    (0..profile.len())
        .map(|slot| {
            let phase = std::f64::consts::TAU * slot as f64 / profile.len() as f64;
            low + 2.0 + 2.0 * phase.sin()
        })
        .collect()
}

/// A working-week series covering `weeks * 5 + 1` days whose older days
/// drift away from the final day by `drift_per_week` per week of age, in
/// both regime and measurement quality.
pub fn drifting_series(spec: &DriftSpec) -> Result<SpeedSeries, DataError> {
    if spec.pattern >= BASE_PATTERN_COUNT {
        return Err(DataError::BadSpec(format!(
            "pattern {} outside the built-in set",
            spec.pattern
        )));
    }
    if spec.weeks == 0 || spec.fresh_days == 0 {
        return Err(DataError::BadSpec("weeks and fresh_days must be positive".into()));
    }
    if !(spec.drift_per_week.is_finite() && (0.0..=1.0).contains(&spec.drift_per_week)) {
        return Err(DataError::BadSpec(format!(
            "bad drift_per_week {}",
            spec.drift_per_week
        )));
    }
    if !(spec.noise_std.is_finite() && (0.0..=0.2).contains(&spec.noise_std)) {
        return Err(DataError::BadSpec(format!("bad noise_std {}", spec.noise_std)));
    }
    let profile = base_pattern(spec.pattern);
    let legacy = legacy_profile(&profile);
    let mean = profile.iter().sum::<f64>() / profile.len() as f64;
    let total_days = spec.weeks * 5 + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(0x9e3779b97f4a7c15));
    let mut values = Vec::with_capacity(total_days * SLOTS_PER_DAY);
    for day in 0..total_days {
        let age_days = (total_days - 1 - day).saturating_sub(spec.fresh_days - 1);
        let age_weeks = age_days as f64 / 5.0;
        let blend = (spec.drift_per_week * age_weeks).clamp(0.0, 1.0);
        let sigma = (spec.noise_std + spec.drift_per_week * age_weeks) * mean;
        for slot in 0..SLOTS_PER_DAY {
            let base = (1.0 - blend) * profile[slot] + blend * legacy[slot];
            let noise: f64 = rng.sample(StandardNormal);
            values.push((base + sigma * noise).max(MIN_SPEED));
        }
    }
    Ok(SpeedSeries::new(
        DetectorId::new(spec.detector.clone())?,
        INTERVAL_MINUTES,
        start_time(),
        values,
    )?)
}
