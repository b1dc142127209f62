use std::collections::BTreeSet;
use std::path::Path;

use disttune_core::{DetectorId, SpeedSeries};
use serde::{Deserialize, Serialize};

use crate::csv_io::load_csv_as;
use crate::error::DataError;

/// One detector listed in a network manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: DetectorId,
    /// CSV path relative to the manifest's directory.
    pub file: String,
    /// Deployment order; listing order breaks ties and fills in when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
}

/// A detector network: shared interval and reference speed plus the member
/// detectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkManifest {
    pub network_name: String,
    pub interval_minutes: u32,
    pub reference_speed: f64,
    pub detectors: Vec<ManifestEntry>,
}

impl NetworkManifest {
    /// Parses and validates a manifest file.
    ///
    /// # Errors
    ///
    /// `Io`/`Json` for unreadable files, `BadManifest` for duplicate ids,
    /// an empty detector list, or a bad interval or reference speed.
    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        let manifest: NetworkManifest = serde_json::from_str(&text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        self.validate()?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| DataError::io(path, e))
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.detectors.is_empty() {
            return Err(DataError::BadManifest("no detectors listed".to_string()));
        }
        if self.interval_minutes == 0 {
            return Err(DataError::BadManifest("interval must be positive".to_string()));
        }
        if !(self.reference_speed.is_finite() && self.reference_speed > 0.0) {
            return Err(DataError::BadManifest(format!(
                "bad reference speed {}",
                self.reference_speed
            )));
        }
        let mut seen = BTreeSet::new();
        for entry in &self.detectors {
            if !seen.insert(entry.id.as_str()) {
                return Err(DataError::BadManifest(format!(
                    "duplicate detector id {}",
                    entry.id
                )));
            }
        }
        Ok(())
    }

    /// Entries sorted into deployment order.
    pub fn deployment_order(&self) -> Vec<&ManifestEntry> {
        let mut entries: Vec<(usize, &ManifestEntry)> = self.detectors.iter().enumerate().collect();
        entries.sort_by_key(|(listed, entry)| (entry.order.unwrap_or(u32::MAX), *listed));
        entries.into_iter().map(|(_, entry)| entry).collect()
    }
}

/// Loads every detector series of a manifest, in deployment order.
///
/// # Errors
///
/// Any per-file load error, plus `BadManifest` when a file's inferred
/// interval disagrees with the manifest.
pub fn load_network(
    manifest: &NetworkManifest,
    base_dir: &Path,
) -> Result<Vec<SpeedSeries>, DataError> {
    manifest.validate()?;
    let mut loaded = Vec::with_capacity(manifest.detectors.len());
    for entry in manifest.deployment_order() {
        let path = base_dir.join(&entry.file);
        let result = load_csv_as(&path, entry.id.clone())?;
        if result.series.interval_minutes() != manifest.interval_minutes {
            return Err(DataError::BadManifest(format!(
                "{}: interval {} does not match the manifest's {}",
                entry.id,
                result.series.interval_minutes(),
                manifest.interval_minutes
            )));
        }
        loaded.push(result.series);
    }
    Ok(loaded)
}
