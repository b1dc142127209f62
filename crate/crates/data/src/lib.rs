//! Data plumbing around the forecasting core: detector CSV files, network
//! manifests, train/test splitting, and a synthetic traffic generator with
//! verified cluster structure.

mod csv_io;
mod error;
mod manifest;
mod split;
mod synth;
mod window;

pub use csv_io::{load_csv, load_csv_as, write_csv, LoadedSeries};
pub use error::DataError;
pub use manifest::{load_network, ManifestEntry, NetworkManifest};
pub use split::split_train_test;
pub use synth::{
    base_pattern, drifting_series, generate_feed, generate_series, generate_synthetic, DriftSpec,
    SyntheticSpec, BASE_PATTERN_COUNT, SLOTS_PER_DAY,
};
pub use window::{window_study, WindowRow};
