//! Hyperparameter grid: axis domains, validated settings, and snapping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised when a setting leaves or misses the grid.
#[derive(Debug, Error)]
pub enum GridError {
    #[error("{axis} input is not finite")]
    NonFiniteInput { axis: &'static str },
    #[error("{axis} value {value} is not on the grid")]
    OffGrid { axis: &'static str, value: f64 },
}

/// One tunable dimension: an inclusive range walked at a fixed step.
#[derive(Debug, Clone, Copy)]
pub struct Axis {
    pub name: &'static str,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    /// Number of grid values on this axis.
    pub points: u32,
}

impl Axis {
    /// Grid value at `index`.
    pub fn value_at(&self, index: u32) -> f64 {
        self.lo + self.step * index as f64
    }

    /// Distance between the domain ends.
    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    /// Index of the grid value nearest to `value` after clamping to the
    /// domain. Exact midpoints resolve to the larger neighbor.
    pub fn snap_index(&self, value: f64) -> u32 {
        let clamped = value.clamp(self.lo, self.hi);
        let offset = (clamped - self.lo) / self.step;
        let index = (offset + 0.5 + 1e-9).floor() as u32;
        index.min(self.points - 1)
    }

    /// Index of `value` when it already sits on the grid within `1e-9`.
    fn exact_index(&self, value: f64) -> Result<u32, GridError> {
        if !value.is_finite() {
            return Err(GridError::NonFiniteInput { axis: self.name });
        }
        let index = ((value - self.lo) / self.step).round();
        if index < 0.0 || index >= self.points as f64 {
            return Err(GridError::OffGrid {
                axis: self.name,
                value,
            });
        }
        let index = index as u32;
        if (value - self.value_at(index)).abs() > 1e-9 {
            return Err(GridError::OffGrid {
                axis: self.name,
                value,
            });
        }
        Ok(index)
    }
}

pub const LEARNING_RATE: Axis = Axis {
    name: "learning rate",
    lo: 0.01,
    hi: 0.2,
    step: 0.01,
    points: 20,
};

pub const LAYERS: Axis = Axis {
    name: "layers",
    lo: 1.0,
    hi: 10.0,
    step: 1.0,
    points: 10,
};

pub const UNITS: Axis = Axis {
    name: "units",
    lo: 2.0,
    hi: 40.0,
    step: 2.0,
    points: 20,
};

pub const EPOCHS: Axis = Axis {
    name: "epochs",
    lo: 100.0,
    hi: 1000.0,
    step: 20.0,
    points: 46,
};

/// The four axes in canonical order.
pub const AXES: [Axis; 4] = [LEARNING_RATE, LAYERS, UNITS, EPOCHS];

/// Total number of settings on the grid.
pub const GRID_SIZE: usize = 20 * 10 * 20 * 46;

/// A validated point on the hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    #[serde(rename = "r_learn")]
    learning_rate: f64,
    #[serde(rename = "n_layer")]
    layers: u32,
    #[serde(rename = "n_unit")]
    units: u32,
    #[serde(rename = "ep")]
    epochs: u32,
}

impl HyperParams {
    /// Builds a setting, checking every component against its axis.
    ///
    /// The learning rate is replaced by its canonical grid value so equal
    /// settings compare equal bit for bit.
    pub fn new(learning_rate: f64, layers: u32, units: u32, epochs: u32) -> Result<Self, GridError> {
        let lr_index = LEARNING_RATE.exact_index(learning_rate)?;
        LAYERS.exact_index(layers as f64)?;
        UNITS.exact_index(units as f64)?;
        EPOCHS.exact_index(epochs as f64)?;
        Ok(HyperParams {
            learning_rate: LEARNING_RATE.value_at(lr_index),
            layers,
            units,
            epochs,
        })
    }

    /// The starting setting for every customization: the smallest value on
    /// each axis.
    pub fn default_setting() -> Self {
        HyperParams {
            learning_rate: LEARNING_RATE.lo,
            layers: 1,
            units: 2,
            epochs: 100,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn layers(&self) -> u32 {
        self.layers
    }

    pub fn units(&self) -> u32 {
        self.units
    }

    pub fn epochs(&self) -> u32 {
        self.epochs
    }

    /// Per-axis grid indexes, usable as an exact lookup key.
    pub fn grid_key(&self) -> [u32; 4] {
        [
            LEARNING_RATE.snap_index(self.learning_rate),
            LAYERS.snap_index(self.layers as f64),
            UNITS.snap_index(self.units as f64),
            EPOCHS.snap_index(self.epochs as f64),
        ]
    }

    /// Setting at the given per-axis grid indexes.
    pub fn from_key(key: [u32; 4]) -> Self {
        HyperParams {
            learning_rate: LEARNING_RATE.value_at(key[0]),
            layers: LAYERS.value_at(key[1]) as u32,
            units: UNITS.value_at(key[2]) as u32,
            epochs: EPOCHS.value_at(key[3]) as u32,
        }
    }

    /// Continuous coordinates of this setting in axis order.
    pub fn as_raw(&self) -> [f64; 4] {
        [
            self.learning_rate,
            self.layers as f64,
            self.units as f64,
            self.epochs as f64,
        ]
    }
}

impl std::fmt::Display for HyperParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.learning_rate, self.layers, self.units, self.epochs
        )
    }
}

/// Maps a continuous point to the nearest grid setting.
///
/// Each coordinate is clamped to its axis domain and rounded to the nearest
/// step, with exact midpoints resolving to the larger value.
pub fn snap_to_grid(raw: [f64; 4]) -> Result<HyperParams, GridError> {
    for (axis, value) in AXES.iter().zip(raw) {
        if !value.is_finite() {
            return Err(GridError::NonFiniteInput { axis: axis.name });
        }
    }
    Ok(HyperParams::from_key([
        LEARNING_RATE.snap_index(raw[0]),
        LAYERS.snap_index(raw[1]),
        UNITS.snap_index(raw[2]),
        EPOCHS.snap_index(raw[3]),
    ]))
}
