//! Windowed load-forecasting datasets and a small differentiable forecaster.
//!
//! A forecaster maps an `H x 6` window of lagged features (load, four weather
//! variables, time index) to the next hour's normalized load. Three
//! architectures are provided, all with smooth activations so that exact
//! input gradients exist everywhere: a linear map, an MLP over the flattened
//! window, and a single recurrent cell run across the window rows.

mod dataset;
mod model;

pub use dataset::{
    build_windows, fit_normalizer, read_series_csv, write_series_csv, Normalizer, SeriesRow,
};
pub use model::{train, Architecture, ForecastModel, TrainConfig};

use crate::mat::Mat;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of input features per window row.
pub const FEATURE_COUNT: usize = 6;

/// Column index of the load feature.
pub const LOAD_COLUMN: usize = 0;
/// Column index of the time-index feature.
pub const TIME_COLUMN: usize = 5;
/// Column indices of the four weather features (temperature, humidity,
/// wind speed, wind direction). Only these are eligible for perturbation.
pub const WEATHER_COLUMNS: [usize; 4] = [1, 2, 3, 4];

/// Feature labels in column order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "load",
    "temperature",
    "humidity",
    "wind_speed",
    "wind_direction",
    "time_index",
];

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("series has {len} rows but window length {h} needs at least {min}")]
    SeriesTooShort { len: usize, h: usize, min: usize },
    #[error("non-uniform spacing after row {index}: gap of {gap_minutes} minutes")]
    NonUniformSpacing { index: usize, gap_minutes: i64 },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("shape mismatch: model expects {expected_rows}x{expected_cols}, window is {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    DivergedTraining { epoch: usize, loss: f64 },
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("model file: {0}")]
    ModelFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One `H x 6` block of lagged features feeding a single forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWindow {
    /// Row `i` holds the features at lag `H - i` (oldest first).
    pub values: Mat,
    /// Hourly instants matching the rows.
    pub timestamps: Vec<DateTime<Utc>>,
}

impl FeatureWindow {
    /// Feature labels in column order, shared by every window.
    pub fn feature_names() -> &'static [&'static str; FEATURE_COUNT] {
        &FEATURE_NAMES
    }

    pub fn horizon(&self) -> usize {
        self.values.rows()
    }
}

/// A window plus its one-step-ahead load target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSample {
    pub window: FeatureWindow,
    /// Load one step after the window's last row (normalized once the
    /// sample has been passed through a [`Normalizer`]).
    pub target: f64,
}

/// Squared forecast error at a single target time. Serves both as the
/// per-sample training loss and as the attack objective.
pub fn squared_error(prediction: f64, target: f64) -> f64 {
    let d = prediction - target;
    d * d
}
