//! Adversarial perturbation of forecaster weather inputs.
//!
//! Three attacks share one loop shape: query a gradient of the squared
//! forecast error, take a signed step on some subset of the weather cells,
//! and project back into the epsilon box around the clean window.
//!
//! * [`pgd_attack`] — signed ascent on one fixed weather column.
//! * [`greedy_pgd_attack`] — re-ranks the four weather columns by mean
//!   absolute gradient each iteration and perturbs only the winner.
//! * [`sparse_attack`] — perturbs the `n` individual cells with the largest
//!   absolute gradients each iteration.
//!
//! Gradients come from a pluggable [`GradientOracle`]: analytic reverse-mode
//! in white-box mode, two-sided finite differences over model queries in
//! black-box mode. Load and time-index columns are never touched.

mod methods;
mod oracle;

pub use methods::{clip, greedy_pgd_attack, mse_increase, pgd_attack, sparse_attack};
pub use oracle::{oracle_for, AnalyticGradient, FiniteDifferenceGradient, GradientOracle};

use crate::forecast::FeatureWindow;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("plain PGD needs a target weather feature")]
    MissingTargetFeature,
    #[error("loss became non-finite during the attack")]
    NonFiniteLoss,
    #[error("invalid attack config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Forecast(#[from] crate::forecast::ForecastError),
}

/// The four perturbable input features, in column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeatherFeature {
    Temperature,
    Humidity,
    WindSpeed,
    WindDirection,
}

impl WeatherFeature {
    pub const ALL: [WeatherFeature; 4] = [
        WeatherFeature::Temperature,
        WeatherFeature::Humidity,
        WeatherFeature::WindSpeed,
        WeatherFeature::WindDirection,
    ];

    /// Zero-based column index in a [`FeatureWindow`] (weather occupies 1..=4).
    pub fn column(self) -> usize {
        match self {
            WeatherFeature::Temperature => 1,
            WeatherFeature::Humidity => 2,
            WeatherFeature::WindSpeed => 3,
            WeatherFeature::WindDirection => 4,
        }
    }

    pub fn from_column(column: usize) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.column() == column)
    }
}

impl std::fmt::Display for WeatherFeature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            WeatherFeature::Temperature => "temperature",
            WeatherFeature::Humidity => "humidity",
            WeatherFeature::WindSpeed => "wind_speed",
            WeatherFeature::WindDirection => "wind_direction",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMode {
    WhiteBox,
    BlackBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMethod {
    Pgd,
    GreedyPgd,
    Saa,
}

impl std::fmt::Display for AttackMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AttackMethod::Pgd => f.write_str("pgd"),
            AttackMethod::GreedyPgd => f.write_str("greedy_pgd"),
            AttackMethod::Saa => f.write_str("saa"),
        }
    }
}

/// Attack hyper-parameters, in normalized feature units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    /// Box radius around each clean weather cell.
    pub epsilon: f64,
    /// Signed-step length per iteration.
    pub step_size: f64,
    /// Iteration count.
    pub iterations: usize,
    /// Cells perturbed per iteration (sparse attack only). Values above the
    /// eligible-cell count are clamped to it.
    pub sparsity: usize,
    /// Finite-difference half-step (black-box mode only).
    pub fd_delta: f64,
    pub mode: AttackMode,
    /// Fixed column for plain PGD.
    pub target_feature: Option<WeatherFeature>,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            step_size: 0.005,
            iterations: 50,
            sparsity: 12,
            fd_delta: 1e-3,
            mode: AttackMode::WhiteBox,
            target_feature: None,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<(), AttackError> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(AttackError::InvalidConfig("epsilon must be finite and >= 0".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(AttackError::InvalidConfig("step_size must be finite and > 0".into()));
        }
        if !(self.fd_delta > 0.0 && self.fd_delta.is_finite()) {
            return Err(AttackError::InvalidConfig("fd_delta must be finite and > 0".into()));
        }
        Ok(())
    }
}

/// What an iteration touched: the chosen column (PGD variants) or the chosen
/// coordinate set (sparse attack), plus the loss reached after the update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub choice: IterationChoice,
    /// Diagnostic loss measured out-of-band by the experimenter; black-box
    /// query accounting covers oracle queries only.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationChoice {
    Feature(WeatherFeature),
    /// Row-major sorted `(row, column)` coordinates.
    Cells(Vec<(usize, usize)>),
}

/// Full audit record of one attack run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackTrace {
    pub method: AttackMethod,
    pub config: AttackConfig,
    pub final_loss: f64,
    pub per_iteration: Vec<IterationRecord>,
    /// Model queries issued through the gradient oracle.
    pub query_count: u64,
    /// Entrywise max deviation from the clean window.
    pub linf_norm: f64,
    pub adversarial_window: FeatureWindow,
    pub clean_window: FeatureWindow,
}

impl AttackTrace {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("trace serializes")
    }
}

/// Count of perturbable cells for a window with `h` rows.
pub fn eligible_cell_count(h: usize) -> usize {
    h * WeatherFeature::ALL.len()
}

/// Signed step direction; zero gradient means no movement.
pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod trace_tests {
    use super::*;
    use crate::forecast::{FeatureWindow, FEATURE_COUNT};
    use crate::mat::Mat;
    use chrono::TimeZone;

    #[test]
    fn trace_json_carries_the_audit_fields() {
        let start = chrono::Utc.with_ymd_and_hms(2024, 5, 1, 0, 0, 0).unwrap();
        let window = FeatureWindow {
            values: Mat::zeros(3, FEATURE_COUNT),
            timestamps: (0..3).map(|i| start + chrono::Duration::hours(i)).collect(),
        };
        let trace = AttackTrace {
            method: AttackMethod::Saa,
            config: AttackConfig::default(),
            final_loss: 0.25,
            per_iteration: vec![IterationRecord {
                choice: IterationChoice::Cells(vec![(0, 1)]),
                loss: 0.25,
            }],
            query_count: 24,
            linf_norm: 0.05,
            adversarial_window: window.clone(),
            clean_window: window,
        };
        let json = trace.to_json();
        for key in [
            "method",
            "config",
            "final_loss",
            "per_iteration",
            "query_count",
            "linf_norm",
            "adversarial_window",
            "clean_window",
        ] {
            assert!(json.get(key).is_some(), "missing `{key}`");
        }
        assert_eq!(json["method"], "saa");
    }
}
