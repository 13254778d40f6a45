//! Gradient sources for the attacks: analytic reverse-mode (white-box) or
//! query-based two-sided finite differences (black-box).

use super::{AttackConfig, AttackError, AttackMode, WeatherFeature};
use crate::forecast::{squared_error, FeatureWindow, ForecastModel};
use crate::mat::Mat;

/// Source of loss gradients with respect to the window entries.
///
/// Implementations report gradients only for the weather columns; load and
/// time-index entries are zero by contract. `trace_loss` is the
/// experimenter's out-of-band measurement for attack traces and is not
/// counted as an attacker query.
pub trait GradientOracle {
    fn gradient(&mut self, window: &FeatureWindow, target: f64) -> Result<Mat, AttackError>;

    /// Model queries issued so far (always zero for white-box oracles).
    fn queries(&self) -> u64 {
        0
    }

    fn trace_loss(&self, window: &FeatureWindow, target: f64) -> Result<f64, AttackError>;
}

/// White-box oracle: exact reverse-mode gradients from the model, with the
/// protected columns zeroed.
pub struct AnalyticGradient<'a> {
    model: &'a ForecastModel,
}

impl<'a> AnalyticGradient<'a> {
    pub fn new(model: &'a ForecastModel) -> Self {
        Self { model }
    }
}

impl GradientOracle for AnalyticGradient<'_> {
    fn gradient(&mut self, window: &FeatureWindow, target: f64) -> Result<Mat, AttackError> {
        let full = self.model.input_gradient(window, target)?;
        let mut grad = Mat::zeros(full.rows(), full.cols());
        for i in 0..full.rows() {
            for feature in WeatherFeature::ALL {
                let j = feature.column();
                grad.set(i, j, full.get(i, j));
            }
        }
        if grad.as_slice().iter().any(|g| !g.is_finite()) {
            return Err(AttackError::NonFiniteLoss);
        }
        Ok(grad)
    }

    fn trace_loss(&self, window: &FeatureWindow, target: f64) -> Result<f64, AttackError> {
        Ok(self.model.loss(window, target)?)
    }
}

/// Black-box oracle: estimates each eligible coordinate's gradient from two
/// forecast queries at `x ± delta` along the coordinate's unit matrix.
pub struct FiniteDifferenceGradient<'a> {
    model: &'a ForecastModel,
    delta: f64,
    queries: u64,
}

impl<'a> FiniteDifferenceGradient<'a> {
    pub fn new(model: &'a ForecastModel, delta: f64) -> Self {
        Self { model, delta, queries: 0 }
    }

    /// One attacker query: a forecast for an arbitrary window.
    fn query_loss(&mut self, window: &FeatureWindow, target: f64) -> Result<f64, AttackError> {
        self.queries += 1;
        let loss = squared_error(self.model.predict(window)?, target);
        if !loss.is_finite() {
            return Err(AttackError::NonFiniteLoss);
        }
        Ok(loss)
    }
}

impl GradientOracle for FiniteDifferenceGradient<'_> {
    fn gradient(&mut self, window: &FeatureWindow, target: f64) -> Result<Mat, AttackError> {
        let h = window.values.rows();
        let mut grad = Mat::zeros(h, window.values.cols());
        let mut probe = window.clone();
        for i in 0..h {
            for feature in WeatherFeature::ALL {
                let j = feature.column();
                let base = window.values.get(i, j);
                probe.values.set(i, j, base + self.delta);
                let plus = self.query_loss(&probe, target)?;
                probe.values.set(i, j, base - self.delta);
                let minus = self.query_loss(&probe, target)?;
                probe.values.set(i, j, base);
                grad.set(i, j, (plus - minus) / (2.0 * self.delta));
            }
        }
        Ok(grad)
    }

    fn queries(&self) -> u64 {
        self.queries
    }

    fn trace_loss(&self, window: &FeatureWindow, target: f64) -> Result<f64, AttackError> {
        Ok(self.model.loss(window, target)?)
    }
}

/// Oracle matching the config's attack mode.
pub fn oracle_for<'a>(
    model: &'a ForecastModel,
    config: &AttackConfig,
) -> Box<dyn GradientOracle + 'a> {
    match config.mode {
        AttackMode::WhiteBox => Box::new(AnalyticGradient::new(model)),
        AttackMode::BlackBox => Box::new(FiniteDifferenceGradient::new(model, config.fd_delta)),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::forecast::{Architecture, Normalizer, FEATURE_COUNT};
    use chrono::{TimeZone, Utc};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    pub(crate) fn test_model(arch: Architecture, h: usize, seed: u64) -> ForecastModel {
        let mut rng = StdRng::seed_from_u64(seed);
        let count = arch.param_count(h);
        ForecastModel {
            architecture: arch,
            h,
            theta: (0..count).map(|_| rng.gen_range(-0.4..0.4)).collect(),
            normalizer: Normalizer { ranges: [(0.0, 1.0); FEATURE_COUNT] },
            training_log: Vec::new(),
            seed,
        }
    }

    pub(crate) fn test_window(h: usize, seed: u64) -> FeatureWindow {
        let mut rng = StdRng::seed_from_u64(seed);
        let start = Utc.with_ymd_and_hms(2024, 5, 1, 0, 0, 0).unwrap();
        let mut values = Mat::zeros(h, FEATURE_COUNT);
        for i in 0..h {
            for j in 0..FEATURE_COUNT {
                values.set(i, j, rng.gen_range(0.1..0.9));
            }
        }
        FeatureWindow {
            values,
            timestamps: (0..h).map(|i| start + chrono::Duration::hours(i as i64)).collect(),
        }
    }

    #[test]
    fn finite_difference_exact_on_linear_model() {
        let model = test_model(Architecture::Linear, 6, 1);
        let window = test_window(6, 2);
        let target = 0.2;
        let mut fd = FiniteDifferenceGradient::new(&model, 0.05);
        let mut analytic = AnalyticGradient::new(&model);
        let g_fd = fd.gradient(&window, target).unwrap();
        let g_an = analytic.gradient(&window, target).unwrap();
        assert!(g_fd.max_abs_diff(&g_an) < 1e-9);
    }
}
