//! Cold-load-pickup demand inflation.
//!
//! Re-energized demand overshoots its steady-state value and decays back
//! exponentially: `P(t) = P0 * (1 + a * exp(-(t - t0)/tau))`. Overshoot `a`
//! and decay `tau` depend on the load type and the time of day the pickup
//! happens; the built-in table covers all eight combinations.

use chrono::{DateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClpuError {
    #[error("instant precedes the pickup time by {minutes_early} minutes")]
    TimeBeforePickup { minutes_early: f64 },
    #[error("pickup hour {pickup_hour} outside series of length {len}")]
    IndexOutOfRange { pickup_hour: usize, len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadType {
    Residential,
    Commercial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeOfDay {
    Morning,
    Afternoon,
    Evening,
    Night,
}

impl TimeOfDay {
    /// Bucket for a local hour: night 00-06, morning 06-12, afternoon 12-18,
    /// evening 18-24.
    pub fn from_hour(hour: u32) -> Self {
        match hour % 24 {
            0..=5 => TimeOfDay::Night,
            6..=11 => TimeOfDay::Morning,
            12..=17 => TimeOfDay::Afternoon,
            _ => TimeOfDay::Evening,
        }
    }

    pub fn from_instant(instant: DateTime<Utc>) -> Self {
        Self::from_hour(instant.hour())
    }
}

/// Overshoot and decay parameters for one pickup event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClpuParams {
    /// Dimensionless overshoot `a` at the pickup instant.
    pub overshoot: f64,
    /// Decay time constant `tau` in minutes.
    pub decay_minutes: f64,
}

/// Overshoot/decay pairs for every load type and pickup time of day.
pub fn lookup_params(load_type: LoadType, restoration_time: TimeOfDay) -> ClpuParams {
    let (overshoot, decay_minutes) = match (load_type, restoration_time) {
        (LoadType::Residential, TimeOfDay::Morning) => (1.33, 11.5),
        (LoadType::Residential, TimeOfDay::Afternoon) => (1.03, 34.0),
        (LoadType::Residential, TimeOfDay::Evening) => (0.62, 9.8),
        (LoadType::Residential, TimeOfDay::Night) => (0.96, 10.3),
        (LoadType::Commercial, TimeOfDay::Morning) => (0.62, 144.1),
        (LoadType::Commercial, TimeOfDay::Afternoon) => (0.51, 31.4),
        (LoadType::Commercial, TimeOfDay::Evening) => (0.24, 20.8),
        (LoadType::Commercial, TimeOfDay::Night) => (0.70, 9.4),
    };
    ClpuParams { overshoot, decay_minutes }
}

/// Demand in kW at `minutes_after_pickup`, given steady-state demand `p0_kw`.
pub fn clpu_power(
    p0_kw: f64,
    params: ClpuParams,
    minutes_after_pickup: f64,
) -> Result<f64, ClpuError> {
    if minutes_after_pickup < 0.0 {
        return Err(ClpuError::TimeBeforePickup { minutes_early: -minutes_after_pickup });
    }
    Ok(p0_kw * (1.0 + params.overshoot * (-minutes_after_pickup / params.decay_minutes).exp()))
}

/// Inflation factor alone, for scaling per-stage forecasts.
pub fn clpu_factor(params: ClpuParams, minutes_after_pickup: f64) -> Result<f64, ClpuError> {
    clpu_power(1.0, params, minutes_after_pickup)
}

/// Apply pickup at `pickup_hour` to an hourly forecast series: hours before
/// pickup are zero (de-energized); hour `h >= pickup_hour` is scaled by the
/// decay factor evaluated at the start of the hour.
pub fn apply_clpu(
    series_kw: &[f64],
    pickup_hour: usize,
    params: ClpuParams,
) -> Result<Vec<f64>, ClpuError> {
    if pickup_hour >= series_kw.len() {
        return Err(ClpuError::IndexOutOfRange { pickup_hour, len: series_kw.len() });
    }
    let mut adjusted = vec![0.0; series_kw.len()];
    for (h, slot) in adjusted.iter_mut().enumerate().skip(pickup_hour) {
        let minutes = 60.0 * (h - pickup_hour) as f64;
        *slot = clpu_power(series_kw[h], params, minutes)?;
    }
    Ok(adjusted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values_verbatim() {
        let expected = [
            (LoadType::Residential, TimeOfDay::Morning, 1.33, 11.5),
            (LoadType::Residential, TimeOfDay::Afternoon, 1.03, 34.0),
            (LoadType::Residential, TimeOfDay::Evening, 0.62, 9.8),
            (LoadType::Residential, TimeOfDay::Night, 0.96, 10.3),
            (LoadType::Commercial, TimeOfDay::Morning, 0.62, 144.1),
            (LoadType::Commercial, TimeOfDay::Afternoon, 0.51, 31.4),
            (LoadType::Commercial, TimeOfDay::Evening, 0.24, 20.8),
            (LoadType::Commercial, TimeOfDay::Night, 0.70, 9.4),
        ];
        for (load_type, time, a, tau) in expected {
            let params = lookup_params(load_type, time);
            assert_eq!(params.overshoot, a, "{load_type:?}/{time:?}");
            assert_eq!(params.decay_minutes, tau, "{load_type:?}/{time:?}");
        }
    }

    #[test]
    fn pickup_instant_value() {
        let params = lookup_params(LoadType::Residential, TimeOfDay::Morning);
        let p = clpu_power(100.0, params, 0.0).unwrap();
        assert!((p - 233.0).abs() < 1e-9);
    }

    #[test]
    fn decays_to_steady_state() {
        let params = lookup_params(LoadType::Residential, TimeOfDay::Morning);
        let p = clpu_power(100.0, params, 1e7).unwrap();
        assert!((p - 100.0).abs() < 1e-9);
    }

    #[test]
    fn one_time_constant_matches_direct_evaluation() {
        let params = lookup_params(LoadType::Residential, TimeOfDay::Morning);
        let p = clpu_power(100.0, params, params.decay_minutes).unwrap();
        // Independent evaluation of the decay expression.
        let expected = 100.0 * (1.0 + 1.33 * (-1.0f64).exp());
        assert!((p - expected).abs() < 1e-12);
    }

    #[test]
    fn strictly_decreasing_with_infimum_p0() {
        let params = lookup_params(LoadType::Commercial, TimeOfDay::Night);
        let mut last = f64::INFINITY;
        for step in 0..200 {
            let p = clpu_power(50.0, params, step as f64).unwrap();
            assert!(p < last);
            assert!(p > 50.0);
            last = p;
        }
    }

    #[test]
    fn before_pickup_rejected() {
        let params = lookup_params(LoadType::Commercial, TimeOfDay::Night);
        assert!(matches!(
            clpu_power(50.0, params, -1.0),
            Err(ClpuError::TimeBeforePickup { .. })
        ));
    }

    #[test]
    fn apply_clpu_hour_zero_pickup() {
        let params = lookup_params(LoadType::Residential, TimeOfDay::Morning);
        let adjusted = apply_clpu(&[100.0; 6], 0, params).unwrap();
        assert!((adjusted[0] - 233.0).abs() < 1e-9);
    }

    #[test]
    fn apply_clpu_zero_overshoot_is_identity_after_pickup() {
        let params = ClpuParams { overshoot: 0.0, decay_minutes: 10.0 };
        let forecast = [80.0, 90.0, 100.0, 110.0];
        let adjusted = apply_clpu(&forecast, 1, params).unwrap();
        assert_eq!(adjusted, vec![0.0, 90.0, 100.0, 110.0]);
    }

    #[test]
    fn apply_clpu_bounds_forecast_from_above() {
        let params = lookup_params(LoadType::Commercial, TimeOfDay::Morning);
        let forecast = [120.0, 120.0, 120.0, 120.0, 120.0, 120.0];
        let adjusted = apply_clpu(&forecast, 2, params).unwrap();
        assert_eq!(&adjusted[..2], &[0.0, 0.0]);
        let mut last_ratio = f64::INFINITY;
        for h in 2..6 {
            // Direct pointwise comparison against the decay expression.
            let minutes = 60.0 * (h - 2) as f64;
            let direct = 120.0 * (1.0 + 0.62 * (-minutes / 144.1).exp());
            assert!((adjusted[h] - direct).abs() < 1e-12);
            assert!(adjusted[h] >= 120.0);
            let ratio = adjusted[h] / 120.0;
            assert!(ratio < last_ratio);
            last_ratio = ratio;
        }
    }

    #[test]
    fn apply_clpu_pickup_out_of_range() {
        let params = lookup_params(LoadType::Residential, TimeOfDay::Night);
        assert!(matches!(
            apply_clpu(&[1.0, 2.0], 2, params),
            Err(ClpuError::IndexOutOfRange { pickup_hour: 2, len: 2 })
        ));
    }

    #[test]
    fn hour_buckets() {
        assert_eq!(TimeOfDay::from_hour(0), TimeOfDay::Night);
        assert_eq!(TimeOfDay::from_hour(5), TimeOfDay::Night);
        assert_eq!(TimeOfDay::from_hour(6), TimeOfDay::Morning);
        assert_eq!(TimeOfDay::from_hour(11), TimeOfDay::Morning);
        assert_eq!(TimeOfDay::from_hour(12), TimeOfDay::Afternoon);
        assert_eq!(TimeOfDay::from_hour(17), TimeOfDay::Afternoon);
        assert_eq!(TimeOfDay::from_hour(18), TimeOfDay::Evening);
        assert_eq!(TimeOfDay::from_hour(23), TimeOfDay::Evening);
    }
}
