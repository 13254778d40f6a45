//! Synthetic hourly load/weather series, one flavor per forecast profile.
//!
//! Loads combine a daily/weekly shape with a temperature-coupled component
//! (cooling above and heating below a comfort band), milder humidity and
//! wind terms, and seeded noise, so weather genuinely moves the target and
//! gradient-based attacks have something to bite on.

use crate::forecast::SeriesRow;
use chrono::{Datelike, TimeZone, Timelike, Utc};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Per-profile shape parameters.
#[derive(Debug, Clone, Copy)]
struct ProfileShape {
    base_kw: f64,
    daily_amp: f64,
    /// Hour of the daily peak.
    peak_hour: f64,
    /// Secondary peak weight (restaurants get lunch + dinner bumps).
    second_peak: f64,
    weekend_factor: f64,
    cooling_kw_per_c: f64,
    heating_kw_per_c: f64,
    humidity_kw: f64,
    wind_kw: f64,
    noise_kw: f64,
}

fn shape_for(profile: &str) -> ProfileShape {
    match profile {
        "full_service_restaurant" => ProfileShape {
            base_kw: 95.0,
            daily_amp: 45.0,
            peak_hour: 19.0,
            second_peak: 0.6,
            weekend_factor: 1.1,
            cooling_kw_per_c: 6.5,
            heating_kw_per_c: 2.0,
            humidity_kw: 9.0,
            wind_kw: 3.0,
            noise_kw: 3.0,
        },
        "midrise_apartment" => ProfileShape {
            base_kw: 70.0,
            daily_amp: 25.0,
            peak_hour: 20.0,
            second_peak: 0.25,
            weekend_factor: 1.05,
            cooling_kw_per_c: 4.5,
            heating_kw_per_c: 3.0,
            humidity_kw: 5.0,
            wind_kw: 2.0,
            noise_kw: 2.5,
        },
        "quick_service_restaurant" => ProfileShape {
            base_kw: 55.0,
            daily_amp: 28.0,
            peak_hour: 12.5,
            second_peak: 0.7,
            weekend_factor: 1.0,
            cooling_kw_per_c: 4.0,
            heating_kw_per_c: 1.5,
            humidity_kw: 6.0,
            wind_kw: 2.0,
            noise_kw: 2.0,
        },
        "small_hotel" => ProfileShape {
            base_kw: 85.0,
            daily_amp: 30.0,
            peak_hour: 18.0,
            second_peak: 0.4,
            weekend_factor: 1.15,
            cooling_kw_per_c: 5.5,
            heating_kw_per_c: 2.5,
            humidity_kw: 7.0,
            wind_kw: 2.5,
            noise_kw: 2.5,
        },
        "res_high" => ProfileShape {
            base_kw: 50.0,
            daily_amp: 22.0,
            peak_hour: 19.5,
            second_peak: 0.3,
            weekend_factor: 1.08,
            cooling_kw_per_c: 4.0,
            heating_kw_per_c: 3.5,
            humidity_kw: 4.0,
            wind_kw: 1.5,
            noise_kw: 2.0,
        },
        "res_low" => ProfileShape {
            base_kw: 20.0,
            daily_amp: 8.0,
            peak_hour: 19.0,
            second_peak: 0.2,
            weekend_factor: 1.05,
            cooling_kw_per_c: 1.5,
            heating_kw_per_c: 1.2,
            humidity_kw: 1.5,
            wind_kw: 0.6,
            noise_kw: 0.8,
        },
        // res_base and anything unrecognized.
        _ => ProfileShape {
            base_kw: 35.0,
            daily_amp: 14.0,
            peak_hour: 19.0,
            second_peak: 0.25,
            weekend_factor: 1.06,
            cooling_kw_per_c: 2.8,
            heating_kw_per_c: 2.2,
            humidity_kw: 2.5,
            wind_kw: 1.0,
            noise_kw: 1.4,
        },
    }
}

/// Generate `days` of hourly rows for one profile, deterministically from
/// the seed.
pub fn synth_dataset(seed: u64, days: usize, profile_kind: &str) -> Vec<SeriesRow> {
    assert!(days >= 1, "need at least one day");
    let shape = shape_for(profile_kind);
    let mut rng = StdRng::seed_from_u64(seed);
    let start = Utc.with_ymd_and_hms(2024, 6, 3, 0, 0, 0).unwrap();
    let hours = days * 24;

    // Weather first, with mild autocorrelation.
    let mut temp_noise = 0.0;
    let mut rows = Vec::with_capacity(hours);
    for i in 0..hours {
        let ts = start + chrono::Duration::hours(i as i64);
        let hour = ts.hour() as f64;
        let day = i as f64 / 24.0;
        temp_noise = 0.85 * temp_noise + rng.gen_range(-0.9..0.9);
        let temp_c = 21.0
            + 5.0 * (std::f64::consts::TAU * day / 30.0).sin()
            + 6.5 * (std::f64::consts::TAU * (hour - 14.5) / 24.0).cos()
            + temp_noise;
        let humidity_pct = (62.0
            + 18.0 * (std::f64::consts::TAU * (day + 3.0) / 11.0).sin()
            - 0.8 * (temp_c - 21.0)
            + rng.gen_range(-4.0..4.0))
        .clamp(15.0, 100.0);
        let wind_speed_mps =
            (4.0 + 2.2 * (std::f64::consts::TAU * (day + 1.0) / 5.0).sin()
                + rng.gen_range(-1.2..1.2))
            .max(0.0);
        let wind_dir_deg = (200.0
            + 130.0 * (std::f64::consts::TAU * day / 13.0).sin()
            + rng.gen_range(-25.0..25.0))
        .rem_euclid(360.0);

        let weekday = ts.weekday().num_days_from_monday();
        let weekend = if weekday >= 5 { shape.weekend_factor } else { 1.0 };
        let main_peak =
            (std::f64::consts::TAU * (hour - shape.peak_hour) / 24.0).cos().max(0.0).powi(2);
        let lunch_peak =
            (std::f64::consts::TAU * (hour - 12.0) / 24.0).cos().max(0.0).powi(6);
        let cooling = (temp_c - 23.0).max(0.0) * shape.cooling_kw_per_c;
        let heating = (17.0 - temp_c).max(0.0) * shape.heating_kw_per_c;
        let load_kw = weekend
            * (shape.base_kw
                + shape.daily_amp * (main_peak + shape.second_peak * lunch_peak)
                + cooling
                + heating
                + shape.humidity_kw * (humidity_pct - 60.0) / 40.0
                + shape.wind_kw * wind_speed_mps / 10.0)
            + rng.gen_range(-shape.noise_kw..shape.noise_kw);

        rows.push(SeriesRow {
            timestamp: ts,
            load_kw: load_kw.max(1.0),
            temp_c,
            humidity_pct,
            wind_speed_mps,
            wind_dir_deg,
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feeder::builtin::PROFILES;
    use crate::forecast::write_series_csv;

    #[test]
    fn same_seed_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_series_csv(&a, &synth_dataset(9, 31, "res_base")).unwrap();
        write_series_csv(&b, &synth_dataset(9, 31, "res_base")).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn thirty_days_is_720_rows() {
        assert_eq!(synth_dataset(1, 30, "small_hotel").len(), 720);
    }

    #[test]
    fn load_correlates_with_temperature() {
        for profile in PROFILES {
            let rows = synth_dataset(5, 60, profile);
            let n = rows.len() as f64;
            let mean_l = rows.iter().map(|r| r.load_kw).sum::<f64>() / n;
            let mean_t = rows.iter().map(|r| r.temp_c).sum::<f64>() / n;
            let mut cov = 0.0;
            let mut var_l = 0.0;
            let mut var_t = 0.0;
            for r in &rows {
                cov += (r.load_kw - mean_l) * (r.temp_c - mean_t);
                var_l += (r.load_kw - mean_l).powi(2);
                var_t += (r.temp_c - mean_t).powi(2);
            }
            let r = cov / (var_l.sqrt() * var_t.sqrt());
            assert!(r.abs() > 0.3, "{profile}: r = {r}");
        }
    }

    #[test]
    fn distinct_profiles_have_distinct_scales() {
        let big = synth_dataset(2, 30, "full_service_restaurant");
        let small = synth_dataset(2, 30, "res_low");
        let mean = |rows: &[SeriesRow]| rows.iter().map(|r| r.load_kw).sum::<f64>() / rows.len() as f64;
        assert!(mean(&big) > 3.0 * mean(&small));
    }
}
