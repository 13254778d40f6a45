//! Hourly series ingestion, window construction, and min-max normalization.

use super::{FeatureWindow, ForecastError, ForecastSample, FEATURE_COUNT, LOAD_COLUMN};
use crate::mat::Mat;
use chrono::{DateTime, Timelike, Utc};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub const CSV_HEADER: &str = "timestamp,load_kw,temp_c,humidity_pct,wind_speed_mps,wind_dir_deg";

/// One hourly observation of load plus weather.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub timestamp: DateTime<Utc>,
    pub load_kw: f64,
    pub temp_c: f64,
    pub humidity_pct: f64,
    pub wind_speed_mps: f64,
    pub wind_dir_deg: f64,
}

impl SeriesRow {
    fn features(&self) -> [f64; FEATURE_COUNT] {
        [
            self.load_kw,
            self.temp_c,
            self.humidity_pct,
            self.wind_speed_mps,
            self.wind_dir_deg,
            f64::from(self.timestamp.hour()) / 24.0,
        ]
    }
}

pub fn read_series_csv(path: &Path) -> Result<Vec<SeriesRow>, ForecastError> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(ForecastError::EmptyDataset),
    };
    if header.trim() != CSV_HEADER {
        return Err(ForecastError::Csv {
            line: 1,
            message: format!("expected header `{CSV_HEADER}`"),
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_row(&line, idx + 1)?);
    }
    Ok(rows)
}

fn parse_row(line: &str, line_no: usize) -> Result<SeriesRow, ForecastError> {
    let err = |message: String| ForecastError::Csv { line: line_no, message };
    let fields: Vec<&str> = line.trim().split(',').collect();
    if fields.len() != 6 {
        return Err(err(format!("expected 6 fields, got {}", fields.len())));
    }
    let timestamp = DateTime::parse_from_rfc3339(fields[0])
        .map_err(|e| err(format!("bad timestamp: {e}")))?
        .with_timezone(&Utc);
    let mut nums = [0.0; 5];
    for (i, field) in fields[1..].iter().enumerate() {
        nums[i] = field
            .parse::<f64>()
            .map_err(|e| err(format!("bad number `{field}`: {e}")))?;
    }
    Ok(SeriesRow {
        timestamp,
        load_kw: nums[0],
        temp_c: nums[1],
        humidity_pct: nums[2],
        wind_speed_mps: nums[3],
        wind_dir_deg: nums[4],
    })
}

pub fn write_series_csv(path: &Path, rows: &[SeriesRow]) -> Result<(), ForecastError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            r.load_kw,
            r.temp_c,
            r.humidity_pct,
            r.wind_speed_mps,
            r.wind_dir_deg
        )?;
    }
    Ok(())
}

/// Slide a length-`h` window over the series. Yields exactly `T - h` samples;
/// sample `k` covers rows `k..k+h` and targets the load at row `k+h`.
/// Values are raw (physical units) until passed through a [`Normalizer`].
pub fn build_windows(series: &[SeriesRow], h: usize) -> Result<Vec<ForecastSample>, ForecastError> {
    assert!(h >= 1, "window length must be positive");
    if series.len() < h + 1 {
        return Err(ForecastError::SeriesTooShort {
            len: series.len(),
            h,
            min: h + 1,
        });
    }
    for (i, pair) in series.windows(2).enumerate() {
        let gap = pair[1].timestamp - pair[0].timestamp;
        if gap != chrono::Duration::hours(1) {
            return Err(ForecastError::NonUniformSpacing {
                index: i,
                gap_minutes: gap.num_minutes(),
            });
        }
    }
    let mut samples = Vec::with_capacity(series.len() - h);
    for k in 0..series.len() - h {
        let rows: Vec<Vec<f64>> = series[k..k + h].iter().map(|r| r.features().to_vec()).collect();
        samples.push(ForecastSample {
            window: FeatureWindow {
                values: Mat::from_rows(&rows),
                timestamps: series[k..k + h].iter().map(|r| r.timestamp).collect(),
            },
            target: series[k + h].load_kw,
        });
    }
    Ok(samples)
}

/// Per-feature min-max ranges fitted on training windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    /// `(min, max)` per feature column. A constant column gets `(v, v + 1)`.
    pub ranges: [(f64, f64); FEATURE_COUNT],
}

/// Scan every training row and record per-feature ranges.
pub fn fit_normalizer(samples: &[ForecastSample]) -> Result<Normalizer, ForecastError> {
    if samples.is_empty() {
        return Err(ForecastError::EmptyDataset);
    }
    let mut ranges = [(f64::INFINITY, f64::NEG_INFINITY); FEATURE_COUNT];
    for s in samples {
        let w = &s.window.values;
        for i in 0..w.rows() {
            for (j, range) in ranges.iter_mut().enumerate() {
                let v = w.get(i, j);
                range.0 = range.0.min(v);
                range.1 = range.1.max(v);
            }
        }
    }
    for r in &mut ranges {
        if r.1 <= r.0 {
            *r = (r.0, r.0 + 1.0);
        }
    }
    Ok(Normalizer { ranges })
}

impl Normalizer {
    /// Map a raw value into `[0, 1]`. Values outside the fitted range are
    /// clamped so downstream box constraints stay meaningful.
    pub fn normalize(&self, feature: usize, v: f64) -> f64 {
        let (lo, hi) = self.ranges[feature];
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    pub fn denormalize(&self, feature: usize, v: f64) -> f64 {
        let (lo, hi) = self.ranges[feature];
        lo + v * (hi - lo)
    }

    pub fn normalize_window(&self, window: &FeatureWindow) -> FeatureWindow {
        let mut values = window.values.clone();
        for i in 0..values.rows() {
            for j in 0..FEATURE_COUNT {
                values.set(i, j, self.normalize(j, window.values.get(i, j)));
            }
        }
        FeatureWindow {
            values,
            timestamps: window.timestamps.clone(),
        }
    }

    pub fn normalize_sample(&self, sample: &ForecastSample) -> ForecastSample {
        ForecastSample {
            window: self.normalize_window(&sample.window),
            target: self.normalize(LOAD_COLUMN, sample.target),
        }
    }

    pub fn normalize_samples(&self, samples: &[ForecastSample]) -> Vec<ForecastSample> {
        samples.iter().map(|s| self.normalize_sample(s)).collect()
    }

    /// Denormalized load in kW for a normalized model output.
    pub fn load_kw(&self, normalized: f64) -> f64 {
        self.denormalize(LOAD_COLUMN, normalized)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use chrono::TimeZone;

    pub(crate) fn synthetic_series(n: usize) -> Vec<SeriesRow> {
        let start = Utc.with_ymd_and_hms(2024, 3, 1, 0, 0, 0).unwrap();
        (0..n)
            .map(|i| {
                let t = i as f64;
                SeriesRow {
                    timestamp: start + chrono::Duration::hours(i as i64),
                    load_kw: 50.0 + 10.0 * (t * 0.26).sin(),
                    temp_c: 10.0 + 8.0 * (t * 0.26 + 1.0).sin(),
                    humidity_pct: 60.0 + 20.0 * (t * 0.11).cos(),
                    wind_speed_mps: 4.0 + 2.0 * (t * 0.37).sin(),
                    wind_dir_deg: 180.0 + 120.0 * (t * 0.05).sin(),
                }
            })
            .collect()
    }

    #[test]
    fn window_count_is_t_minus_h() {
        let series = synthetic_series(100);
        let samples = build_windows(&series, 72).unwrap();
        assert_eq!(samples.len(), 28);
    }

    #[test]
    fn single_window_targets_last_row() {
        let series = synthetic_series(73);
        let samples = build_windows(&series, 72).unwrap();
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].target, series[72].load_kw);
        assert_eq!(samples[0].window.values.get(0, 0), series[0].load_kw);
    }

    #[test]
    fn short_series_rejected() {
        let series = synthetic_series(72);
        assert!(matches!(
            build_windows(&series, 72),
            Err(ForecastError::SeriesTooShort { len: 72, h: 72, min: 73 })
        ));
    }

    #[test]
    fn gap_rejected() {
        let mut series = synthetic_series(80);
        series.remove(40);
        assert!(matches!(
            build_windows(&series, 24),
            Err(ForecastError::NonUniformSpacing { index: 39, gap_minutes: 120 })
        ));
    }

    #[test]
    fn time_index_is_hour_over_24() {
        let series = synthetic_series(30);
        let samples = build_windows(&series, 24).unwrap();
        for (i, ts) in samples[0].window.timestamps.iter().enumerate() {
            assert_eq!(
                samples[0].window.values.get(i, 5),
                f64::from(ts.hour()) / 24.0
            );
        }
    }

    #[test]
    fn constant_feature_gets_unit_range() {
        let mut series = synthetic_series(30);
        for r in &mut series {
            r.humidity_pct = 5.0;
        }
        let samples = build_windows(&series, 10).unwrap();
        let norm = fit_normalizer(&samples).unwrap();
        assert_eq!(norm.ranges[2], (5.0, 6.0));
    }

    #[test]
    fn midpoint_normalizes_to_half() {
        let norm = Normalizer { ranges: [(10.0, 30.0); FEATURE_COUNT] };
        assert_eq!(norm.normalize(0, 20.0), 0.5);
        assert_eq!(norm.denormalize(0, 0.5), 20.0);
    }

    #[test]
    fn ranges_match_direct_scan() {
        let series = synthetic_series(120);
        let samples = build_windows(&series, 24).unwrap();
        let norm = fit_normalizer(&samples).unwrap();
        // Independent scan over the same rows, one feature at a time.
        for j in 0..FEATURE_COUNT {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for s in &samples {
                for i in 0..s.window.values.rows() {
                    lo = lo.min(s.window.values.get(i, j));
                    hi = hi.max(s.window.values.get(i, j));
                }
            }
            assert_eq!(norm.ranges[j], (lo, hi));
        }
    }

    #[test]
    fn round_trip_within_1e12() {
        let series = synthetic_series(120);
        let samples = build_windows(&series, 24).unwrap();
        let norm = fit_normalizer(&samples).unwrap();
        for j in 0..FEATURE_COUNT {
            let (lo, hi) = norm.ranges[j];
            for k in 0..=10 {
                let v = lo + (hi - lo) * (k as f64) / 10.0;
                let rt = norm.denormalize(j, norm.normalize(j, v));
                assert!((rt - v).abs() <= 1e-12, "feature {j}: {v} -> {rt}");
            }
        }
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(matches!(fit_normalizer(&[]), Err(ForecastError::EmptyDataset)));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        let series = synthetic_series(48);
        write_series_csv(&path, &series).unwrap();
        let back = read_series_csv(&path).unwrap();
        assert_eq!(back.len(), series.len());
        for (a, b) in series.iter().zip(&back) {
            assert_eq!(a.timestamp, b.timestamp);
            assert!((a.load_kw - b.load_kw).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_bad_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "time,load\n").unwrap();
        assert!(matches!(
            read_series_csv(&path),
            Err(ForecastError::Csv { line: 1, .. })
        ));
    }
}

#[cfg(test)]
mod proptests {
    use super::tests::synthetic_series;
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn window_count_is_always_t_minus_h(t in 2usize..160, h in 1usize..80) {
            let series = synthetic_series(t);
            match build_windows(&series, h) {
                Ok(samples) => {
                    prop_assert!(t >= h + 1);
                    prop_assert_eq!(samples.len(), t - h);
                }
                Err(ForecastError::SeriesTooShort { .. }) => prop_assert!(t < h + 1),
                Err(other) => prop_assert!(false, "unexpected error {other}"),
            }
        }

        #[test]
        fn normalization_round_trips_within_1e12(
            lo in -50.0f64..50.0,
            span in 0.1f64..200.0,
            frac in 0.0f64..1.0,
        ) {
            let norm = Normalizer { ranges: [(lo, lo + span); FEATURE_COUNT] };
            let v = lo + span * frac;
            for feature in 0..FEATURE_COUNT {
                let rt = norm.denormalize(feature, norm.normalize(feature, v));
                prop_assert!((rt - v).abs() <= 1e-12);
            }
        }
    }
}
