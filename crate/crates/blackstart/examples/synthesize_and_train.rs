//! Generate a synthetic profile, train a forecaster on it, and report how
//! the fit compares with the target's own variance.
//!
//! ```bash
//! cargo run --release --example synthesize_and_train
//! ```

use blackstart::experiment::synth_dataset;
use blackstart::forecast::{build_windows, fit_normalizer, train, Architecture, TrainConfig};

fn main() {
    let series = synth_dataset(4, 45, "small_hotel");
    println!("generated {} hourly rows for small_hotel", series.len());

    let samples = build_windows(&series, 72).expect("hourly series");
    let n_train = samples.len() - 24;
    let normalizer = fit_normalizer(&samples[..n_train]).expect("non-empty");
    let normalized = normalizer.normalize_samples(&samples);

    let config = TrainConfig {
        architecture: Architecture::Recurrent { hidden: 8 },
        learning_rate: 0.05,
        epochs: 300,
        seed: 4,
    };
    let model = train(&normalized[..n_train], &normalizer, config).expect("training");

    let (first_epoch, first_mse) = model.training_log[0];
    let (last_epoch, last_mse) = *model.training_log.last().unwrap();
    println!("training mse: epoch {first_epoch} {first_mse:.5} -> epoch {last_epoch} {last_mse:.5}");

    // Held-out check against the target variance.
    let test = &normalized[n_train..];
    let mean = test.iter().map(|s| s.target).sum::<f64>() / test.len() as f64;
    let variance = test.iter().map(|s| (s.target - mean).powi(2)).sum::<f64>() / test.len() as f64;
    let mse = test
        .iter()
        .map(|s| model.loss(&s.window, s.target).unwrap())
        .sum::<f64>()
        / test.len() as f64;
    println!("held-out mse {mse:.5} vs target variance {variance:.5} (r2 {:.2})", 1.0 - mse / variance);

    let kw = model.predict_kw(&test[0].window).unwrap();
    println!("next-hour forecast for the first held-out window: {kw:.1} kW");
}
