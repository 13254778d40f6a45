//! Black-box attack mechanics: two-sided finite-difference gradients from
//! forecast queries, their agreement with analytic gradients, and the exact
//! query bill.
//!
//! ```bash
//! cargo run --release --example black_box_queries
//! ```

use blackstart::attack::{
    eligible_cell_count, sparse_attack, AnalyticGradient, AttackConfig, AttackMode,
    FiniteDifferenceGradient, GradientOracle, WeatherFeature,
};
use blackstart::experiment::synth_dataset;
use blackstart::forecast::{build_windows, fit_normalizer, train, Architecture, TrainConfig};

fn main() {
    let series = synth_dataset(9, 40, "midrise_apartment");
    let samples = build_windows(&series, 48).expect("hourly series");
    let n_train = samples.len() - 4;
    let normalizer = fit_normalizer(&samples[..n_train]).expect("non-empty");
    let normalized = normalizer.normalize_samples(&samples);
    let model = train(
        &normalized[..n_train],
        &normalizer,
        TrainConfig {
            architecture: Architecture::Recurrent { hidden: 6 },
            learning_rate: 0.05,
            epochs: 200,
            seed: 9,
        },
    )
    .expect("training");

    let sample = &normalized[n_train];
    let analytic = AnalyticGradient::new(&model).gradient(&sample.window, sample.target).unwrap();
    let mut fd_oracle = FiniteDifferenceGradient::new(&model, 1e-3);
    let estimated = fd_oracle.gradient(&sample.window, sample.target).unwrap();

    let mut err2 = 0.0;
    let mut norm2 = 0.0;
    for i in 0..sample.window.values.rows() {
        for f in WeatherFeature::ALL {
            let j = f.column();
            err2 += (estimated.get(i, j) - analytic.get(i, j)).powi(2);
            norm2 += analytic.get(i, j).powi(2);
        }
    }
    println!(
        "finite-difference vs analytic gradient: relative error {:.2e} using {} queries",
        (err2 / norm2.max(1e-300)).sqrt(),
        fd_oracle.queries()
    );

    let config = AttackConfig {
        epsilon: 0.05,
        step_size: 0.005,
        iterations: 25,
        sparsity: 12,
        mode: AttackMode::BlackBox,
        ..AttackConfig::default()
    };
    let mut oracle = FiniteDifferenceGradient::new(&model, config.fd_delta);
    let trace = sparse_attack(&mut oracle, &sample.window, sample.target, &config).unwrap();
    let per_iteration = 2 * eligible_cell_count(sample.window.values.rows());
    println!(
        "black-box sparse attack: final loss {:.5}, {} queries = {} iterations x {per_iteration}",
        trace.final_loss,
        trace.query_count,
        config.iterations,
    );
}
