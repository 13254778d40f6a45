//! Compare the three white-box attacks on one trained forecaster: plain PGD
//! on the temperature column, greedy feature-ranked PGD, and the sparse
//! top-n attack at two budgets.
//!
//! ```bash
//! cargo run --release --example attack_methods
//! ```

use blackstart::attack::{
    greedy_pgd_attack, mse_increase, pgd_attack, sparse_attack, AnalyticGradient, AttackConfig,
    WeatherFeature,
};
use blackstart::experiment::synth_dataset;
use blackstart::forecast::{build_windows, fit_normalizer, train, Architecture, TrainConfig};

fn main() {
    let series = synth_dataset(4, 45, "full_service_restaurant");
    let samples = build_windows(&series, 72).expect("hourly series");
    let n_train = samples.len() - 16;
    let normalizer = fit_normalizer(&samples[..n_train]).expect("non-empty");
    let normalized = normalizer.normalize_samples(&samples);
    let model = train(
        &normalized[..n_train],
        &normalizer,
        TrainConfig {
            architecture: Architecture::Recurrent { hidden: 8 },
            learning_rate: 0.05,
            epochs: 300,
            seed: 4,
        },
    )
    .expect("training");
    let test = &normalized[n_train..];

    let base = AttackConfig {
        epsilon: 0.05,
        step_size: 0.005,
        iterations: 50,
        target_feature: Some(WeatherFeature::Temperature),
        ..AttackConfig::default()
    };

    println!("test-set MSE increase per method (normalized units):");
    for (name, sparsity) in [("pgd", None), ("greedy_pgd", None), ("saa n=12", Some(12)), ("saa n=72", Some(72))] {
        let increase = mse_increase(&model, test, |window, target| {
            let mut oracle = AnalyticGradient::new(&model);
            let mut config = base;
            match (name, sparsity) {
                ("pgd", _) => pgd_attack(&mut oracle, window, target, &config),
                ("greedy_pgd", _) => greedy_pgd_attack(&mut oracle, window, target, &config),
                (_, Some(n)) => {
                    config.sparsity = n;
                    sparse_attack(&mut oracle, window, target, &config)
                }
                _ => unreachable!(),
            }
        })
        .expect("attack");
        println!("  {name:<10} {increase:.5}");
    }
}
