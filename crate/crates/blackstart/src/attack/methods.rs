//! The three attack loops plus the MSE-increase attack metric.

use super::{
    eligible_cell_count, sign, AttackConfig, AttackError, AttackMethod, AttackTrace,
    GradientOracle, IterationChoice, IterationRecord, WeatherFeature,
};
use crate::forecast::{ForecastError, ForecastModel, ForecastSample, FeatureWindow};
use crate::mat::Mat;

/// Project every entry of `candidate` into the epsilon box around `original`.
pub fn clip(candidate: &Mat, original: &Mat, epsilon: f64) -> Result<Mat, AttackError> {
    if !candidate.same_shape(original) {
        return Err(AttackError::ShapeMismatch(format!(
            "candidate {}x{} vs original {}x{}",
            candidate.rows(),
            candidate.cols(),
            original.rows(),
            original.cols()
        )));
    }
    let mut clipped = candidate.clone();
    for (c, o) in clipped.as_mut_slice().iter_mut().zip(original.as_slice()) {
        *c = c.clamp(o - epsilon, o + epsilon);
    }
    Ok(clipped)
}

fn finish_trace(
    method: AttackMethod,
    config: AttackConfig,
    oracle: &dyn GradientOracle,
    clean: &FeatureWindow,
    adversarial: FeatureWindow,
    target: f64,
    per_iteration: Vec<IterationRecord>,
) -> Result<AttackTrace, AttackError> {
    let final_loss = oracle.trace_loss(&adversarial, target)?;
    let linf_norm = adversarial.values.max_abs_diff(&clean.values);
    Ok(AttackTrace {
        method,
        config,
        final_loss,
        per_iteration,
        query_count: oracle.queries(),
        linf_norm,
        adversarial_window: adversarial,
        clean_window: clean.clone(),
    })
}

/// Plain PGD: signed-gradient ascent applied to every row of one fixed
/// weather column, clipped into the epsilon box each iteration.
pub fn pgd_attack(
    oracle: &mut dyn GradientOracle,
    window: &FeatureWindow,
    target: f64,
    config: &AttackConfig,
) -> Result<AttackTrace, AttackError> {
    config.validate()?;
    let feature = config.target_feature.ok_or(AttackError::MissingTargetFeature)?;
    let column = feature.column();
    let mut adv = window.clone();
    let mut per_iteration = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let grad = oracle.gradient(&adv, target)?;
        for i in 0..adv.values.rows() {
            let step = config.step_size * sign(grad.get(i, column));
            adv.values.set(i, column, adv.values.get(i, column) + step);
        }
        adv.values = clip(&adv.values, &window.values, config.epsilon)?;
        per_iteration.push(IterationRecord {
            choice: IterationChoice::Feature(feature),
            loss: oracle.trace_loss(&adv, target)?,
        });
    }
    finish_trace(AttackMethod::Pgd, *config, oracle, window, adv, target, per_iteration)
}

/// Mean absolute gradient per weather column; the greedy ranking signal.
fn feature_importance(grad: &Mat) -> [f64; 4] {
    let h = grad.rows() as f64;
    let mut importance = [0.0; 4];
    for (slot, feature) in importance.iter_mut().zip(WeatherFeature::ALL) {
        let j = feature.column();
        *slot = (0..grad.rows()).map(|i| grad.get(i, j).abs()).sum::<f64>() / h;
    }
    importance
}

/// Greedy PGD: each iteration perturbs only the weather column with the
/// largest mean absolute gradient (ties break toward the lowest column).
pub fn greedy_pgd_attack(
    oracle: &mut dyn GradientOracle,
    window: &FeatureWindow,
    target: f64,
    config: &AttackConfig,
) -> Result<AttackTrace, AttackError> {
    config.validate()?;
    let mut adv = window.clone();
    let mut per_iteration = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let grad = oracle.gradient(&adv, target)?;
        let importance = feature_importance(&grad);
        let mut best = WeatherFeature::ALL[0];
        let mut best_value = importance[0];
        for (feature, &value) in WeatherFeature::ALL.into_iter().zip(&importance).skip(1) {
            if value > best_value {
                best = feature;
                best_value = value;
            }
        }
        let column = best.column();
        for i in 0..adv.values.rows() {
            let step = config.step_size * sign(grad.get(i, column));
            adv.values.set(i, column, adv.values.get(i, column) + step);
        }
        adv.values = clip(&adv.values, &window.values, config.epsilon)?;
        per_iteration.push(IterationRecord {
            choice: IterationChoice::Feature(best),
            loss: oracle.trace_loss(&adv, target)?,
        });
    }
    finish_trace(AttackMethod::GreedyPgd, *config, oracle, window, adv, target, per_iteration)
}

/// Top-`n` eligible cells by absolute gradient, ties in row-major order.
fn top_cells(grad: &Mat, n: usize) -> Vec<(usize, usize)> {
    let mut cells: Vec<(usize, usize)> = (0..grad.rows())
        .flat_map(|i| WeatherFeature::ALL.into_iter().map(move |f| (i, f.column())))
        .collect();
    cells.sort_by(|&(ia, ja), &(ib, jb)| {
        grad.get(ib, jb)
            .abs()
            .partial_cmp(&grad.get(ia, ja).abs())
            .expect("finite gradients")
            .then((ia, ja).cmp(&(ib, jb)))
    });
    cells.truncate(n);
    cells.sort_unstable();
    cells
}

/// Sparse attack: each iteration perturbs exactly `min(n, 4H)` cells, the
/// ones with the largest absolute gradients, via a masked signed step.
pub fn sparse_attack(
    oracle: &mut dyn GradientOracle,
    window: &FeatureWindow,
    target: f64,
    config: &AttackConfig,
) -> Result<AttackTrace, AttackError> {
    config.validate()?;
    let n = config.sparsity.min(eligible_cell_count(window.values.rows()));
    let mut adv = window.clone();
    let mut per_iteration = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let grad = oracle.gradient(&adv, target)?;
        let cells = top_cells(&grad, n);
        for &(i, j) in &cells {
            let step = config.step_size * sign(grad.get(i, j));
            adv.values.set(i, j, adv.values.get(i, j) + step);
        }
        adv.values = clip(&adv.values, &window.values, config.epsilon)?;
        per_iteration.push(IterationRecord {
            choice: IterationChoice::Cells(cells),
            loss: oracle.trace_loss(&adv, target)?,
        });
    }
    finish_trace(AttackMethod::Saa, *config, oracle, window, adv, target, per_iteration)
}

/// Test-set mean squared error under attacked windows minus under clean
/// windows, in normalized units.
pub fn mse_increase(
    model: &ForecastModel,
    clean_samples: &[ForecastSample],
    mut attack_fn: impl FnMut(&FeatureWindow, f64) -> Result<AttackTrace, AttackError>,
) -> Result<f64, AttackError> {
    if clean_samples.is_empty() {
        return Err(AttackError::Forecast(ForecastError::EmptyDataset));
    }
    let n = clean_samples.len() as f64;
    let mut clean_mse = 0.0;
    let mut attacked_mse = 0.0;
    for sample in clean_samples {
        clean_mse += model.loss(&sample.window, sample.target)?;
        let trace = attack_fn(&sample.window, sample.target)?;
        attacked_mse += model.loss(&trace.adversarial_window, sample.target)?;
    }
    Ok((attacked_mse - clean_mse) / n)
}

#[cfg(test)]
mod tests {
    use super::super::oracle::tests::{test_model, test_window};
    use super::super::{AnalyticGradient, AttackMode, FiniteDifferenceGradient};
    use super::*;
    use crate::forecast::{Architecture, FEATURE_COUNT, LOAD_COLUMN, TIME_COLUMN};
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn config(epsilon: f64, step: f64, iterations: usize) -> AttackConfig {
        AttackConfig {
            epsilon,
            step_size: step,
            iterations,
            ..AttackConfig::default()
        }
    }

    #[test]
    fn clip_examples() {
        let original = Mat::from_rows(&[vec![0.5]]);
        let cases = [(0.7, 0.6), (0.55, 0.55), (0.3, 0.4)];
        for (candidate, expected) in cases {
            let m = Mat::from_rows(&[vec![candidate]]);
            let clipped = clip(&m, &original, 0.1).unwrap();
            assert!((clipped.get(0, 0) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn clip_shape_mismatch() {
        let a = Mat::zeros(2, 6);
        let b = Mat::zeros(3, 6);
        assert!(matches!(clip(&a, &b, 0.1), Err(AttackError::ShapeMismatch(_))));
    }

    #[test]
    fn pgd_zero_iterations_is_identity() {
        let model = test_model(Architecture::Mlp { hidden: 5 }, 6, 3);
        let window = test_window(6, 4);
        let mut oracle = AnalyticGradient::new(&model);
        let mut cfg = config(0.1, 0.01, 0);
        cfg.target_feature = Some(WeatherFeature::Temperature);
        let trace = pgd_attack(&mut oracle, &window, 0.5, &cfg).unwrap();
        assert_eq!(trace.adversarial_window.values, window.values);
        assert_eq!(trace.linf_norm, 0.0);
    }

    #[test]
    fn pgd_zero_epsilon_is_identity() {
        let model = test_model(Architecture::Mlp { hidden: 5 }, 6, 3);
        let window = test_window(6, 4);
        let mut oracle = AnalyticGradient::new(&model);
        let mut cfg = config(0.0, 0.01, 25);
        cfg.target_feature = Some(WeatherFeature::Humidity);
        let trace = pgd_attack(&mut oracle, &window, 0.5, &cfg).unwrap();
        assert_eq!(trace.adversarial_window.values, window.values);
        assert_eq!(trace.per_iteration.len(), 25);
    }

    #[test]
    fn pgd_requires_target_feature() {
        let model = test_model(Architecture::Linear, 4, 1);
        let window = test_window(4, 2);
        let mut oracle = AnalyticGradient::new(&model);
        let cfg = config(0.1, 0.01, 5);
        assert!(matches!(
            pgd_attack(&mut oracle, &window, 0.5, &cfg),
            Err(AttackError::MissingTargetFeature)
        ));
    }

    #[test]
    fn pgd_saturates_linear_column_at_weight_signs() {
        // Positive prediction-minus-target throughout, so the ascent pushes
        // each targeted cell to original + epsilon * sign(weight).
        let mut model = test_model(Architecture::Linear, 5, 7);
        let d = 5 * FEATURE_COUNT;
        model.theta[d] = 5.0; // large bias keeps f - target > 0
        let window = test_window(5, 8);
        let target = 0.0;
        let column = WeatherFeature::WindSpeed.column();
        let mut cfg = config(0.04, 0.005, 20); // K * alpha = 0.1 >= eps
        cfg.target_feature = Some(WeatherFeature::WindSpeed);
        let mut oracle = AnalyticGradient::new(&model);
        let trace = pgd_attack(&mut oracle, &window, target, &cfg).unwrap();
        for i in 0..5 {
            let w = model.theta[i * FEATURE_COUNT + column];
            let expected = window.values.get(i, column) + 0.04 * sign(w);
            assert!(
                (trace.adversarial_window.values.get(i, column) - expected).abs() < 1e-12,
                "row {i}"
            );
        }
    }

    #[test]
    fn pgd_loss_monotone_on_linear_model() {
        let model = test_model(Architecture::Linear, 8, 9);
        let window = test_window(8, 10);
        let mut cfg = config(0.08, 0.004, 40);
        cfg.target_feature = Some(WeatherFeature::Temperature);
        let mut oracle = AnalyticGradient::new(&model);
        let trace = pgd_attack(&mut oracle, &window, 0.9, &cfg).unwrap();
        let mut last = model.loss(&window, 0.9).unwrap();
        for record in &trace.per_iteration {
            assert!(record.loss >= last - 1e-12);
            last = record.loss;
        }
    }

    /// Oracle returning a fixed gradient matrix; lets tests pick the ranking.
    struct FixedGradient {
        grad: Mat,
    }

    impl GradientOracle for FixedGradient {
        fn gradient(&mut self, _: &FeatureWindow, _: f64) -> Result<Mat, AttackError> {
            Ok(self.grad.clone())
        }

        fn trace_loss(&self, _: &FeatureWindow, _: f64) -> Result<f64, AttackError> {
            Ok(0.0)
        }
    }

    #[test]
    fn greedy_picks_column_with_largest_mean() {
        let mut grad = Mat::zeros(4, FEATURE_COUNT);
        for i in 0..4 {
            grad.set(i, 1, 0.1);
            grad.set(i, 2, -0.5); // humidity column dominates
            grad.set(i, 3, 0.2);
            grad.set(i, 4, 0.1);
        }
        let mut oracle = FixedGradient { grad };
        let window = test_window(4, 11);
        let cfg = config(0.05, 0.01, 1);
        let trace = greedy_pgd_attack(&mut oracle, &window, 0.5, &cfg).unwrap();
        assert_eq!(
            trace.per_iteration[0].choice,
            IterationChoice::Feature(WeatherFeature::Humidity)
        );
    }

    #[test]
    fn greedy_tie_breaks_to_lowest_column() {
        let mut grad = Mat::zeros(3, FEATURE_COUNT);
        for i in 0..3 {
            for f in WeatherFeature::ALL {
                grad.set(i, f.column(), 0.25);
            }
        }
        let mut oracle = FixedGradient { grad };
        let window = test_window(3, 12);
        let cfg = config(0.05, 0.01, 1);
        let trace = greedy_pgd_attack(&mut oracle, &window, 0.5, &cfg).unwrap();
        assert_eq!(
            trace.per_iteration[0].choice,
            IterationChoice::Feature(WeatherFeature::Temperature)
        );
    }

    #[test]
    fn greedy_with_zero_epsilon_still_records_choice() {
        let model = test_model(Architecture::Mlp { hidden: 6 }, 5, 13);
        let window = test_window(5, 14);
        let cfg = config(0.0, 0.01, 3);
        let mut oracle = AnalyticGradient::new(&model);
        let trace = greedy_pgd_attack(&mut oracle, &window, 0.4, &cfg).unwrap();
        assert_eq!(trace.adversarial_window.values, window.values);
        assert_eq!(trace.per_iteration.len(), 3);
        for record in &trace.per_iteration {
            assert!(matches!(record.choice, IterationChoice::Feature(_)));
        }
    }

    #[test]
    fn greedy_matches_best_fixed_feature_in_most_trials() {
        let mut wins = 0;
        let trials = 50;
        for t in 0..trials {
            let model = test_model(Architecture::Mlp { hidden: 6 }, 6, 100 + t);
            let window = test_window(6, 200 + t);
            let target = 0.1;
            let cfg = config(0.05, 0.006, 25);
            let mut oracle = AnalyticGradient::new(&model);
            let greedy = greedy_pgd_attack(&mut oracle, &window, target, &cfg).unwrap();
            let mut best_fixed = f64::NEG_INFINITY;
            for feature in WeatherFeature::ALL {
                let mut fixed_cfg = cfg;
                fixed_cfg.target_feature = Some(feature);
                let mut oracle = AnalyticGradient::new(&model);
                let trace = pgd_attack(&mut oracle, &window, target, &fixed_cfg).unwrap();
                best_fixed = best_fixed.max(trace.final_loss);
            }
            if greedy.final_loss >= best_fixed - 1e-12 {
                wins += 1;
            }
        }
        assert!(wins * 10 >= trials * 9, "greedy won only {wins}/{trials}");
    }

    #[test]
    fn sparse_zero_cells_is_identity() {
        let model = test_model(Architecture::Mlp { hidden: 5 }, 6, 15);
        let window = test_window(6, 16);
        let mut cfg = config(0.05, 0.01, 10);
        cfg.sparsity = 0;
        let mut oracle = AnalyticGradient::new(&model);
        let trace = sparse_attack(&mut oracle, &window, 0.5, &cfg).unwrap();
        assert_eq!(trace.adversarial_window.values, window.values);
    }

    #[test]
    fn sparse_full_mask_equals_all_cell_ascent() {
        let model = test_model(Architecture::Mlp { hidden: 5 }, 5, 17);
        let window = test_window(5, 18);
        let target = 0.3;
        let mut cfg = config(0.05, 0.01, 8);
        cfg.sparsity = eligible_cell_count(5);
        let mut oracle = AnalyticGradient::new(&model);
        let trace = sparse_attack(&mut oracle, &window, target, &cfg).unwrap();

        // Independent signed ascent over every weather cell simultaneously.
        let mut adv = window.clone();
        for _ in 0..8 {
            let grad = model.input_gradient(&adv, target).unwrap();
            for i in 0..5 {
                for f in WeatherFeature::ALL {
                    let j = f.column();
                    adv.values.set(i, j, adv.values.get(i, j) + 0.01 * sign(grad.get(i, j)));
                }
            }
            adv.values = clip(&adv.values, &window.values, 0.05).unwrap();
        }
        assert!(trace.adversarial_window.values.max_abs_diff(&adv.values) < 1e-15);
    }

    #[test]
    fn top_cells_match_exhaustive_sort() {
        let mut rng = StdRng::seed_from_u64(19);
        for _ in 0..100 {
            let h = rng.gen_range(2..10);
            let mut grad = Mat::zeros(h, FEATURE_COUNT);
            for i in 0..h {
                for j in 0..FEATURE_COUNT {
                    grad.set(i, j, rng.gen_range(-1.0..1.0));
                }
            }
            let n = rng.gen_range(0..=eligible_cell_count(h));
            let got = top_cells(&grad, n);

            // Exhaustive oracle: sort every eligible cell by |g| descending,
            // row-major on ties, take the first n.
            let mut all: Vec<(usize, usize)> = (0..h)
                .flat_map(|i| WeatherFeature::ALL.into_iter().map(move |f| (i, f.column())))
                .collect();
            all.sort_by(|&a, &b| {
                grad.get(b.0, b.1)
                    .abs()
                    .partial_cmp(&grad.get(a.0, a.1).abs())
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let mut expected: Vec<(usize, usize)> = all.into_iter().take(n).collect();
            expected.sort_unstable();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn sparse_iteration_touches_exactly_min_n_cells() {
        let model = test_model(Architecture::Mlp { hidden: 5 }, 6, 20);
        let window = test_window(6, 21);
        for sparsity in [3usize, 12, 24, 100] {
            let mut cfg = config(0.05, 0.01, 4);
            cfg.sparsity = sparsity;
            let mut oracle = AnalyticGradient::new(&model);
            let trace = sparse_attack(&mut oracle, &window, 0.2, &cfg).unwrap();
            let expected = sparsity.min(eligible_cell_count(6));
            for record in &trace.per_iteration {
                match &record.choice {
                    IterationChoice::Cells(cells) => assert_eq!(cells.len(), expected),
                    other => panic!("unexpected choice {other:?}"),
                }
            }
        }
    }

    #[test]
    fn black_box_query_accounting_is_exact() {
        let model = test_model(Architecture::Mlp { hidden: 5 }, 6, 22);
        let window = test_window(6, 23);
        let mut cfg = config(0.05, 0.01, 7);
        cfg.sparsity = 12;
        cfg.mode = AttackMode::BlackBox;
        let mut oracle = FiniteDifferenceGradient::new(&model, cfg.fd_delta);
        let trace = sparse_attack(&mut oracle, &window, 0.2, &cfg).unwrap();
        assert_eq!(trace.query_count, (2 * eligible_cell_count(6) * 7) as u64);
    }

    #[test]
    fn black_box_mlp_gradient_close_to_analytic() {
        let model = test_model(Architecture::Mlp { hidden: 8 }, 8, 24);
        let window = test_window(8, 25);
        let target = 0.6;
        let mut fd = FiniteDifferenceGradient::new(&model, 1e-3);
        let mut an = AnalyticGradient::new(&model);
        let g_fd = fd.gradient(&window, target).unwrap();
        let g_an = an.gradient(&window, target).unwrap();
        let mut err2 = 0.0;
        let mut norm2 = 0.0;
        for i in 0..8 {
            for f in WeatherFeature::ALL {
                let j = f.column();
                err2 += (g_fd.get(i, j) - g_an.get(i, j)).powi(2);
                norm2 += g_an.get(i, j).powi(2);
            }
        }
        assert!((err2 / norm2.max(1e-12)).sqrt() <= 1e-4);
    }

    #[test]
    fn greedy_choice_agrees_across_oracles() {
        let mut agreements = 0;
        let mut counted = 0;
        for t in 0..100u64 {
            let model = test_model(Architecture::Mlp { hidden: 6 }, 5, 300 + t);
            let window = test_window(5, 400 + t);
            let target = 0.25;
            let g_an = AnalyticGradient::new(&model).gradient(&window, target).unwrap();
            let g_fd = FiniteDifferenceGradient::new(&model, 1e-3)
                .gradient(&window, target)
                .unwrap();
            let pick = |grad: &Mat| -> (usize, bool) {
                let imp = feature_importance(grad);
                let mut best = 0;
                let mut tied = false;
                for k in 1..4 {
                    if (imp[k] - imp[best]).abs() < 1e-12 {
                        tied = true;
                    }
                    if imp[k] > imp[best] {
                        best = k;
                    }
                }
                (best, tied)
            };
            let (a, tie_a) = pick(&g_an);
            let (b, tie_b) = pick(&g_fd);
            if tie_a || tie_b {
                continue;
            }
            counted += 1;
            if a == b {
                agreements += 1;
            }
        }
        assert!(counted >= 50, "too many ties: {counted}");
        assert!(
            agreements * 100 >= counted * 95,
            "agreement {agreements}/{counted}"
        );
    }

    #[test]
    fn mse_increase_zero_under_identity_attack() {
        let model = test_model(Architecture::Mlp { hidden: 5 }, 6, 26);
        let samples: Vec<ForecastSample> = (0..10)
            .map(|k| ForecastSample { window: test_window(6, 500 + k), target: 0.5 })
            .collect();
        let increase = mse_increase(&model, &samples, |window, target| {
            let mut oracle = AnalyticGradient::new(&model);
            let mut cfg = config(0.05, 0.01, 0);
            cfg.target_feature = Some(WeatherFeature::Temperature);
            pgd_attack(&mut oracle, window, target, &cfg)
        })
        .unwrap();
        assert_eq!(increase, 0.0);
    }

    #[test]
    fn mse_increase_empty_dataset_rejected() {
        let model = test_model(Architecture::Linear, 4, 27);
        let result = mse_increase(&model, &[], |_, _| unreachable!());
        assert!(matches!(
            result,
            Err(AttackError::Forecast(ForecastError::EmptyDataset))
        ));
    }

    #[test]
    fn method_ordering_on_desk_scale_model() {
        // SAA with a full-column budget should dominate greedy, which should
        // dominate single-fixed-column PGD, averaged over a test set.
        let model = test_model(Architecture::Mlp { hidden: 8 }, 12, 28);
        let samples: Vec<ForecastSample> = (0..12)
            .map(|k| ForecastSample { window: test_window(12, 600 + k), target: 0.4 })
            .collect();
        let cfg = config(0.05, 0.005, 30);
        let run = |method: AttackMethod, sparsity: usize| {
            mse_increase(&model, &samples, |window, target| {
                let mut oracle = AnalyticGradient::new(&model);
                let mut c = cfg;
                c.sparsity = sparsity;
                match method {
                    AttackMethod::Pgd => {
                        c.target_feature = Some(WeatherFeature::Temperature);
                        pgd_attack(&mut oracle, window, target, &c)
                    }
                    AttackMethod::GreedyPgd => greedy_pgd_attack(&mut oracle, window, target, &c),
                    AttackMethod::Saa => sparse_attack(&mut oracle, window, target, &c),
                }
            })
            .unwrap()
        };
        let pgd = run(AttackMethod::Pgd, 0);
        let greedy = run(AttackMethod::GreedyPgd, 0);
        let saa = run(AttackMethod::Saa, 12); // n = H, one column's worth
        assert!(saa >= greedy - 1e-9, "saa {saa} vs greedy {greedy}");
        assert!(greedy >= pgd - 1e-9, "greedy {greedy} vs pgd {pgd}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn box_and_column_invariants_hold(
            seed in 0u64..10_000,
            epsilon in 0.0f64..0.2,
            step in 0.001f64..0.05,
            iterations in 0usize..12,
            sparsity in 0usize..40,
            method in 0usize..3,
        ) {
            let h = 5;
            let model = test_model(Architecture::Mlp { hidden: 5 }, h, seed);
            let window = test_window(h, seed.wrapping_add(1));
            let mut cfg = config(epsilon, step, iterations);
            cfg.sparsity = sparsity;
            cfg.target_feature = Some(WeatherFeature::WindDirection);
            let mut oracle = AnalyticGradient::new(&model);
            let trace = match method {
                0 => pgd_attack(&mut oracle, &window, 0.5, &cfg).unwrap(),
                1 => greedy_pgd_attack(&mut oracle, &window, 0.5, &cfg).unwrap(),
                _ => sparse_attack(&mut oracle, &window, 0.5, &cfg).unwrap(),
            };
            // Epsilon box with 1e-12 slack, every entry.
            let adv = &trace.adversarial_window.values;
            for i in 0..h {
                for j in 0..FEATURE_COUNT {
                    prop_assert!((adv.get(i, j) - window.values.get(i, j)).abs() <= epsilon + 1e-12);
                }
            }
            // Load and time-index columns bit-identical.
            for i in 0..h {
                prop_assert_eq!(
                    adv.get(i, LOAD_COLUMN).to_bits(),
                    window.values.get(i, LOAD_COLUMN).to_bits()
                );
                prop_assert_eq!(
                    adv.get(i, TIME_COLUMN).to_bits(),
                    window.values.get(i, TIME_COLUMN).to_bits()
                );
            }
        }
    }
}
