//! The end-to-end run: synthesize, train, attack, plan, validate, report.

use super::report::{
    write_report_files, AttackCell, ExperimentReport, PlanStability, ProfileTraining, Provenance,
};
use super::{derive_seed, AttackSpec, ExperimentConfig, ExperimentError};
use crate::attack::{
    greedy_pgd_attack, mse_increase, oracle_for, pgd_attack, sparse_attack, AttackConfig,
    AttackMethod, AttackTrace, WeatherFeature,
};
use crate::feeder::{builtin, load_feeder, Feeder};
use crate::forecast::{
    build_windows, fit_normalizer, train, write_series_csv, FeatureWindow, ForecastModel,
    ForecastSample, TrainConfig,
};
use crate::planner::{plan_diff, plan_restoration, PlannerInput};
use crate::validator::{validate_plan, write_report_csvs, ValidationSettings};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Everything a run leaves behind, plus the in-memory report.
#[derive(Debug)]
pub struct ExperimentArtifacts {
    pub out_dir: PathBuf,
    pub report: ExperimentReport,
}

/// Per-profile working set.
struct ProfileBundle {
    profile: String,
    model: ForecastModel,
    /// Normalized test samples for the attack table.
    test: Vec<ForecastSample>,
    /// Normalized windows feeding the restoration stages, in stage order.
    stage_samples: Vec<ForecastSample>,
    final_train_mse: f64,
}

/// On-disk record of one attack-table cell, sufficient to recompute it.
#[derive(Debug, Serialize, Deserialize)]
pub(super) struct CellArtifact {
    pub label: String,
    pub profile: String,
    pub targets: Vec<f64>,
    pub traces: Vec<AttackTrace>,
}

/// Resolve one attack column's full config from the shared parameters.
pub fn attack_config_for(spec: &AttackSpec, config: &ExperimentConfig) -> AttackConfig {
    AttackConfig {
        epsilon: config.attack_params.epsilon,
        step_size: config.attack_params.step_size,
        iterations: config.attack_params.iterations,
        sparsity: spec.sparsity.unwrap_or(12),
        fd_delta: config.attack_params.fd_delta,
        mode: config.attack_params.mode,
        target_feature: spec
            .target_feature
            .or(Some(WeatherFeature::Temperature)),
    }
}

/// Dispatch one attack method over a single window.
pub fn run_attack(
    model: &ForecastModel,
    spec: &AttackSpec,
    attack: &AttackConfig,
    window: &FeatureWindow,
    target: f64,
) -> Result<AttackTrace, crate::attack::AttackError> {
    let mut oracle = oracle_for(model, attack);
    match spec.method {
        AttackMethod::Pgd => pgd_attack(oracle.as_mut(), window, target, attack),
        AttackMethod::GreedyPgd => greedy_pgd_attack(oracle.as_mut(), window, target, attack),
        AttackMethod::Saa => sparse_attack(oracle.as_mut(), window, target, attack),
    }
}

fn prepare_profile(
    config: &ExperimentConfig,
    profile: &str,
    data_dir: &Path,
    model_dir: &Path,
) -> Result<ProfileBundle, ExperimentError> {
    let series = super::synth_dataset(
        derive_seed(config.seed, &format!("data::{profile}")),
        config.days,
        profile,
    );
    write_series_csv(&data_dir.join(format!("{profile}.csv")), &series)?;

    let samples = build_windows(&series, config.window_hours)?;
    let reserved = config.test_windows + config.stages;
    if samples.len() <= reserved + 8 {
        return Err(ExperimentError::Config(format!(
            "profile {profile}: {} windows cannot reserve {reserved} for testing",
            samples.len()
        )));
    }
    let n_train = samples.len() - reserved;
    let normalizer = fit_normalizer(&samples[..n_train])?;
    let normalized = normalizer.normalize_samples(&samples);

    let train_config = TrainConfig {
        architecture: config.model.architecture,
        learning_rate: config.model.learning_rate,
        epochs: config.model.epochs,
        seed: derive_seed(config.seed, &format!("train::{profile}")),
    };
    let model = train(&normalized[..n_train], &normalizer, train_config)?;
    model.save(&model_dir.join(format!("{profile}.json")))?;
    let final_train_mse = model.training_log.last().map(|(_, mse)| *mse).unwrap_or(f64::NAN);

    Ok(ProfileBundle {
        profile: profile.to_string(),
        model,
        test: normalized[n_train..n_train + config.test_windows].to_vec(),
        stage_samples: normalized[samples.len() - config.stages..].to_vec(),
        final_train_mse,
    })
}

/// Forecast series artifact: per profile, kW per stage, clean and attacked.
#[derive(Debug, Serialize, Deserialize)]
pub(super) struct ForecastArtifact {
    pub clean: BTreeMap<String, Vec<f64>>,
    pub attacked: BTreeMap<String, Vec<f64>>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentArtifacts, ExperimentError> {
    config.validate()?;
    let out_dir = config.resolved_output_dir();
    for sub in ["data", "models", "attacks", "forecasts", "plans", "validation", "charts"] {
        std::fs::create_dir_all(out_dir.join(sub))?;
    }
    std::fs::write(
        out_dir.join("config.json"),
        serde_json::to_string_pretty(config).expect("config serializes"),
    )?;

    // Data and models, one bundle per profile.
    let bundles: Vec<ProfileBundle> = builtin::PROFILES
        .par_iter()
        .map(|profile| {
            prepare_profile(config, profile, &out_dir.join("data"), &out_dir.join("models"))
        })
        .collect::<Result<_, _>>()?;

    // Attack table over method x profile.
    let mut cells: Vec<(AttackCell, CellArtifact)> = config
        .attacks
        .par_iter()
        .flat_map(|spec| bundles.par_iter().map(move |bundle| (spec, bundle)))
        .map(|(spec, bundle)| -> Result<(AttackCell, CellArtifact), ExperimentError> {
            let attack = attack_config_for(spec, config);
            let mut traces = Vec::with_capacity(bundle.test.len());
            let mut queries = 0u64;
            for sample in &bundle.test {
                let trace = run_attack(&bundle.model, spec, &attack, &sample.window, sample.target)?;
                queries += trace.query_count;
                traces.push(trace);
            }
            let mut index = 0;
            let increase = mse_increase(&bundle.model, &bundle.test, |_, _| {
                let trace = traces[index].clone();
                index += 1;
                Ok(trace)
            })?;
            let cell = AttackCell {
                label: spec.label(),
                profile: bundle.profile.clone(),
                mse_increase: increase,
                mean_queries: queries as f64 / bundle.test.len() as f64,
            };
            let artifact = CellArtifact {
                label: spec.label(),
                profile: bundle.profile.clone(),
                targets: bundle.test.iter().map(|s| s.target).collect(),
                traces,
            };
            Ok((cell, artifact))
        })
        .collect::<Result<_, _>>()?;
    cells.sort_by(|a, b| (&a.0.profile, &a.0.label).cmp(&(&b.0.profile, &b.0.label)));
    for (_, artifact) in &cells {
        let path = out_dir
            .join("attacks")
            .join(format!("{}__{}.json", artifact.label, artifact.profile));
        std::fs::write(&path, serde_json::to_string(artifact).expect("cell serializes"))?;
    }
    let attack_table: Vec<AttackCell> = cells.iter().map(|(c, _)| c.clone()).collect();

    // Stage forecasts, clean and (optionally) attacked.
    let plan_spec = config.plan_attack.map(|i| &config.attacks[i]);
    let mut forecast_artifact =
        ForecastArtifact { clean: BTreeMap::new(), attacked: BTreeMap::new() };
    for bundle in &bundles {
        let mut clean = Vec::with_capacity(config.stages);
        let mut attacked = Vec::with_capacity(config.stages);
        for sample in &bundle.stage_samples {
            let clean_pred = bundle
                .model
                .predict_kw(&sample.window)
                .map_err(|e| ExperimentError::stage("forecast", e))?;
            clean.push(clean_pred.max(0.0));
            if let Some(spec) = plan_spec {
                let attack = attack_config_for(spec, config);
                let trace =
                    run_attack(&bundle.model, spec, &attack, &sample.window, sample.target)?;
                let adv = bundle
                    .model
                    .predict_kw(&trace.adversarial_window)
                    .map_err(|e| ExperimentError::stage("forecast", e))?;
                attacked.push(adv.max(0.0));
            }
        }
        if attacked.is_empty() {
            attacked = clean.clone();
        }
        forecast_artifact.clean.insert(bundle.profile.clone(), clean);
        forecast_artifact.attacked.insert(bundle.profile.clone(), attacked);
    }
    std::fs::write(
        out_dir.join("forecasts").join("stage_forecasts.json"),
        serde_json::to_string_pretty(&forecast_artifact).expect("forecasts serialize"),
    )?;

    // Feeder and per-load forecast binding.
    let feeder = match &config.feeder {
        Some(path) => load_feeder(path).map_err(|e| ExperimentError::stage("feeder", e))?,
        None => builtin::ieee123(),
    };
    let (plan_loads, true_loads) = bind_load_forecasts(&feeder, &forecast_artifact)?;

    // Plan from attacked forecasts; plan from clean forecasts for the
    // stability comparison.
    let planner_input = |loads: &BTreeMap<String, Vec<f64>>| -> PlannerInput<'_> {
        let mut input = PlannerInput::new(&feeder, config.stages);
        input.stage_minutes = config.stage_minutes;
        input.start_hour = config.start_hour;
        input.clpu_enabled = config.clpu_enabled;
        input.load_forecasts = loads.clone();
        input
    };
    let attacked_plan = plan_restoration(&planner_input(&plan_loads))
        .map_err(|e| ExperimentError::stage("plan", e))?;
    let clean_plan = plan_restoration(&planner_input(&true_loads))
        .map_err(|e| ExperimentError::stage("plan", e))?;
    attacked_plan.save(&out_dir.join("plans").join("attacked.json"))?;
    clean_plan.save(&out_dir.join("plans").join("clean.json"))?;
    let diff = plan_diff(&clean_plan, &attacked_plan).map_err(|e| ExperimentError::stage("plan", e))?;
    std::fs::write(
        out_dir.join("plans").join("diff.json"),
        serde_json::to_string_pretty(&diff).expect("diff serializes"),
    )?;

    // Validate both plans under true loads.
    let settings = ValidationSettings {
        stage_minutes: config.stage_minutes,
        start_hour: config.start_hour,
        clpu_enabled: config.clpu_enabled,
    };
    let validation = validate_plan(&feeder, &attacked_plan, &plan_loads, &true_loads, settings)
        .map_err(|e| ExperimentError::stage("validate", e))?;
    let clean_validation = validate_plan(&feeder, &clean_plan, &true_loads, &true_loads, settings)
        .map_err(|e| ExperimentError::stage("validate", e))?;
    validation.save(&out_dir.join("validation").join("report.json"))?;
    clean_validation.save(&out_dir.join("validation").join("report_clean.json"))?;
    write_report_csvs(&validation, &out_dir.join("validation"))?;

    let stability = PlanStability {
        sequences_identical: diff.sequences_identical(),
        clean_feasible: !clean_validation.any_infeasible(),
        attacked_feasible: !validation.any_infeasible(),
        verdicts_differ: clean_validation.any_infeasible() != validation.any_infeasible(),
        note: stability_note(diff.sequences_identical(), &validation, &clean_validation),
    };

    let report = ExperimentReport {
        attack_table,
        training: bundles
            .iter()
            .map(|b| ProfileTraining {
                profile: b.profile.clone(),
                final_train_mse: b.final_train_mse,
            })
            .collect(),
        attacked_plan_objective_kw: attacked_plan.objective_kw,
        clean_plan_objective_kw: clean_plan.objective_kw,
        stability,
        validation,
        clean_validation,
        provenance: Provenance {
            config_hash: config.content_hash(),
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            generated_at: chrono::Utc::now().to_rfc3339(),
        },
    };
    write_report_files(&report, &bundles_chart_data(config, &cells), &out_dir)?;
    Ok(ExperimentArtifacts { out_dir, report })
}

/// Chart inputs: per profile, the normalized targets over the test windows
/// next to the plan method's attacked prediction deviation per window.
fn bundles_chart_data(
    config: &ExperimentConfig,
    cells: &[(AttackCell, CellArtifact)],
) -> Vec<(String, Vec<f64>, Vec<f64>)> {
    let Some(label) = config.plan_attack.map(|i| config.attacks[i].label()) else {
        return Vec::new();
    };
    cells
        .iter()
        .filter(|(c, _)| c.label == label)
        .map(|(c, artifact)| {
            let targets = artifact.targets.clone();
            let deviation: Vec<f64> =
                artifact.traces.iter().map(|t| t.final_loss.sqrt()).collect();
            (c.profile.clone(), targets, deviation)
        })
        .collect()
}

fn stability_note(
    sequences_identical: bool,
    attacked: &crate::validator::ValidationReport,
    clean: &crate::validator::ValidationReport,
) -> String {
    let attacked_word = if attacked.any_infeasible() { "fails" } else { "passes" };
    let clean_word = if clean.any_infeasible() { "fails" } else { "passes" };
    if sequences_identical {
        format!(
            "restoration sequences are identical under clean and attacked forecasts; \
             validation under true loads {attacked_word} for the attacked plan and \
             {clean_word} for the clean plan"
        )
    } else {
        format!(
            "attacked forecasts changed the restoration sequence itself; validation under \
             true loads {attacked_word} for the attacked plan and {clean_word} for the clean plan"
        )
    }
}

/// Resolve each load point's stage forecasts: attacked loads follow the
/// attacked profile series in the planning view, everything follows the
/// clean series in the truth view.
fn bind_load_forecasts(
    feeder: &Feeder,
    forecasts: &ForecastArtifact,
) -> Result<(BTreeMap<String, Vec<f64>>, BTreeMap<String, Vec<f64>>), ExperimentError> {
    let mut plan_view = BTreeMap::new();
    let mut truth_view = BTreeMap::new();
    for load in &feeder.loads {
        let clean = forecasts.clean.get(&load.profile).ok_or_else(|| {
            ExperimentError::Config(format!(
                "load `{}` references unknown profile `{}`",
                load.id, load.profile
            ))
        })?;
        let attacked = &forecasts.attacked[&load.profile];
        truth_view.insert(load.id.clone(), clean.clone());
        plan_view.insert(
            load.id.clone(),
            if load.attacked { attacked.clone() } else { clean.clone() },
        );
    }
    Ok((plan_view, truth_view))
}
