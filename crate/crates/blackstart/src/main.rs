//! Command-line front end for the restoration attack study toolkit.
//!
//! Exit codes: 0 on success, 2 for configuration problems, 3 when a
//! pipeline stage fails.

use blackstart::attack::{AttackMethod, AttackMode, WeatherFeature};
use blackstart::experiment::{
    rebuild_report, run_experiment, synth_dataset, AttackSpec, ExperimentConfig, ExperimentError,
};
use blackstart::feeder::{builtin, load_feeder};
use blackstart::forecast::{
    build_windows, fit_normalizer, read_series_csv, train, write_series_csv, Architecture,
    ForecastModel, TrainConfig,
};
use blackstart::planner::{plan_restoration, PlannerInput, RestorationPlan};
use blackstart::validator::{validate_plan, write_report_csvs, ValidationSettings};
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "blackstart",
    about = "Adversarial load-forecast attacks against staged distribution restoration",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic hourly load/weather CSV for one profile.
    SynthData {
        #[arg(long, default_value_t = 4)]
        seed: u64,
        #[arg(long, default_value_t = 45)]
        days: usize,
        /// One of the built-in profile names.
        #[arg(long, default_value = "res_base")]
        profile: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a forecaster on a series CSV and save the model JSON.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// linear | mlp | recurrent
        #[arg(long, default_value = "recurrent")]
        arch: String,
        #[arg(long, default_value_t = 8)]
        hidden: usize,
        #[arg(long, default_value_t = 72)]
        window: usize,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
        #[arg(long, default_value_t = 4)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Attack a trained model over the tail of a series and dump traces.
    Attack(AttackArgs),
    /// Plan a staged restoration from per-load stage forecasts.
    Plan {
        #[arg(long)]
        feeder: Option<PathBuf>,
        /// JSON object: load id -> kW per stage.
        #[arg(long)]
        forecasts: PathBuf,
        #[arg(long, default_value_t = 4)]
        stages: usize,
        #[arg(long, default_value_t = 8)]
        start_hour: u32,
        #[arg(long, default_value_t = true)]
        clpu: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a plan against actual loads and write the report tables.
    Validate {
        #[arg(long)]
        feeder: Option<PathBuf>,
        #[arg(long)]
        plan: PathBuf,
        /// JSON object: load id -> planned kW per stage.
        #[arg(long)]
        planned: PathBuf,
        /// JSON object: load id -> actual kW per stage.
        #[arg(long)]
        actual: PathBuf,
        #[arg(long, default_value_t = 8)]
        start_hour: u32,
        #[arg(long, default_value_t = true)]
        clpu: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the full pipeline from a config file (or built-in defaults).
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the configured output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Rebuild report.json from the artifacts of a previous run.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
    },
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// pgd | greedy-pgd | saa
    #[arg(long, default_value = "saa")]
    method: String,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.005)]
    step_size: f64,
    #[arg(long, default_value_t = 50)]
    iterations: usize,
    #[arg(long, default_value_t = 12)]
    sparsity: usize,
    /// temperature | humidity | wind-speed | wind-direction (plain PGD)
    #[arg(long, default_value = "temperature")]
    target_feature: String,
    /// white-box | black-box
    #[arg(long, default_value = "white-box")]
    mode: String,
    /// Number of trailing windows to attack.
    #[arg(long, default_value_t = 8)]
    windows: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                ExperimentError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn config_err(message: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Config(message.to_string())
}

fn stage_err(stage: &'static str) -> impl Fn(ExperimentError) -> ExperimentError {
    move |err| match err {
        ExperimentError::Config(m) => ExperimentError::Config(m),
        other => ExperimentError::Stage { stage, message: other.to_string() },
    }
}

fn dispatch(command: Command) -> Result<(), ExperimentError> {
    match command {
        Command::SynthData { seed, days, profile, out } => {
            if days < 30 {
                return Err(config_err("days must be at least 30"));
            }
            if !builtin::PROFILES.contains(&profile.as_str()) {
                return Err(config_err(format!(
                    "unknown profile `{profile}`; choose one of {:?}",
                    builtin::PROFILES
                )));
            }
            let rows = synth_dataset(seed, days, &profile);
            write_series_csv(&out, &rows)
                .map_err(|e| ExperimentError::Stage { stage: "synth", message: e.to_string() })?;
            println!("wrote {} rows to {}", rows.len(), out.display());
            Ok(())
        }
        Command::Train { data, arch, hidden, window, epochs, learning_rate, seed, out } => {
            let architecture = match arch.as_str() {
                "linear" => Architecture::Linear,
                "mlp" => Architecture::Mlp { hidden },
                "recurrent" => Architecture::Recurrent { hidden },
                other => return Err(config_err(format!("unknown architecture `{other}`"))),
            };
            let run = || -> Result<(), blackstart::forecast::ForecastError> {
                let series = read_series_csv(&data)?;
                let samples = build_windows(&series, window)?;
                let normalizer = fit_normalizer(&samples)?;
                let normalized = normalizer.normalize_samples(&samples);
                let model = train(
                    &normalized,
                    &normalizer,
                    TrainConfig { architecture, learning_rate, epochs, seed },
                )?;
                model.save(&out)?;
                let mse = model.training_log.last().map(|(_, m)| *m).unwrap_or(f64::NAN);
                println!(
                    "trained {arch} on {} windows; final training mse {mse:.6}; saved {}",
                    normalized.len(),
                    out.display()
                );
                Ok(())
            };
            run().map_err(|e| ExperimentError::Stage { stage: "train", message: e.to_string() })
        }
        Command::Attack(args) => run_attack_command(args),
        Command::Plan { feeder, forecasts, stages, start_hour, clpu, out } => {
            let network = match feeder {
                Some(path) => load_feeder(&path)
                    .map_err(|e| ExperimentError::Config(format!("feeder: {e}")))?,
                None => builtin::ieee123(),
            };
            let text = std::fs::read_to_string(&forecasts)?;
            let load_forecasts: BTreeMap<String, Vec<f64>> =
                serde_json::from_str(&text).map_err(|e| config_err(format!("forecasts: {e}")))?;
            let mut input = PlannerInput::new(&network, stages);
            input.start_hour = start_hour;
            input.clpu_enabled = clpu;
            input.load_forecasts = load_forecasts;
            let plan = plan_restoration(&input)
                .map_err(|e| ExperimentError::Stage { stage: "plan", message: e.to_string() })?;
            plan.save(&out)?;
            println!(
                "planned {} stages; served energy {:.1} kW-stages; saved {}",
                stages,
                plan.objective_kw,
                out.display()
            );
            Ok(())
        }
        Command::Validate { feeder, plan, planned, actual, start_hour, clpu, out_dir } => {
            let network = match feeder {
                Some(path) => load_feeder(&path)
                    .map_err(|e| ExperimentError::Config(format!("feeder: {e}")))?,
                None => builtin::ieee123(),
            };
            let plan = RestorationPlan::load(&plan)
                .map_err(|e| config_err(format!("plan: {e}")))?;
            let planned: BTreeMap<String, Vec<f64>> =
                serde_json::from_str(&std::fs::read_to_string(&planned)?)
                    .map_err(|e| config_err(format!("planned loads: {e}")))?;
            let actual: BTreeMap<String, Vec<f64>> =
                serde_json::from_str(&std::fs::read_to_string(&actual)?)
                    .map_err(|e| config_err(format!("actual loads: {e}")))?;
            let settings =
                ValidationSettings { stage_minutes: 60.0, start_hour, clpu_enabled: clpu };
            let report = validate_plan(&network, &plan, &planned, &actual, settings)
                .map_err(|e| ExperimentError::Stage { stage: "validate", message: e.to_string() })?;
            std::fs::create_dir_all(&out_dir)?;
            report.save(&out_dir.join("report.json"))?;
            write_report_csvs(&report, &out_dir)?;
            match report.first_failure {
                Some((mg, stage)) => {
                    println!("infeasible: first failure at microgrid {mg}, stage {stage}")
                }
                None => println!("feasible at every stage"),
            }
            Ok(())
        }
        Command::Run { config, out_dir } => {
            let mut config = match config {
                Some(path) => ExperimentConfig::load(&path)?,
                None => ExperimentConfig::default(),
            };
            if let Some(dir) = out_dir {
                config.output_dir = dir;
            }
            let artifacts = run_experiment(&config)?;
            let report = &artifacts.report;
            println!("run complete; artifacts in {}", artifacts.out_dir.display());
            println!("  {}", report.stability.note);
            match report.validation.first_failure {
                Some((mg, stage)) => {
                    println!("  first failure under true loads: microgrid {mg}, stage {stage}")
                }
                None => println!("  attacked plan stays feasible under true loads"),
            }
            Ok(())
        }
        Command::Report { run_dir } => {
            let report = rebuild_report(&run_dir).map_err(stage_err("report"))?;
            report.save(&run_dir.join("report.json"))?;
            println!("rebuilt report.json from artifacts in {}", run_dir.display());
            Ok(())
        }
    }
}

fn run_attack_command(args: AttackArgs) -> Result<(), ExperimentError> {
    let method = match args.method.as_str() {
        "pgd" => AttackMethod::Pgd,
        "greedy-pgd" => AttackMethod::GreedyPgd,
        "saa" => AttackMethod::Saa,
        other => return Err(config_err(format!("unknown method `{other}`"))),
    };
    let target_feature = match args.target_feature.as_str() {
        "temperature" => WeatherFeature::Temperature,
        "humidity" => WeatherFeature::Humidity,
        "wind-speed" => WeatherFeature::WindSpeed,
        "wind-direction" => WeatherFeature::WindDirection,
        other => return Err(config_err(format!("unknown feature `{other}`"))),
    };
    let mode = match args.mode.as_str() {
        "white-box" => AttackMode::WhiteBox,
        "black-box" => AttackMode::BlackBox,
        other => return Err(config_err(format!("unknown mode `{other}`"))),
    };
    let run = || -> Result<(usize, f64), ExperimentError> {
        let model = ForecastModel::load(&args.model)
            .map_err(|e| config_err(format!("model: {e}")))?;
        let series = read_series_csv(&args.data)
            .map_err(|e| ExperimentError::Stage { stage: "attack", message: e.to_string() })?;
        let samples = build_windows(&series, model.h)
            .map_err(|e| ExperimentError::Stage { stage: "attack", message: e.to_string() })?;
        let normalized = model.normalizer.normalize_samples(&samples);
        let tail = normalized.len().saturating_sub(args.windows);
        let spec = AttackSpec {
            method,
            sparsity: Some(args.sparsity),
            target_feature: Some(target_feature),
        };
        let mut config = ExperimentConfig::default();
        config.attack_params.epsilon = args.epsilon;
        config.attack_params.step_size = args.step_size;
        config.attack_params.iterations = args.iterations;
        config.attack_params.mode = mode;
        let attack = blackstart::experiment::attack_config_for(&spec, &config);
        let mut traces = Vec::new();
        let mut total_increase = 0.0;
        for sample in &normalized[tail..] {
            let trace =
                blackstart::experiment::run_attack(&model, &spec, &attack, &sample.window, sample.target)
                    .map_err(|e| ExperimentError::Stage { stage: "attack", message: e.to_string() })?;
            let clean = model
                .loss(&sample.window, sample.target)
                .map_err(|e| ExperimentError::Stage { stage: "attack", message: e.to_string() })?;
            total_increase += trace.final_loss - clean;
            traces.push(trace);
        }
        let n = traces.len();
        std::fs::write(&args.out, serde_json::to_string_pretty(&traces).expect("traces serialize"))?;
        Ok((n, total_increase / n.max(1) as f64))
    };
    let (n, mean_increase) = run()?;
    println!(
        "attacked {n} windows with {method}; mean loss increase {mean_increase:.6}; traces in {}",
        args.out.display()
    );
    Ok(())
}
