//! Report assembly, CSV/JSON/SVG emission, and rebuilding a report from the
//! on-disk stage artifacts alone.

use super::pipeline::CellArtifact;
use super::{ExperimentConfig, ExperimentError};
use crate::forecast::ForecastModel;
use crate::planner::{plan_diff, RestorationPlan};
use crate::validator::ValidationReport;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttackCell {
    pub label: String,
    pub profile: String,
    /// Attacked-minus-clean test MSE in normalized units.
    pub mse_increase: f64,
    /// Oracle queries per attacked window (zero in white-box mode).
    pub mean_queries: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileTraining {
    pub profile: String,
    pub final_train_mse: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanStability {
    /// Switch/load/resource sequences agree between the clean-forecast and
    /// attacked-forecast plans.
    pub sequences_identical: bool,
    pub clean_feasible: bool,
    pub attacked_feasible: bool,
    pub verdicts_differ: bool,
    pub note: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    /// Wall-clock emission time; the only field excluded from determinism
    /// comparisons.
    pub generated_at: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub attack_table: Vec<AttackCell>,
    pub training: Vec<ProfileTraining>,
    pub attacked_plan_objective_kw: f64,
    pub clean_plan_objective_kw: f64,
    pub stability: PlanStability,
    /// Attacked plan checked against true loads.
    pub validation: ValidationReport,
    /// Clean plan checked against the same true loads.
    pub clean_validation: ValidationReport,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self).expect("report serializes"))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| ExperimentError::Config(format!("parsing report: {e}")))
    }
}

/// Write `report.json`, the attack table CSV, and the optional SVG charts.
pub fn write_report_files(
    report: &ExperimentReport,
    charts: &[(String, Vec<f64>, Vec<f64>)],
    out_dir: &Path,
) -> Result<(), ExperimentError> {
    report.save(&out_dir.join("report.json"))?;

    let mut csv = std::io::BufWriter::new(std::fs::File::create(out_dir.join("attack_table.csv"))?);
    writeln!(csv, "profile,method,mse_increase,mean_queries")?;
    for cell in &report.attack_table {
        writeln!(
            csv,
            "{},{},{},{}",
            cell.profile, cell.label, cell.mse_increase, cell.mean_queries
        )?;
    }
    drop(csv);

    for (profile, targets, deviation) in charts {
        let svg = line_chart_svg(
            &format!("{profile}: attacked forecast deviation per test window"),
            &[("target (normalized)", targets), ("attacked deviation", deviation)],
        );
        std::fs::write(out_dir.join("charts").join(format!("{profile}.svg")), svg)?;
    }
    Ok(())
}

/// Minimal polyline chart; enough to eyeball clean-versus-attacked behavior.
fn line_chart_svg(title: &str, series: &[(&str, &Vec<f64>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 320.0;
    const PAD: f64 = 40.0;
    let max_len = series.iter().map(|(_, v)| v.len()).max().unwrap_or(1).max(2);
    let max_val = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .fold(1e-9f64, f64::max);
    let colors = ["#2563eb", "#dc2626", "#059669"];
    let mut body = String::new();
    for (s, (name, values)) in series.iter().enumerate() {
        let mut points = String::new();
        for (i, v) in values.iter().enumerate() {
            let x = PAD + (W - 2.0 * PAD) * i as f64 / (max_len - 1) as f64;
            let y = H - PAD - (H - 2.0 * PAD) * v / max_val;
            points.push_str(&format!("{x:.1},{y:.1} "));
        }
        body.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            colors[s % colors.len()],
            points.trim_end()
        ));
        body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{}\">{}</text>\n",
            PAD,
            16.0 + 14.0 * s as f64,
            colors[s % colors.len()],
            name
        ));
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"#111\">{}</text>\n{}\
         <line x1=\"{PAD}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999\"/>\n</svg>\n",
        W / 2.0 - 150.0,
        H - 12.0,
        title,
        body,
        H - PAD,
        W - PAD,
        H - PAD,
    )
}

/// Rebuild the report from stage artifacts alone: attack cells are recomputed
/// from the stored traces and models, plans re-diffed, and validation reports
/// re-read. Proves every table cell is regenerable from disk.
pub fn rebuild_report(run_dir: &Path) -> Result<ExperimentReport, ExperimentError> {
    let config = ExperimentConfig::load(&run_dir.join("config.json"))?;

    let mut attack_table = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(run_dir.join("attacks"))?
        .collect::<Result<Vec<_>, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let text = std::fs::read_to_string(entry.path())?;
        let cell: CellArtifact = serde_json::from_str(&text)
            .map_err(|e| ExperimentError::Config(format!("parsing attack cell: {e}")))?;
        let model = ForecastModel::load(
            &run_dir.join("models").join(format!("{}.json", cell.profile)),
        )?;
        let mut clean_mse = 0.0;
        let mut attacked_mse = 0.0;
        let mut queries = 0u64;
        for (trace, target) in cell.traces.iter().zip(&cell.targets) {
            clean_mse += model.loss(&trace.clean_window, *target)?;
            attacked_mse += model.loss(&trace.adversarial_window, *target)?;
            queries += trace.query_count;
        }
        let n = cell.traces.len() as f64;
        attack_table.push(AttackCell {
            label: cell.label,
            profile: cell.profile,
            mse_increase: (attacked_mse - clean_mse) / n,
            mean_queries: queries as f64 / n,
        });
    }
    attack_table.sort_by(|a, b| (&a.profile, &a.label).cmp(&(&b.profile, &b.label)));

    let clean_plan = RestorationPlan::load(&run_dir.join("plans").join("clean.json"))
        .map_err(|e| ExperimentError::stage("plan", e))?;
    let attacked_plan = RestorationPlan::load(&run_dir.join("plans").join("attacked.json"))
        .map_err(|e| ExperimentError::stage("plan", e))?;
    let diff =
        plan_diff(&clean_plan, &attacked_plan).map_err(|e| ExperimentError::stage("plan", e))?;

    let validation: ValidationReport = serde_json::from_str(&std::fs::read_to_string(
        run_dir.join("validation").join("report.json"),
    )?)
    .map_err(|e| ExperimentError::Config(format!("parsing validation report: {e}")))?;
    let clean_validation: ValidationReport = serde_json::from_str(&std::fs::read_to_string(
        run_dir.join("validation").join("report_clean.json"),
    )?)
    .map_err(|e| ExperimentError::Config(format!("parsing validation report: {e}")))?;

    // Training summary from the saved report (models do not carry logs).
    let previous = ExperimentReport::load(&run_dir.join("report.json"))?;

    Ok(ExperimentReport {
        attack_table,
        training: previous.training,
        attacked_plan_objective_kw: attacked_plan.objective_kw,
        clean_plan_objective_kw: clean_plan.objective_kw,
        stability: PlanStability {
            sequences_identical: diff.sequences_identical(),
            clean_feasible: !clean_validation.any_infeasible(),
            attacked_feasible: !validation.any_infeasible(),
            verdicts_differ: clean_validation.any_infeasible() != validation.any_infeasible(),
            note: previous.stability.note,
        },
        validation,
        clean_validation,
        provenance: Provenance {
            config_hash: config.content_hash(),
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            generated_at: chrono::Utc::now().to_rfc3339(),
        },
    })
}
