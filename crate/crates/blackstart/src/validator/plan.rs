//! Whole-plan validation: island tracking across stages, ramp coupling, and
//! report assembly.

use super::{
    validate_stage, StageProblem, StageStatus, StageValidationResult, ValidateError, Violation,
};
use crate::feeder::Feeder;
use crate::planner::{stage_demand_kw, PhaseDispatch, RestorationPlan};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

/// Steady-state load series in kW, one entry per stage, keyed by load id.
pub type ActualLoads = BTreeMap<String, Vec<f64>>;

/// Clock and demand-model settings; must mirror the planner's.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ValidationSettings {
    pub stage_minutes: f64,
    pub start_hour: u32,
    pub clpu_enabled: bool,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self { stage_minutes: 60.0, start_hour: 8, clpu_enabled: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageOutcome {
    Feasible,
    Infeasible,
    /// The island already failed at an earlier stage and stopped advancing.
    Skipped,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub outcome: StageOutcome,
    pub violations: Vec<Violation>,
    /// Actual grid-forming output totals (kW) when feasible.
    pub actual_gfm_kw: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MicrogridRecord {
    /// 1-based microgrid index, ordered by grid-forming bus id.
    pub microgrid: usize,
    pub gfm_bus: String,
    pub stages: Vec<StageRecord>,
}

/// Planned-versus-actual roll-up per microgrid and stage, mirroring the
/// generation/load comparison tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub microgrid: usize,
    pub stage: usize,
    pub planned_gfm_kw: f64,
    /// None once the island has failed.
    pub actual_gfm_kw: Option<f64>,
    pub attacked_load_kw: f64,
    pub actual_load_kw: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub microgrids: Vec<MicrogridRecord>,
    /// `(microgrid, stage)` of the earliest failure.
    pub first_failure: Option<(usize, usize)>,
    pub summary: Vec<SummaryRow>,
}

impl ValidationReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self).expect("report serializes"))
    }

    pub fn any_infeasible(&self) -> bool {
        self.first_failure.is_some()
    }
}

/// Validate every island at every stage of the plan against actual loads,
/// carrying each island's actual grid-forming dispatch forward for the ramp
/// bound. A failed island is excluded from its later stages; other islands
/// continue. `planned_loads` (the series the plan was built on) only feed
/// the summary's attacked-versus-actual comparison.
pub fn validate_plan(
    feeder: &Feeder,
    plan: &RestorationPlan,
    planned_loads: &ActualLoads,
    actual_loads: &ActualLoads,
    settings: ValidationSettings,
) -> Result<ValidationReport, ValidateError> {
    if plan.stages.is_empty() {
        return Err(ValidateError::PlanFeederMismatch("plan has no stages".into()));
    }
    for stage in &plan.stages {
        for load in &stage.loads {
            if feeder.load(load).is_none() {
                return Err(ValidateError::PlanFeederMismatch(format!("unknown load `{load}`")));
            }
        }
        for sw in &stage.switches {
            if !feeder.lines.iter().any(|l| l.is_switch && l.id == *sw) {
                return Err(ValidateError::PlanFeederMismatch(format!("unknown switch `{sw}`")));
            }
        }
    }
    for load in &feeder.loads {
        for (name, series) in [("actual", actual_loads), ("planned", planned_loads)] {
            match series.get(&load.id) {
                Some(s) if s.len() >= plan.stages.len() => {}
                _ => {
                    return Err(ValidateError::PlanFeederMismatch(format!(
                        "{name} loads missing a full series for `{}`",
                        load.id
                    )))
                }
            }
        }
    }

    let gfm_buses = feeder.gfm_buses();
    let mut records: Vec<MicrogridRecord> = gfm_buses
        .iter()
        .enumerate()
        .map(|(i, bus)| MicrogridRecord { microgrid: i + 1, gfm_bus: bus.clone(), stages: Vec::new() })
        .collect();
    let mut failed: BTreeSet<usize> = BTreeSet::new();
    let mut prev_gfm: BTreeMap<usize, BTreeMap<String, PhaseDispatch>> = BTreeMap::new();
    let mut first_failure: Option<(usize, usize)> = None;
    let mut summary = Vec::new();

    for plan_stage in &plan.stages {
        let t = plan_stage.stage;
        for (mg_idx, gfm_bus) in gfm_buses.iter().enumerate() {
            let mg = mg_idx + 1;
            if failed.contains(&mg) {
                records[mg_idx].stages.push(StageRecord {
                    stage: t,
                    outcome: StageOutcome::Skipped,
                    violations: Vec::new(),
                    actual_gfm_kw: None,
                });
                continue;
            }
            if !plan_stage.energized_buses.contains(gfm_bus) {
                return Err(ValidateError::PlanFeederMismatch(format!(
                    "grid-forming bus `{gfm_bus}` not energized at stage {t}"
                )));
            }
            let island = island_of(feeder, plan_stage, gfm_bus)?;

            // Demands for restored loads inside this island.
            let mut loads_kw = BTreeMap::new();
            let mut attacked_total = 0.0;
            let mut actual_total = 0.0;
            for load in &feeder.loads {
                if !plan_stage.loads.contains(&load.id) || !island.contains(&load.bus) {
                    continue;
                }
                let pickup = plan.pickup_stage(&load.id).expect("restored load has a pickup");
                let actual = stage_demand_kw(
                    actual_loads[&load.id][t - 1],
                    load.load_type,
                    pickup,
                    t,
                    settings.start_hour,
                    settings.stage_minutes,
                    settings.clpu_enabled,
                );
                let attacked = stage_demand_kw(
                    planned_loads[&load.id][t - 1],
                    load.load_type,
                    pickup,
                    t,
                    settings.start_hour,
                    settings.stage_minutes,
                    settings.clpu_enabled,
                );
                loads_kw.insert(load.id.clone(), actual);
                attacked_total += attacked;
                actual_total += actual;
            }

            let gfl_setpoints: BTreeMap<String, PhaseDispatch> = plan_stage
                .gfl_setpoints
                .iter()
                .filter(|(id, _)| {
                    feeder.ibrs.iter().any(|i| i.id == **id && island.contains(&i.bus))
                })
                .map(|(id, d)| (id.clone(), *d))
                .collect();

            let problem = StageProblem {
                feeder,
                stage: t,
                energized_buses: island.clone(),
                closed_switches: plan_stage.switches.clone(),
                loads_kw,
                loads_kvar: BTreeMap::new(),
                gfl_setpoints,
                previous_gfm: if t == 1 { None } else { Some(prev_gfm.remove(&mg).unwrap_or_default()) },
            };
            let result: StageValidationResult = validate_stage(&problem)?;

            let planned_gfm_kw: f64 = plan_stage
                .gfm_dispatch
                .iter()
                .filter(|(id, _)| {
                    feeder.ibrs.iter().any(|i| i.id == **id && island.contains(&i.bus))
                })
                .map(|(_, d)| d.iter().map(|p| p.0).sum::<f64>())
                .sum();

            match result.status {
                StageStatus::Feasible => {
                    let dispatch = result.dispatch.as_ref().expect("feasible carries dispatch");
                    let actual_gfm_kw: f64 =
                        dispatch.gfm.values().map(|d| d.iter().map(|p| p.0).sum::<f64>()).sum();
                    prev_gfm.insert(mg, dispatch.gfm.clone());
                    records[mg_idx].stages.push(StageRecord {
                        stage: t,
                        outcome: StageOutcome::Feasible,
                        violations: Vec::new(),
                        actual_gfm_kw: Some(actual_gfm_kw),
                    });
                    summary.push(SummaryRow {
                        microgrid: mg,
                        stage: t,
                        planned_gfm_kw,
                        actual_gfm_kw: Some(actual_gfm_kw),
                        attacked_load_kw: attacked_total,
                        actual_load_kw: actual_total,
                    });
                }
                StageStatus::Infeasible => {
                    failed.insert(mg);
                    if first_failure.is_none()
                        || (t, mg) < (first_failure.unwrap().1, first_failure.unwrap().0)
                    {
                        first_failure = Some((mg, t));
                    }
                    records[mg_idx].stages.push(StageRecord {
                        stage: t,
                        outcome: StageOutcome::Infeasible,
                        violations: result.violations,
                        actual_gfm_kw: None,
                    });
                    summary.push(SummaryRow {
                        microgrid: mg,
                        stage: t,
                        planned_gfm_kw,
                        actual_gfm_kw: None,
                        attacked_load_kw: attacked_total,
                        actual_load_kw: actual_total,
                    });
                }
            }
        }
    }

    Ok(ValidationReport { microgrids: records, first_failure, summary })
}

/// Energized island containing `gfm_bus` under the stage's closed switches.
fn island_of(
    feeder: &Feeder,
    plan_stage: &crate::planner::PlanStage,
    gfm_bus: &str,
) -> Result<BTreeSet<String>, ValidateError> {
    let sources: BTreeSet<String> = [gfm_bus.to_string()].into();
    let reachable = crate::feeder::energized_subgraph(feeder, &plan_stage.switches, &sources)?;
    // Restrict to buses the plan actually energized.
    Ok(reachable.intersection(&plan_stage.energized_buses).cloned().collect())
}

/// Write the two table-shaped CSV mirrors: per-violation rows and the
/// planned-versus-actual generation/load comparison.
pub fn write_report_csvs(report: &ValidationReport, dir: &Path) -> std::io::Result<()> {
    use std::io::Write;
    let mut violations = std::io::BufWriter::new(std::fs::File::create(dir.join("violations.csv"))?);
    writeln!(violations, "stage,microgrid,bus,phase,constraint,magnitude")?;
    for mg in &report.microgrids {
        for stage in &mg.stages {
            for v in &stage.violations {
                writeln!(
                    violations,
                    "{},{},{},{},{},{}",
                    stage.stage,
                    mg.microgrid,
                    v.bus,
                    v.phase.letter(),
                    v.kind,
                    v.magnitude
                )?;
            }
        }
    }
    let mut gen = std::io::BufWriter::new(std::fs::File::create(dir.join("gfm_generation.csv"))?);
    writeln!(
        gen,
        "microgrid,stage,planned_gfm_kw,actual_gfm_kw,attacked_load_kw,actual_load_kw"
    )?;
    for row in &report.summary {
        writeln!(
            gen,
            "{},{},{:.3},{},{:.3},{:.3}",
            row.microgrid,
            row.stage,
            row.planned_gfm_kw,
            row.actual_gfm_kw.map_or("-".to_string(), |v| format!("{v:.3}")),
            row.attacked_load_kw,
            row.actual_load_kw
        )?;
    }
    Ok(())
}
