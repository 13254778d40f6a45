//! Staged restoration planning.
//!
//! The planner answers: which switches close at which stage, which loads
//! pick up when, and how is generation dispatched, to maximize weighted
//! restored energy over the horizon? It builds one mixed-integer program per
//! electrically separate territory and solves it with the embedded solver.
//!
//! Modeling choices that shape the answer:
//!
//! * Loads are all-or-nothing per stage (binary pickup flags, monotone).
//! * Energization spreads one switch-hop per stage from the grid-forming
//!   blocks; switch closures are monotone. A closed switch whose far side
//!   was energized the previous stage extends the island.
//! * Demand is the forecast inflated by the cold-load-pickup decay when
//!   enabled, evaluated from each load's own pickup stage.
//! * Grid-forming output ramps under the per-phase maximum-load-step bound
//!   from stage 2 on; stage 1 is bounded by capacity alone.
//! * Tiny objective penalties prefer late switch closures and lean
//!   grid-forming dispatch, so degenerate optima resolve the same way every
//!   run.

mod diff;
mod model;

pub use diff::{plan_diff, PlanDiff, StageDiff};
pub use model::{plan_restoration, verify_plan_balance};

use crate::clpu::{self, LoadType, TimeOfDay};
use crate::feeder::Feeder;
use crate::lp::LpError;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Reactive demand per unit active demand at 0.95 lagging power factor.
pub const LOAD_Q_PER_P: f64 = 0.328_684_479_297_847_4;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("restoration problem infeasible; stretched constraints: {attribution:?}")]
    Infeasible { attribution: Vec<(String, f64)> },
    #[error("node limit reached before any feasible plan was found")]
    NodeLimitReached,
    #[error("load `{0}` has no forecast for every stage")]
    MissingForecast(String),
    #[error("bad planner input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Feeder(#[from] crate::feeder::FeederError),
}

#[derive(Debug, Clone)]
pub struct PlannerInput<'a> {
    pub feeder: &'a Feeder,
    /// Number of restoration stages.
    pub stages: usize,
    /// Stage duration; the cold-load-pickup decay runs on this clock.
    pub stage_minutes: f64,
    /// Wall-clock hour of stage 1, used to bucket pickup times.
    pub start_hour: u32,
    /// Per-load steady-state forecast in kW per stage (`stages` entries).
    pub load_forecasts: BTreeMap<String, Vec<f64>>,
    pub clpu_enabled: bool,
    /// Enforce the voltage band inside the plan (on by default).
    pub enforce_voltage: bool,
}

impl<'a> PlannerInput<'a> {
    pub fn new(feeder: &'a Feeder, stages: usize) -> Self {
        Self {
            feeder,
            stages,
            stage_minutes: 60.0,
            start_hour: 8,
            load_forecasts: BTreeMap::new(),
            clpu_enabled: true,
            enforce_voltage: true,
        }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.stages == 0 {
            return Err(PlanError::BadInput("stage count must be at least 1".into()));
        }
        if !(self.stage_minutes > 0.0) {
            return Err(PlanError::BadInput("stage_minutes must be positive".into()));
        }
        for load in &self.feeder.loads {
            match self.load_forecasts.get(&load.id) {
                Some(series) if series.len() >= self.stages => {}
                _ => return Err(PlanError::MissingForecast(load.id.clone())),
            }
        }
        Ok(())
    }
}

/// Demand in kW at `stage` for a load picked up at `pickup_stage`, given its
/// steady-state forecast at `stage`. Stages are 1-based.
pub fn stage_demand_kw(
    forecast_kw: f64,
    load_type: LoadType,
    pickup_stage: usize,
    stage: usize,
    start_hour: u32,
    stage_minutes: f64,
    clpu_enabled: bool,
) -> f64 {
    if stage < pickup_stage {
        return 0.0;
    }
    if !clpu_enabled {
        return forecast_kw;
    }
    let pickup_hour = start_hour as f64 + (pickup_stage - 1) as f64 * stage_minutes / 60.0;
    let bucket = TimeOfDay::from_hour(pickup_hour.floor() as u32);
    let params = clpu::lookup_params(load_type, bucket);
    let minutes = stage_minutes * (stage - pickup_stage) as f64;
    clpu::clpu_power(forecast_kw, params, minutes).expect("non-negative elapsed time")
}

/// Per-unit-per-phase dispatch record: `(P kW, Q kvar)` indexed by phase.
pub type PhaseDispatch = [(f64, f64); 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStage {
    /// 1-based stage index.
    pub stage: usize,
    /// Cumulative closed switches.
    pub switches: BTreeSet<String>,
    /// Buses energized at this stage.
    pub energized_buses: BTreeSet<String>,
    /// Cumulative restored loads.
    pub loads: BTreeSet<String>,
    /// Cumulative energized inverter resources.
    pub ibrs: BTreeSet<String>,
    /// Grid-following setpoints, kW/kvar per phase.
    pub gfl_setpoints: BTreeMap<String, PhaseDispatch>,
    /// Grid-forming dispatch, kW/kvar per phase.
    pub gfm_dispatch: BTreeMap<String, PhaseDispatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestorationPlan {
    pub stages: Vec<PlanStage>,
    /// Weighted served energy over the horizon (kW-stages), before the
    /// deterministic tie-break penalties.
    pub objective_kw: f64,
    pub node_limit_reached: bool,
}

impl RestorationPlan {
    /// First stage at which `load` is restored, if ever.
    pub fn pickup_stage(&self, load: &str) -> Option<usize> {
        self.stages.iter().find(|s| s.loads.contains(load)).map(|s| s.stage)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plan serializes")
    }

    pub fn save(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self).expect("plan serializes"))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, PlanError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PlanError::BadInput(format!("reading plan: {e}")))?;
        serde_json::from_str(&text).map_err(|e| PlanError::BadInput(format!("parsing plan: {e}")))
    }
}
