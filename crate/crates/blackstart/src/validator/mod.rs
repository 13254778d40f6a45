//! Stage-by-stage feasibility validation of a restoration plan against true
//! loads, with per-bus/per-phase violation attribution.
//!
//! The plan fixes the discrete world: which switches are closed, which loads
//! are energized, and the grid-following setpoints. Validation asks whether
//! a linearized three-phase power flow can serve the *actual* demands inside
//! that fixed structure. Demand is not sheddable here: infeasibility is the
//! failure signal, and an elastic re-solve localizes it to named constraints
//! at specific buses and phases.

mod plan;
pub mod reference;
mod stage;

pub use plan::{
    validate_plan, write_report_csvs, ActualLoads, MicrogridRecord, StageOutcome, StageRecord,
    SummaryRow, ValidationReport, ValidationSettings,
};
pub use stage::{attribute_violations, validate_stage};

use crate::feeder::Phase;
use crate::lp::LpError;
use crate::planner::PhaseDispatch;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ValidateError {
    #[error("malformed stage problem: {0}")]
    MalformedStage(String),
    #[error("attribution requested but the stage is feasible")]
    UnexpectedlyFeasible,
    #[error("plan does not fit the feeder: {0}")]
    PlanFeederMismatch(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Feeder(#[from] crate::feeder::FeederError),
}

/// Constraint families the validator can attribute an infeasibility to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    ActiveBalance,
    ReactiveBalance,
    LineP,
    LineQ,
    VoltageLow,
    VoltageHigh,
    GflSetpoint,
    GfmCapacity,
    Ramping,
}

impl std::fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ConstraintKind::ActiveBalance => "active_balance",
            ConstraintKind::ReactiveBalance => "reactive_balance",
            ConstraintKind::LineP => "line_p",
            ConstraintKind::LineQ => "line_q",
            ConstraintKind::VoltageLow => "voltage_low",
            ConstraintKind::VoltageHigh => "voltage_high",
            ConstraintKind::GflSetpoint => "gfl_setpoint",
            ConstraintKind::GfmCapacity => "gfm_capacity",
            ConstraintKind::Ramping => "ramping",
        };
        f.write_str(name)
    }
}

/// One stretched constraint. `magnitude` is in kW or kvar for power-family
/// rows and in squared per-unit voltage for the voltage band rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub bus: String,
    pub phase: Phase,
    pub kind: ConstraintKind,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Feasible,
    Infeasible,
}

/// Full variable assignment for a feasible stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageDispatch {
    /// Grid-forming output per unit, kW/kvar per phase.
    pub gfm: BTreeMap<String, PhaseDispatch>,
    /// Grid-following output (echoes the pinned setpoints).
    pub gfl: BTreeMap<String, PhaseDispatch>,
    /// Line flows, kW/kvar per phase, oriented from -> to.
    pub flows: BTreeMap<String, PhaseDispatch>,
    /// Squared per-unit voltage magnitude per bus and phase.
    pub voltages: BTreeMap<String, [f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageValidationResult {
    pub status: StageStatus,
    pub violations: Vec<Violation>,
    pub dispatch: Option<StageDispatch>,
}

/// One island-stage feasibility question: the energized structure from the
/// plan plus the actual demands to absorb.
#[derive(Debug, Clone)]
pub struct StageProblem<'a> {
    pub feeder: &'a crate::feeder::Feeder,
    /// 1-based stage index; stage 1 is capacity-bound, later stages add the
    /// grid-forming ramp bound against `previous_gfm`.
    pub stage: usize,
    pub energized_buses: BTreeSet<String>,
    pub closed_switches: BTreeSet<String>,
    /// Actual active demand in kW per energized load.
    pub loads_kw: BTreeMap<String, f64>,
    /// Actual reactive demand in kvar; defaults to 0.95-lagging when absent.
    pub loads_kvar: BTreeMap<String, f64>,
    /// Pinned grid-following setpoints from the plan.
    pub gfl_setpoints: BTreeMap<String, PhaseDispatch>,
    /// Previous-stage grid-forming dispatch (actual), for the ramp bound.
    pub previous_gfm: Option<BTreeMap<String, PhaseDispatch>>,
}
