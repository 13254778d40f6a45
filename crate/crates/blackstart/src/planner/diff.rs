//! Structured comparison of two restoration plans.

use super::{PlanError, RestorationPlan};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Per-stage symmetric differences plus setpoint deltas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDiff {
    pub stage: usize,
    pub switches_only_a: BTreeSet<String>,
    pub switches_only_b: BTreeSet<String>,
    pub loads_only_a: BTreeSet<String>,
    pub loads_only_b: BTreeSet<String>,
    pub ibrs_only_a: BTreeSet<String>,
    pub ibrs_only_b: BTreeSet<String>,
    /// `(unit, phase letter, dP kW, dQ kvar)` where either delta exceeds the
    /// reporting threshold.
    pub setpoint_deltas: Vec<(String, char, f64, f64)>,
}

impl StageDiff {
    pub fn sequences_identical(&self) -> bool {
        self.switches_only_a.is_empty()
            && self.switches_only_b.is_empty()
            && self.loads_only_a.is_empty()
            && self.loads_only_b.is_empty()
            && self.ibrs_only_a.is_empty()
            && self.ibrs_only_b.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences_identical() && self.setpoint_deltas.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDiff {
    pub stages: Vec<StageDiff>,
}

impl PlanDiff {
    /// True when switch, load, and resource sequences agree at every stage
    /// (setpoints may still differ).
    pub fn sequences_identical(&self) -> bool {
        self.stages.iter().all(StageDiff::sequences_identical)
    }

    pub fn is_empty(&self) -> bool {
        self.stages.iter().all(StageDiff::is_empty)
    }
}

const SETPOINT_REPORT_KW: f64 = 1e-6;

/// Stage-by-stage structured difference. Both plans must cover the same
/// horizon.
pub fn plan_diff(a: &RestorationPlan, b: &RestorationPlan) -> Result<PlanDiff, PlanError> {
    if a.stages.len() != b.stages.len() {
        return Err(PlanError::BadInput(format!(
            "plans cover different horizons: {} vs {} stages",
            a.stages.len(),
            b.stages.len()
        )));
    }
    let mut stages = Vec::with_capacity(a.stages.len());
    for (sa, sb) in a.stages.iter().zip(&b.stages) {
        let only = |x: &BTreeSet<String>, y: &BTreeSet<String>| -> BTreeSet<String> {
            x.difference(y).cloned().collect()
        };
        let mut setpoint_deltas = Vec::new();
        let units: BTreeSet<&String> = sa
            .gfl_setpoints
            .keys()
            .chain(sb.gfl_setpoints.keys())
            .chain(sa.gfm_dispatch.keys())
            .chain(sb.gfm_dispatch.keys())
            .collect();
        for unit in units {
            let lookup = |stage: &super::PlanStage| -> super::PhaseDispatch {
                stage
                    .gfl_setpoints
                    .get(unit)
                    .or_else(|| stage.gfm_dispatch.get(unit))
                    .copied()
                    .unwrap_or([(0.0, 0.0); 3])
            };
            let da = lookup(sa);
            let db = lookup(sb);
            for (idx, letter) in ['a', 'b', 'c'].into_iter().enumerate() {
                let dp = db[idx].0 - da[idx].0;
                let dq = db[idx].1 - da[idx].1;
                if dp.abs() > SETPOINT_REPORT_KW || dq.abs() > SETPOINT_REPORT_KW {
                    setpoint_deltas.push((unit.clone(), letter, dp, dq));
                }
            }
        }
        stages.push(StageDiff {
            stage: sa.stage,
            switches_only_a: only(&sa.switches, &sb.switches),
            switches_only_b: only(&sb.switches, &sa.switches),
            loads_only_a: only(&sa.loads, &sb.loads),
            loads_only_b: only(&sb.loads, &sa.loads),
            ibrs_only_a: only(&sa.ibrs, &sb.ibrs),
            ibrs_only_b: only(&sb.ibrs, &sa.ibrs),
            setpoint_deltas,
        });
    }
    Ok(PlanDiff { stages })
}
