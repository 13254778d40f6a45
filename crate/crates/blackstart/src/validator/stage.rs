//! Single-stage feasibility LP and elastic attribution.

use super::{
    ConstraintKind, StageDispatch, StageProblem, StageStatus, StageValidationResult,
    ValidateError, Violation,
};
use crate::feeder::{IbrKind, Line, Phase};
use crate::lp::{elastic_pass_weighted, solve_lp_raw, LpProblem, LpStatus, Relation, Sense, VarId};
use crate::planner::LOAD_Q_PER_P;
use std::collections::BTreeMap;

/// Slack weight for generation-side rows. Slightly above the balance-row
/// weight so ties attribute to nodal balance (the demand side), matching how
/// failures are reported.
const SUPPLY_SIDE_WEIGHT: f64 = 1.01;

const MW: f64 = 1.0 / 1000.0;

/// Attribution metadata for one elastic row.
#[derive(Debug, Clone)]
struct RowMeta {
    kind: ConstraintKind,
    bus: String,
    phase: Phase,
    /// Multiplier turning raw slack into the reported magnitude (1000 for
    /// MW rows reported in kW, 1 for squared-voltage rows).
    scale: f64,
}

struct StageLp<'a> {
    problem: &'a StageProblem<'a>,
    lp: LpProblem,
    /// Per constraint-row attribution; `None` rows stay hard.
    meta: Vec<Option<RowMeta>>,
    active_lines: Vec<usize>,
    flow_p: BTreeMap<(usize, usize), VarId>,
    flow_q: BTreeMap<(usize, usize), VarId>,
    voltage: BTreeMap<(String, usize), VarId>,
    gfm_p: BTreeMap<(String, usize), VarId>,
    gfm_q: BTreeMap<(String, usize), VarId>,
    gfl_p: BTreeMap<(String, usize), VarId>,
    gfl_q: BTreeMap<(String, usize), VarId>,
}

impl<'a> StageLp<'a> {
    fn build(problem: &'a StageProblem<'a>) -> Result<Self, ValidateError> {
        let feeder = problem.feeder;
        if problem.stage == 0 {
            return Err(ValidateError::MalformedStage("stages are 1-based".into()));
        }
        if problem.stage >= 2 && problem.previous_gfm.is_none() {
            return Err(ValidateError::MalformedStage(
                "stage 2 and later need the previous grid-forming dispatch".into(),
            ));
        }
        for bus in &problem.energized_buses {
            feeder.bus(bus)?;
        }
        for id in problem.loads_kw.keys() {
            let load = feeder
                .load(id)
                .ok_or_else(|| ValidateError::MalformedStage(format!("unknown load `{id}`")))?;
            if !problem.energized_buses.contains(&load.bus) {
                return Err(ValidateError::MalformedStage(format!(
                    "load `{id}` lies outside the energized set"
                )));
            }
        }

        let energized = |bus: &str| problem.energized_buses.contains(bus);
        let line_active = |line: &Line| -> bool {
            energized(&line.from)
                && energized(&line.to)
                && (!line.is_switch || problem.closed_switches.contains(&line.id))
        };
        let active_lines: Vec<usize> = (0..feeder.lines.len())
            .filter(|&i| line_active(&feeder.lines[i]))
            .collect();

        // Island grid-forming units; the first sorted bus pins the voltage
        // reference.
        let mut gfm_units: Vec<usize> = Vec::new();
        let mut gfl_units: Vec<usize> = Vec::new();
        for (i, ibr) in feeder.ibrs.iter().enumerate() {
            if !energized(&ibr.bus) {
                continue;
            }
            match ibr.kind {
                IbrKind::Gfm => gfm_units.push(i),
                IbrKind::Gfl => gfl_units.push(i),
            }
        }
        if gfm_units.is_empty() {
            return Err(ValidateError::MalformedStage(
                "energized island has no grid-forming unit".into(),
            ));
        }
        let pinned_bus = gfm_units
            .iter()
            .map(|&g| feeder.ibrs[g].bus.clone())
            .min()
            .expect("at least one grid-forming unit");
        for &g in &gfl_units {
            let id = &feeder.ibrs[g].id;
            if !problem.gfl_setpoints.contains_key(id) {
                return Err(ValidateError::MalformedStage(format!(
                    "energized grid-following unit `{id}` has no setpoint"
                )));
            }
        }

        let mut lp = LpProblem::new(format!("stage{}", problem.stage), Sense::Minimize);
        let mut meta: Vec<Option<RowMeta>> = Vec::new();

        // Flow variables (free; limits are elastic rows).
        let mut flow_p = BTreeMap::new();
        let mut flow_q = BTreeMap::new();
        for &k in &active_lines {
            let line = &feeder.lines[k];
            for phase in line.phases.iter() {
                let p = lp.add_variable(
                    format!("fp_{}_{}", line.id, phase.letter()),
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                );
                let q = lp.add_variable(
                    format!("fq_{}_{}", line.id, phase.letter()),
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                );
                flow_p.insert((k, phase.index()), p);
                flow_q.insert((k, phase.index()), q);
            }
        }
        // Voltages.
        let mut voltage = BTreeMap::new();
        for bus_id in &problem.energized_buses {
            let bus = feeder.bus(bus_id)?;
            for phase in bus.phases.iter() {
                let (lo, hi) = if *bus_id == pinned_bus {
                    (1.0, 1.0)
                } else {
                    (0.0, f64::INFINITY)
                };
                let v = lp.add_variable(format!("u_{}_{}", bus_id, phase.letter()), lo, hi);
                voltage.insert((bus_id.clone(), phase.index()), v);
            }
        }
        // Generation.
        let mut gfm_p = BTreeMap::new();
        let mut gfm_q = BTreeMap::new();
        for &g in &gfm_units {
            let ibr = &feeder.ibrs[g];
            for phase in ibr.phases.iter() {
                let p = lp.add_variable(
                    format!("pg_{}_{}", ibr.id, phase.letter()),
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                );
                let q = lp.add_variable(
                    format!("qg_{}_{}", ibr.id, phase.letter()),
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                );
                gfm_p.insert((ibr.id.clone(), phase.index()), p);
                gfm_q.insert((ibr.id.clone(), phase.index()), q);
            }
        }
        let mut gfl_p = BTreeMap::new();
        let mut gfl_q = BTreeMap::new();
        for &g in &gfl_units {
            let ibr = &feeder.ibrs[g];
            for phase in ibr.phases.iter() {
                let p = lp.add_variable(
                    format!("pg_{}_{}", ibr.id, phase.letter()),
                    0.0,
                    ibr.pmax_kw * MW,
                );
                let q = lp.add_variable(
                    format!("qg_{}_{}", ibr.id, phase.letter()),
                    0.0,
                    ibr.qmax_kvar * MW,
                );
                gfl_p.insert((ibr.id.clone(), phase.index()), p);
                gfl_q.insert((ibr.id.clone(), phase.index()), q);
            }
        }

        // Demand per bus/phase in MW and Mvar.
        let mut demand: BTreeMap<(String, usize), (f64, f64)> = BTreeMap::new();
        for (id, &kw) in &problem.loads_kw {
            let load = feeder.load(id).expect("validated above");
            let kvar = problem.loads_kvar.get(id).copied().unwrap_or(kw * LOAD_Q_PER_P);
            let share = load.phases.len() as f64;
            for phase in load.phases.iter() {
                let slot = demand.entry((load.bus.clone(), phase.index())).or_insert((0.0, 0.0));
                slot.0 += kw * MW / share;
                slot.1 += kvar * MW / share;
            }
        }

        // Nodal balance.
        for bus_id in &problem.energized_buses {
            let bus = feeder.bus(bus_id)?;
            for phase in bus.phases.iter() {
                let mut p_terms: Vec<(VarId, f64)> = Vec::new();
                let mut q_terms: Vec<(VarId, f64)> = Vec::new();
                for &k in &active_lines {
                    let line = &feeder.lines[k];
                    if !line.phases.contains(phase) {
                        continue;
                    }
                    let sign = if line.from == *bus_id {
                        1.0
                    } else if line.to == *bus_id {
                        -1.0
                    } else {
                        continue;
                    };
                    p_terms.push((flow_p[&(k, phase.index())], sign));
                    q_terms.push((flow_q[&(k, phase.index())], sign));
                }
                for &g in gfm_units.iter().chain(&gfl_units) {
                    let ibr = &feeder.ibrs[g];
                    if ibr.bus == *bus_id && ibr.phases.contains(phase) {
                        let (p, q) = match ibr.kind {
                            IbrKind::Gfm => (
                                gfm_p[&(ibr.id.clone(), phase.index())],
                                gfm_q[&(ibr.id.clone(), phase.index())],
                            ),
                            IbrKind::Gfl => (
                                gfl_p[&(ibr.id.clone(), phase.index())],
                                gfl_q[&(ibr.id.clone(), phase.index())],
                            ),
                        };
                        p_terms.push((p, -1.0));
                        q_terms.push((q, -1.0));
                    }
                }
                let (dp, dq) = demand
                    .get(&(bus_id.clone(), phase.index()))
                    .copied()
                    .unwrap_or((0.0, 0.0));
                lp.add_constraint(
                    format!("balp_{}_{}", bus_id, phase.letter()),
                    p_terms,
                    Relation::Eq,
                    -dp,
                );
                meta.push(
                    Some(RowMeta {
                        kind: ConstraintKind::ActiveBalance,
                        bus: bus_id.clone(),
                        phase,
                        scale: 1000.0,
                    }),
                );
                lp.add_constraint(
                    format!("balq_{}_{}", bus_id, phase.letter()),
                    q_terms,
                    Relation::Eq,
                    -dq,
                );
                meta.push(
                    Some(RowMeta {
                        kind: ConstraintKind::ReactiveBalance,
                        bus: bus_id.clone(),
                        phase,
                        scale: 1000.0,
                    }),
                );
            }
        }

        // Line flow limits.
        for &k in &active_lines {
            let line = &feeder.lines[k];
            for phase in line.phases.iter() {
                let p = flow_p[&(k, phase.index())];
                let q = flow_q[&(k, phase.index())];
                for (var, limit, kind, tag) in [
                    (p, line.pmax_kw * MW, ConstraintKind::LineP, "p"),
                    (q, line.qmax_kvar * MW, ConstraintKind::LineQ, "q"),
                ] {
                    lp.add_constraint(
                        format!("lim{tag}_hi_{}_{}", line.id, phase.letter()),
                        vec![(var, 1.0)],
                        Relation::Le,
                        limit,
                    );
                    meta.push(
                        Some(RowMeta { kind, bus: line.from.clone(), phase, scale: 1000.0 }),
                    );
                    lp.add_constraint(
                        format!("lim{tag}_lo_{}_{}", line.id, phase.letter()),
                        vec![(var, 1.0)],
                        Relation::Ge,
                        -limit,
                    );
                    meta.push(
                        Some(RowMeta { kind, bus: line.from.clone(), phase, scale: 1000.0 }),
                    );
                }
            }
        }

        // Voltage drops (hard) and voltage band (elastic).
        let pu_per_mw = 3000.0 / feeder.base_kva;
        for &k in &active_lines {
            let line = &feeder.lines[k];
            for phase in line.phases.iter() {
                let mut terms = vec![
                    (voltage[&(line.from.clone(), phase.index())], 1.0),
                    (voltage[&(line.to.clone(), phase.index())], -1.0),
                ];
                for other in line.phases.iter() {
                    let rc = 2.0 * pu_per_mw * line.r_hat[phase.index()][other.index()];
                    let xc = 2.0 * pu_per_mw * line.x_hat[phase.index()][other.index()];
                    terms.push((flow_p[&(k, other.index())], -rc));
                    terms.push((flow_q[&(k, other.index())], -xc));
                }
                lp.add_constraint(
                    format!("vd_{}_{}", line.id, phase.letter()),
                    terms,
                    Relation::Eq,
                    0.0,
                );
                meta.push(None); // structural, never stretched
            }
        }
        for bus_id in &problem.energized_buses {
            if *bus_id == pinned_bus {
                continue;
            }
            let bus = feeder.bus(bus_id)?;
            for phase in bus.phases.iter() {
                let v = voltage[&(bus_id.clone(), phase.index())];
                lp.add_constraint(
                    format!("vlo_{}_{}", bus_id, phase.letter()),
                    vec![(v, 1.0)],
                    Relation::Ge,
                    bus.vmin2,
                );
                meta.push(
                    Some(RowMeta {
                        kind: ConstraintKind::VoltageLow,
                        bus: bus_id.clone(),
                        phase,
                        scale: 1.0,
                    }),
                );
                lp.add_constraint(
                    format!("vhi_{}_{}", bus_id, phase.letter()),
                    vec![(v, 1.0)],
                    Relation::Le,
                    bus.vmax2,
                );
                meta.push(
                    Some(RowMeta {
                        kind: ConstraintKind::VoltageHigh,
                        bus: bus_id.clone(),
                        phase,
                        scale: 1.0,
                    }),
                );
            }
        }

        // Grid-following pins.
        for &g in &gfl_units {
            let ibr = &feeder.ibrs[g];
            let setpoint = problem.gfl_setpoints[&ibr.id];
            for phase in ibr.phases.iter() {
                let (sp, sq) = setpoint[phase.index()];
                lp.add_constraint(
                    format!("pinp_{}_{}", ibr.id, phase.letter()),
                    vec![(gfl_p[&(ibr.id.clone(), phase.index())], 1.0)],
                    Relation::Eq,
                    sp * MW,
                );
                meta.push(
                    Some(RowMeta {
                        kind: ConstraintKind::GflSetpoint,
                        bus: ibr.bus.clone(),
                        phase,
                        scale: 1000.0,
                    }),
                );
                lp.add_constraint(
                    format!("pinq_{}_{}", ibr.id, phase.letter()),
                    vec![(gfl_q[&(ibr.id.clone(), phase.index())], 1.0)],
                    Relation::Eq,
                    sq * MW,
                );
                meta.push(
                    Some(RowMeta {
                        kind: ConstraintKind::GflSetpoint,
                        bus: ibr.bus.clone(),
                        phase,
                        scale: 1000.0,
                    }),
                );
            }
        }

        // Grid-forming capacity and ramp.
        for &g in &gfm_units {
            let ibr = &feeder.ibrs[g];
            for phase in ibr.phases.iter() {
                let p = gfm_p[&(ibr.id.clone(), phase.index())];
                let q = gfm_q[&(ibr.id.clone(), phase.index())];
                for (var, limit, tag) in
                    [(p, ibr.pmax_kw * MW, "p"), (q, ibr.qmax_kvar * MW, "q")]
                {
                    lp.add_constraint(
                        format!("cap{tag}_hi_{}_{}", ibr.id, phase.letter()),
                        vec![(var, 1.0)],
                        Relation::Le,
                        limit,
                    );
                    meta.push(
                        Some(RowMeta {
                            kind: ConstraintKind::GfmCapacity,
                            bus: ibr.bus.clone(),
                            phase,
                            scale: 1000.0,
                        }),
                    );
                    lp.add_constraint(
                        format!("cap{tag}_lo_{}_{}", ibr.id, phase.letter()),
                        vec![(var, 1.0)],
                        Relation::Ge,
                        0.0,
                    );
                    meta.push(
                        Some(RowMeta {
                            kind: ConstraintKind::GfmCapacity,
                            bus: ibr.bus.clone(),
                            phase,
                            scale: 1000.0,
                        }),
                    );
                }
                if problem.stage >= 2 {
                    let ramp = ibr.ramp.expect("grid-forming units carry ramp data");
                    let step = ramp.max_load_step(problem.stage) * MW;
                    let prev = problem
                        .previous_gfm
                        .as_ref()
                        .and_then(|m| m.get(&ibr.id))
                        .map(|d| d[phase.index()].0 * MW)
                        .unwrap_or(0.0);
                    lp.add_constraint(
                        format!("ramp_up_{}_{}", ibr.id, phase.letter()),
                        vec![(p, 1.0)],
                        Relation::Le,
                        prev + step,
                    );
                    meta.push(
                        Some(RowMeta {
                            kind: ConstraintKind::Ramping,
                            bus: ibr.bus.clone(),
                            phase,
                            scale: 1000.0,
                        }),
                    );
                    lp.add_constraint(
                        format!("ramp_dn_{}_{}", ibr.id, phase.letter()),
                        vec![(p, 1.0)],
                        Relation::Ge,
                        prev - step,
                    );
                    meta.push(
                        Some(RowMeta {
                            kind: ConstraintKind::Ramping,
                            bus: ibr.bus.clone(),
                            phase,
                            scale: 1000.0,
                        }),
                    );
                }
            }
        }

        debug_assert_eq!(meta.len(), lp.num_constraints());
        Ok(StageLp {
            problem,
            lp,
            meta,
            active_lines,
            flow_p,
            flow_q,
            voltage,
            gfm_p,
            gfm_q,
            gfl_p,
            gfl_q,
        })
    }

    fn dispatch_from(&self, values: &[f64]) -> StageDispatch {
        let feeder = self.problem.feeder;
        let mut dispatch = StageDispatch::default();
        for ((id, phase), var) in &self.gfm_p {
            let entry = dispatch.gfm.entry(id.clone()).or_insert([(0.0, 0.0); 3]);
            entry[*phase].0 = values[var.0] * 1000.0;
        }
        for ((id, phase), var) in &self.gfm_q {
            let entry = dispatch.gfm.entry(id.clone()).or_insert([(0.0, 0.0); 3]);
            entry[*phase].1 = values[var.0] * 1000.0;
        }
        for ((id, phase), var) in &self.gfl_p {
            let entry = dispatch.gfl.entry(id.clone()).or_insert([(0.0, 0.0); 3]);
            entry[*phase].0 = values[var.0] * 1000.0;
        }
        for ((id, phase), var) in &self.gfl_q {
            let entry = dispatch.gfl.entry(id.clone()).or_insert([(0.0, 0.0); 3]);
            entry[*phase].1 = values[var.0] * 1000.0;
        }
        for &k in &self.active_lines {
            let line = &feeder.lines[k];
            let entry = dispatch.flows.entry(line.id.clone()).or_insert([(0.0, 0.0); 3]);
            for phase in line.phases.iter() {
                entry[phase.index()].0 = values[self.flow_p[&(k, phase.index())].0] * 1000.0;
                entry[phase.index()].1 = values[self.flow_q[&(k, phase.index())].0] * 1000.0;
            }
        }
        for ((bus, phase), var) in &self.voltage {
            let entry = dispatch.voltages.entry(bus.clone()).or_insert([0.0; 3]);
            entry[*phase] = values[var.0];
        }
        dispatch
    }

    fn violations_from_elastic(&self) -> Result<(f64, Vec<Violation>), ValidateError> {
        let outcome = elastic_pass_weighted(&self.lp, |row| {
            self.meta[row].as_ref().map(|m| match m.kind {
                ConstraintKind::ActiveBalance | ConstraintKind::ReactiveBalance => 1.0,
                _ => SUPPLY_SIDE_WEIGHT,
            })
        })?;
        let mut violations = Vec::new();
        for &(row, slack) in &outcome.per_constraint {
            let m = self.meta[row].as_ref().expect("only elastic rows get slack");
            violations.push(Violation {
                bus: m.bus.clone(),
                phase: m.phase,
                kind: m.kind,
                magnitude: slack * m.scale,
            });
        }
        violations.sort_by(|a, b| {
            b.magnitude
                .partial_cmp(&a.magnitude)
                .unwrap()
                .then_with(|| a.bus.cmp(&b.bus))
        });
        Ok((outcome.total_slack, violations))
    }
}

/// Check one island-stage against actual demands. Feasible stages return the
/// full dispatch; infeasible stages return elastic violations.
pub fn validate_stage(problem: &StageProblem<'_>) -> Result<StageValidationResult, ValidateError> {
    let model = StageLp::build(problem)?;
    let outcome = solve_lp_raw(&model.lp)?;
    match outcome.status {
        LpStatus::Optimal => Ok(StageValidationResult {
            status: StageStatus::Feasible,
            violations: Vec::new(),
            dispatch: Some(model.dispatch_from(&outcome.values)),
        }),
        LpStatus::Infeasible => {
            let (_, violations) = model.violations_from_elastic()?;
            Ok(StageValidationResult {
                status: StageStatus::Infeasible,
                violations,
                dispatch: None,
            })
        }
        LpStatus::Unbounded => Err(ValidateError::MalformedStage(
            "feasibility problem reported unbounded".into(),
        )),
    }
}

/// Elastic attribution for a stage already known to be infeasible.
pub fn attribute_violations(problem: &StageProblem<'_>) -> Result<Vec<Violation>, ValidateError> {
    let model = StageLp::build(problem)?;
    let (total, violations) = model.violations_from_elastic()?;
    if total <= 1e-7 {
        return Err(ValidateError::UnexpectedlyFeasible);
    }
    Ok(violations)
}
