//! Best-first branch and bound over binary variables.

use super::{elastic_pass, solve_lp_raw, LpError, LpOutcome, LpProblem, LpStatus, MilpProblem, Sense};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Integrality tolerance: a binary within this distance of 0/1 counts as set.
const INT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct MilpOptions {
    /// Optimality gap at which search stops and declares the incumbent
    /// optimal: `|bound - incumbent| <= gap_tol * (1 + |incumbent|)`.
    pub gap_tol: f64,
    /// Maximum explored nodes before returning the best incumbent with
    /// `node_limit_reached` set.
    pub node_limit: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-6, node_limit: 100_000 }
    }
}

/// One branching decision, recorded for determinism checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchStep {
    pub node: usize,
    pub variable: String,
    pub fractional_value: f64,
}

struct Node {
    id: usize,
    /// Heap key: relaxation bound oriented so the best node pops first.
    key: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    values: Vec<f64>,
    objective: f64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap pops the max; larger key = better bound. Ties pop the
        // older node first.
        self.key
            .partial_cmp(&other.key)
            .expect("finite bounds")
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn solve_with_bounds(
    problem: &LpProblem,
    lower: &[f64],
    upper: &[f64],
) -> Result<LpOutcome, LpError> {
    let mut scratch = problem.clone();
    for (i, v) in scratch_variables(&mut scratch).iter_mut().enumerate() {
        v.lower = lower[i];
        v.upper = upper[i];
    }
    solve_lp_raw(&scratch)
}

// Bounds are the only thing branch and bound rewrites.
fn scratch_variables(problem: &mut LpProblem) -> &mut [super::Variable] {
    // LpProblem keeps variables private; this module lives inside the crate
    // and pokes them through a crate-visible accessor.
    problem.variables_mut()
}

/// Solve a binary MILP by best-first branch and bound on LP relaxations.
/// Branching picks the most fractional binary (ties toward the lowest
/// variable index); children fix it to 0 then 1.
pub fn solve_milp(problem: &MilpProblem, options: MilpOptions) -> Result<LpOutcome, LpError> {
    problem.validate()?;
    let lp = &problem.lp;
    let maximize = lp.sense == Sense::Maximize;
    let orient = if maximize { 1.0 } else { -1.0 };
    let binaries: Vec<usize> = problem.binaries.iter().map(|b| b.0).collect();

    let root_lower: Vec<f64> = lp.variables().iter().map(|v| v.lower).collect();
    let root_upper: Vec<f64> = lp.variables().iter().map(|v| v.upper).collect();

    let root = solve_lp_raw(lp)?;
    match root.status {
        LpStatus::Infeasible => {
            let mut outcome = root;
            let elastic = elastic_pass(lp, |_| true)?;
            outcome.infeasibility_hint = elastic
                .per_constraint
                .iter()
                .map(|&(row, slack)| (lp.constraints()[row].name.clone(), slack))
                .collect();
            return Ok(outcome);
        }
        LpStatus::Unbounded => return Ok(root),
        LpStatus::Optimal => {}
    }

    let mut heap = BinaryHeap::new();
    let mut next_id = 0usize;
    let push = |heap: &mut BinaryHeap<Node>,
                    next_id: &mut usize,
                    lower: Vec<f64>,
                    upper: Vec<f64>,
                    outcome: &LpOutcome| {
        heap.push(Node {
            id: *next_id,
            key: orient * outcome.objective,
            lower,
            upper,
            values: outcome.values.clone(),
            objective: outcome.objective,
        });
        *next_id += 1;
    };
    push(&mut heap, &mut next_id, root_lower, root_upper, &root);

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut branch_log = Vec::new();
    let mut explored = 0usize;
    let mut node_limit_hit = false;

    let improves = |objective: f64, incumbent: &Option<(f64, Vec<f64>)>| match incumbent {
        None => true,
        Some((best, _)) => {
            if maximize {
                objective > *best + 1e-12
            } else {
                objective < *best - 1e-12
            }
        }
    };

    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            let gap = (node.key * orient - best) * orient; // bound - best, oriented
            if gap <= options.gap_tol * (1.0 + best.abs()) {
                break; // bound proves the incumbent within the gap
            }
        }
        if explored >= options.node_limit {
            node_limit_hit = true;
            break;
        }
        explored += 1;

        // Most fractional binary, ties to the lowest index.
        let mut branch_var: Option<(usize, f64)> = None;
        for &v in &binaries {
            let x = node.values[v];
            let frac = x.min(1.0 - x).max(0.0);
            if frac > INT_TOL {
                match branch_var {
                    Some((_, best_frac)) if frac <= best_frac + 1e-15 => {}
                    _ => branch_var = Some((v, frac)),
                }
            }
        }

        let Some((v, _)) = branch_var else {
            if improves(node.objective, &incumbent) {
                incumbent = Some((node.objective, node.values));
            }
            continue;
        };

        branch_log.push(BranchStep {
            node: node.id,
            variable: lp.variable(super::VarId(v)).name.clone(),
            fractional_value: node.values[v],
        });

        for fix_to_one in [false, true] {
            let mut lower = node.lower.clone();
            let mut upper = node.upper.clone();
            if fix_to_one {
                lower[v] = 1.0;
            } else {
                upper[v] = 0.0;
            }
            let child = solve_with_bounds(lp, &lower, &upper)?;
            match child.status {
                LpStatus::Infeasible => continue,
                LpStatus::Unbounded => {
                    return Err(LpError::Numerics(
                        "child relaxation unbounded under a bounded root".into(),
                    ))
                }
                LpStatus::Optimal => {}
            }
            // Discard children that cannot beat the incumbent.
            if !improves(child.objective, &incumbent) {
                continue;
            }
            push(&mut heap, &mut next_id, lower, upper, &child);
        }
    }

    let mut outcome = match incumbent {
        Some((objective, values)) => {
            let mut o = LpOutcome::new(LpStatus::Optimal);
            o.objective = objective;
            o.values = values;
            o
        }
        // Root was feasible but every integer leaf pruned away.
        None => LpOutcome::new(LpStatus::Infeasible),
    };
    outcome.node_limit_reached = node_limit_hit;
    outcome.branch_log = branch_log;
    Ok(outcome)
}
