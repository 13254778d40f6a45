//! Embedded linear-programming toolkit: a bounded-variable two-phase simplex,
//! a best-first branch-and-bound layer for binary MILPs, and an elastic
//! relaxation pass that localizes infeasibility to named constraints.
//!
//! Everything is deterministic: Dantzig pricing with lowest-index
//! tie-breaking, falling back to Bland's rule under degeneracy, and
//! insertion-ordered node selection in the branch-and-bound heap.

mod branch;
mod elastic;
mod simplex;

pub use branch::{solve_milp, BranchStep, MilpOptions};
pub use elastic::{elastic_pass, elastic_pass_weighted, ElasticOutcome};
pub use simplex::solve_lp_raw;

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Constraint satisfaction tolerance for reported solutions.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Optimality (reduced-cost / gap) tolerance.
pub const OPTIMALITY_TOL: f64 = 1e-7;
/// Slack threshold above which an elastic violation is reported.
pub const VIOLATION_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    MalformedProblem(String),
    #[error("simplex lost numeric footing: {0}")]
    Numerics(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl std::fmt::Display for Relation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Relation::Le => f.write_str("le"),
            Relation::Eq => f.write_str("eq"),
            Relation::Ge => f.write_str("ge"),
        }
    }
}

/// Handle to a problem variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// Handle to a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    /// Sparse row, merged so each variable appears once.
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A linear program over bounded continuous variables.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub name: String,
    pub sense: Sense,
    variables: Vec<Variable>,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl LpProblem {
    pub fn new(name: impl Into<String>, sense: Sense) -> Self {
        Self {
            name: name.into(),
            sense,
            variables: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_variable(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.variables.push(Variable { name: name.into(), lower, upper });
        self.objective.push(0.0);
        VarId(self.variables.len() - 1)
    }

    /// Add `coef` to the variable's objective coefficient.
    pub fn add_objective(&mut self, var: VarId, coef: f64) {
        self.objective[var.0] += coef;
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> RowId {
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (var, coef) in terms {
            match merged.iter_mut().find(|(v, _)| *v == var.0) {
                Some((_, c)) => *c += coef,
                None => merged.push((var.0, coef)),
            }
        }
        merged.sort_unstable_by_key(|&(v, _)| v);
        self.constraints.push(Constraint {
            name: name.into(),
            terms: merged,
            relation,
            rhs,
        });
        RowId(self.constraints.len() - 1)
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn variable(&self, var: VarId) -> &Variable {
        &self.variables[var.0]
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub(crate) fn variables_mut(&mut self) -> &mut [Variable] {
        &mut self.variables
    }

    pub fn objective_coefs(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn validate(&self) -> Result<(), LpError> {
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(LpError::MalformedProblem(format!(
                    "variable {} has bounds [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(LpError::MalformedProblem(format!(
                    "constraint {} (row {i}) has rhs {}",
                    c.name, c.rhs
                )));
            }
            for &(var, coef) in &c.terms {
                if var >= self.variables.len() {
                    return Err(LpError::MalformedProblem(format!(
                        "constraint {} references missing variable index {var}",
                        c.name
                    )));
                }
                if !coef.is_finite() {
                    return Err(LpError::MalformedProblem(format!(
                        "constraint {} has coefficient {coef}",
                        c.name
                    )));
                }
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::MalformedProblem("non-finite objective coefficient".into()));
        }
        Ok(())
    }

    /// Evaluate the objective at a point.
    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum()
    }

    /// Largest constraint or bound violation at a point; the independent
    /// feasibility check used by tests and callers.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &x) in self.variables.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(v, coef)| coef * values[v]).sum();
            let gap = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }

    /// Line-oriented text dump for offline cross-checking.
    pub fn dump(&self, binaries: Option<&BTreeSet<VarId>>) -> String {
        let mut out = String::new();
        out.push_str(&format!("lp {}\n", self.name));
        out.push_str(match self.sense {
            Sense::Maximize => "max\n",
            Sense::Minimize => "min\n",
        });
        for v in &self.variables {
            out.push_str(&format!("var {} {} {}\n", v.name, v.lower, v.upper));
        }
        if let Some(bins) = binaries {
            for b in bins {
                out.push_str(&format!("bin {}\n", self.variables[b.0].name));
            }
        }
        for (i, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                out.push_str(&format!("obj {} {}\n", self.variables[i].name, c));
            }
        }
        for c in &self.constraints {
            out.push_str(&format!("row {} {} {}", c.name, c.relation, c.rhs));
            for &(v, coef) in &c.terms {
                out.push_str(&format!(" {}:{}", self.variables[v].name, coef));
            }
            out.push('\n');
        }
        out
    }
}

/// A linear program plus a set of variables restricted to {0, 1}.
#[derive(Debug, Clone)]
pub struct MilpProblem {
    pub lp: LpProblem,
    pub binaries: BTreeSet<VarId>,
}

impl MilpProblem {
    pub fn new(lp: LpProblem) -> Self {
        Self { lp, binaries: BTreeSet::new() }
    }

    pub fn mark_binary(&mut self, var: VarId) {
        self.binaries.insert(var);
    }

    pub fn validate(&self) -> Result<(), LpError> {
        self.lp.validate()?;
        for b in &self.binaries {
            let v = &self.lp.variables[b.0];
            if v.lower < -1e-12 || v.upper > 1.0 + 1e-12 {
                return Err(LpError::MalformedProblem(format!(
                    "binary {} has bounds [{}, {}] outside [0, 1]",
                    v.name, v.lower, v.upper
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver result. `values` indexes variables in declaration order.
#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    /// For infeasible outcomes: constraints the elastic relaxation had to
    /// stretch, with their slack magnitudes. A hint, not a minimal subset.
    pub infeasibility_hint: Vec<(String, f64)>,
    /// Set when branch and bound stopped on its node budget; `values` then
    /// carry the best incumbent found, if any.
    pub node_limit_reached: bool,
    /// Branch decisions in visit order, for determinism checks.
    pub branch_log: Vec<BranchStep>,
}

impl LpOutcome {
    fn new(status: LpStatus) -> Self {
        Self {
            status,
            values: Vec::new(),
            objective: 0.0,
            infeasibility_hint: Vec::new(),
            node_limit_reached: false,
            branch_log: Vec::new(),
        }
    }
}

/// Solve a linear program to an optimal vertex.
///
/// Infeasible problems come back with an elastic-pass hint naming stretched
/// constraints.
pub fn solve_lp(problem: &LpProblem) -> Result<LpOutcome, LpError> {
    problem.validate()?;
    let mut outcome = simplex::solve_lp_raw(problem)?;
    if outcome.status == LpStatus::Infeasible {
        let elastic = elastic_pass(problem, |_| true)?;
        outcome.infeasibility_hint = elastic
            .per_constraint
            .iter()
            .map(|&(row, slack)| (problem.constraints[row].name.clone(), slack))
            .collect();
    }
    Ok(outcome)
}
