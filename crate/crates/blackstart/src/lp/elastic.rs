//! Elastic relaxation: add non-negative stretch variables to selected
//! constraint rows and minimize total stretch. Zero total stretch means the
//! selected rows were satisfiable; positive slack localizes the conflict.

use super::{solve_lp_raw, LpError, LpProblem, LpStatus, Relation, Sense, VIOLATION_TOL};

#[derive(Debug, Clone)]
pub struct ElasticOutcome {
    /// Sum of all stretch variables at the optimum.
    pub total_slack: f64,
    /// `(constraint row index, slack)` for rows stretched beyond
    /// [`VIOLATION_TOL`], in row order.
    pub per_constraint: Vec<(usize, f64)>,
    /// Values of the original variables at the minimal-stretch point.
    pub values: Vec<f64>,
}

/// Stretch the rows selected by `elastic_rows` and minimize total stretch.
/// Rows left unselected stay hard.
pub fn elastic_pass(
    problem: &LpProblem,
    elastic_rows: impl Fn(usize) -> bool,
) -> Result<ElasticOutcome, LpError> {
    elastic_pass_weighted(problem, |row| if elastic_rows(row) { Some(1.0) } else { None })
}

/// Weighted elastic pass: `row_weight` returns the objective weight of a
/// row's stretch variable, or `None` to keep the row hard. Weights steer
/// which of several equivalent relaxations gets the slack; reported slack
/// magnitudes are unweighted.
pub fn elastic_pass_weighted(
    problem: &LpProblem,
    row_weight: impl Fn(usize) -> Option<f64>,
) -> Result<ElasticOutcome, LpError> {
    let n = problem.num_variables();
    let mut relaxed = LpProblem::new(format!("{}::elastic", problem.name), Sense::Minimize);
    for v in problem.variables() {
        relaxed.add_variable(v.name.clone(), v.lower, v.upper);
    }
    // Stretch columns per selected row, recorded as (row, var).
    let mut stretch: Vec<(usize, super::VarId, Option<super::VarId>)> = Vec::new();
    for (i, c) in problem.constraints().iter().enumerate() {
        let mut terms: Vec<(super::VarId, f64)> =
            c.terms.iter().map(|&(v, coef)| (super::VarId(v), coef)).collect();
        if let Some(weight) = row_weight(i) {
            match c.relation {
                Relation::Le => {
                    let e = relaxed.add_variable(format!("__e{i}"), 0.0, f64::INFINITY);
                    relaxed.add_objective(e, weight);
                    terms.push((e, -1.0));
                    stretch.push((i, e, None));
                }
                Relation::Ge => {
                    let e = relaxed.add_variable(format!("__e{i}"), 0.0, f64::INFINITY);
                    relaxed.add_objective(e, weight);
                    terms.push((e, 1.0));
                    stretch.push((i, e, None));
                }
                Relation::Eq => {
                    let ep = relaxed.add_variable(format!("__e{i}p"), 0.0, f64::INFINITY);
                    let em = relaxed.add_variable(format!("__e{i}m"), 0.0, f64::INFINITY);
                    relaxed.add_objective(ep, weight);
                    relaxed.add_objective(em, weight);
                    terms.push((ep, 1.0));
                    terms.push((em, -1.0));
                    stretch.push((i, ep, Some(em)));
                }
            }
        }
        relaxed.add_constraint(c.name.clone(), terms, c.relation, c.rhs);
    }

    let outcome = solve_lp_raw(&relaxed)?;
    if outcome.status != LpStatus::Optimal {
        return Err(LpError::Numerics(format!(
            "elastic relaxation ended {:?}; hard rows or bounds conflict",
            outcome.status
        )));
    }

    let mut per_constraint = Vec::new();
    let mut total_slack = 0.0;
    for &(row, e, em) in &stretch {
        let mut slack = outcome.values[e.0];
        if let Some(em) = em {
            slack += outcome.values[em.0];
        }
        total_slack += slack;
        if slack > VIOLATION_TOL {
            per_constraint.push((row, slack));
        }
    }
    Ok(ElasticOutcome {
        total_slack,
        per_constraint,
        values: outcome.values[..n].to_vec(),
    })
}
