//! Bounded-variable two-phase primal simplex with an explicit basis inverse.
//!
//! Standard computational form: minimize `c.x` over `A x = b`, `l <= x <= u`,
//! with one slack appended per row and one artificial per row for phase 1.
//! Pricing is Dantzig with lowest-index tie-breaking; after a long run of
//! degenerate pivots the solver falls back to Bland's rule until it makes
//! progress again, keeping every run deterministic.

use super::{LpError, LpOutcome, LpProblem, LpStatus, Relation, Sense};

const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DEGEN_STEP: f64 = 1e-10;
const DEGEN_STREAK_LIMIT: usize = 200;
const REFRESH_INTERVAL: usize = 256;
const PHASE1_FEAS_TOL: f64 = 1e-7;
/// Harris ratio-test feasibility relaxation.
const RATIO_RELAX: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
enum VStat {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free variable parked at zero.
    Free,
}

struct Tableau {
    /// Row count.
    m: usize,
    /// Sparse columns for every variable (structural, slack, artificial).
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    b: Vec<f64>,
    x: Vec<f64>,
    vstat: Vec<VStat>,
    /// Variable occupying each row's basic slot.
    basis: Vec<usize>,
    /// Row-major m x m basis inverse.
    binv: Vec<f64>,
    /// Rebuild the inverse from scratch this often (0 = never); the slow
    /// safety net for numerically rough problems.
    refactor_interval: usize,
}

impl Tableau {
    fn total_vars(&self) -> usize {
        self.cols.len()
    }

    fn binv_row(&self, r: usize) -> &[f64] {
        &self.binv[r * self.m..(r + 1) * self.m]
    }

    /// `y = c_B^T B^-1`.
    fn btran(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                let row = self.binv_row(r);
                for (yk, rk) in y.iter_mut().zip(row) {
                    *yk += cb * rk;
                }
            }
        }
        y
    }

    /// `w = B^-1 a_j` for a sparse column.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.m];
        for &(row, a) in &self.cols[j] {
            if a != 0.0 {
                for r in 0..self.m {
                    w[r] += self.binv[r * self.m + row] * a;
                }
            }
        }
        w
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.cost[j];
        for &(row, a) in &self.cols[j] {
            d -= y[row] * a;
        }
        d
    }

    /// Recompute basic values from scratch to shed accumulated drift.
    fn refresh_basics(&mut self) {
        let mut rhs = self.b.clone();
        for j in 0..self.total_vars() {
            if matches!(self.vstat[j], VStat::Basic(_)) {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                for &(row, a) in &self.cols[j] {
                    rhs[row] -= a * xj;
                }
            }
        }
        for r in 0..self.m {
            let row = self.binv_row(r);
            let v = row.iter().zip(&rhs).map(|(bi, ri)| bi * ri).sum();
            self.x[self.basis[r]] = v;
        }
    }

    /// Rebuild the basis inverse from the basis columns by Gauss-Jordan
    /// elimination with partial pivoting, then recompute basic values.
    fn refactorize(&mut self) -> Result<(), LpError> {
        let m = self.m;
        if m == 0 {
            return Ok(());
        }
        let mut dense = vec![0.0; m * m];
        for (c, &var) in self.basis.iter().enumerate() {
            for &(row, a) in &self.cols[var] {
                dense[row * m + c] += a;
            }
        }
        let mut inv = vec![0.0; m * m];
        for r in 0..m {
            inv[r * m + r] = 1.0;
        }
        for col in 0..m {
            let pivot_row = (col..m)
                .max_by(|&i, &j| {
                    dense[i * m + col]
                        .abs()
                        .partial_cmp(&dense[j * m + col].abs())
                        .expect("finite")
                })
                .expect("non-empty");
            if dense[pivot_row * m + col].abs() < 1e-12 {
                return Err(LpError::Numerics(format!("singular basis at column {col}")));
            }
            if pivot_row != col {
                for k in 0..m {
                    dense.swap(col * m + k, pivot_row * m + k);
                    inv.swap(col * m + k, pivot_row * m + k);
                }
            }
            let pivot = dense[col * m + col];
            for k in 0..m {
                dense[col * m + k] /= pivot;
                inv[col * m + k] /= pivot;
            }
            for row in 0..m {
                if row != col {
                    let f = dense[row * m + col];
                    if f != 0.0 {
                        for k in 0..m {
                            dense[row * m + k] -= f * dense[col * m + k];
                            inv[row * m + k] -= f * inv[col * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.refresh_basics();
        Ok(())
    }

    /// Run the simplex loop with the current cost vector. Returns `Ok(true)`
    /// on optimality, `Ok(false)` on unboundedness.
    fn optimize(&mut self) -> Result<bool, LpError> {
        let max_iters = 60 * (self.total_vars() + self.m) + 20_000;
        let mut bland = false;
        let mut degen_streak = 0usize;

        for iter in 0..max_iters {
            if self.refactor_interval > 0 && iter > 0 && iter % self.refactor_interval == 0 {
                self.refactorize()?;
            }
            if iter > 0 && iter % REFRESH_INTERVAL == 0 {
                self.refresh_basics();
            }
            let y = self.btran();

            // Pricing: pick the entering variable and its direction.
            let mut entering: Option<(usize, f64, f64)> = None; // (var, |d|, sigma)
            for j in 0..self.total_vars() {
                let stat = self.vstat[j];
                if matches!(stat, VStat::Basic(_)) {
                    continue;
                }
                // Fixed variables never enter.
                if self.upper[j] - self.lower[j] <= 1e-12 && !matches!(stat, VStat::Free) {
                    continue;
                }
                let d = self.reduced_cost(j, &y);
                let sigma = match stat {
                    VStat::AtLower => {
                        if d < -DUAL_TOL {
                            1.0
                        } else {
                            continue;
                        }
                    }
                    VStat::AtUpper => {
                        if d > DUAL_TOL {
                            -1.0
                        } else {
                            continue;
                        }
                    }
                    VStat::Free => {
                        if d < -DUAL_TOL {
                            1.0
                        } else if d > DUAL_TOL {
                            -1.0
                        } else {
                            continue;
                        }
                    }
                    VStat::Basic(_) => unreachable!(),
                };
                if bland {
                    entering = Some((j, d.abs(), sigma));
                    break;
                }
                match entering {
                    Some((_, best, _)) if d.abs() <= best => {}
                    _ => entering = Some((j, d.abs(), sigma)),
                }
            }

            let Some((j, _, sigma)) = entering else {
                self.refresh_basics();
                return Ok(true);
            };

            let w = self.ftran(j);

            // Two-pass ratio test (Harris style). Pass 1 finds the tightest
            // step with a small feasibility relaxation; pass 2 picks, among
            // rows blocking within that relaxed step, the one with the
            // sturdiest pivot. This trades a bounded 1e-9 bound violation
            // for much better numerical behavior on long pivot chains.
            let span = self.upper[j] - self.lower[j];
            let mut t_limit = if span.is_finite() { span } else { f64::INFINITY };
            let block = |tab: &Tableau, r: usize, relax: f64| -> Option<(f64, bool)> {
                let delta = sigma * w[r];
                let bvar = tab.basis[r];
                if delta > PIVOT_TOL {
                    if tab.lower[bvar].is_finite() {
                        Some((((tab.x[bvar] - tab.lower[bvar] + relax) / delta).max(0.0), true))
                    } else {
                        None
                    }
                } else if delta < -PIVOT_TOL {
                    if tab.upper[bvar].is_finite() {
                        Some((((tab.x[bvar] - tab.upper[bvar] - relax) / delta).max(0.0), false))
                    } else {
                        None
                    }
                } else {
                    None
                }
            };
            for r in 0..self.m {
                if let Some((t_relaxed, _)) = block(self, r, RATIO_RELAX) {
                    t_limit = t_limit.min(t_relaxed);
                }
            }

            if !t_limit.is_finite() {
                return Ok(false); // unbounded ray
            }

            let mut leave: Option<(usize, bool, f64)> = None; // (row, at_lower, exact t)
            for r in 0..self.m {
                let Some((t_exact, at_lower)) = block(self, r, 0.0) else { continue };
                if t_exact > t_limit {
                    continue;
                }
                let replace = match leave {
                    None => true,
                    Some((cur, _, cur_t)) => {
                        if bland {
                            // Bland needs the smallest ratio, lowest index.
                            t_exact < cur_t - 1e-15
                                || (t_exact <= cur_t + 1e-15
                                    && self.basis[r] < self.basis[cur])
                        } else {
                            w[r].abs() > w[cur].abs() + 1e-15
                                || (w[r].abs() >= w[cur].abs() - 1e-15
                                    && self.basis[r] < self.basis[cur])
                        }
                    }
                };
                if replace {
                    leave = Some((r, at_lower, t_exact));
                }
            }

            // The row that set t_limit always survives the filter, so a
            // missing leave means the entering variable's own span is the
            // binding step: a bound flip.
            let (leave, t_best) = match leave {
                Some((r, at_lower, t)) => {
                    if span.is_finite() && span < t {
                        (None, span)
                    } else {
                        (Some((r, at_lower)), t)
                    }
                }
                None => {
                    debug_assert!(span.is_finite());
                    (None, span)
                }
            };

            if t_best <= DEGEN_STEP {
                degen_streak += 1;
                if degen_streak > DEGEN_STREAK_LIMIT {
                    bland = true;
                }
            } else {
                degen_streak = 0;
                bland = false;
            }

            // Apply the step.
            for r in 0..self.m {
                if w[r] != 0.0 {
                    let bvar = self.basis[r];
                    self.x[bvar] -= sigma * t_best * w[r];
                }
            }
            self.x[j] += sigma * t_best;


            match leave {
                None => {
                    // Bound flip: entering variable moved to its other bound.
                    self.vstat[j] = if sigma > 0.0 { VStat::AtUpper } else { VStat::AtLower };
                }
                Some((r, at_lower)) => {
                    let leaving = self.basis[r];
                    let pivot = w[r];
                    if pivot.abs() < PIVOT_TOL {
                        return Err(LpError::Numerics(format!(
                            "pivot {pivot} too small at row {r}"
                        )));
                    }
                    self.vstat[leaving] = if at_lower {
                        self.x[leaving] = self.lower[leaving];
                        VStat::AtLower
                    } else {
                        self.x[leaving] = self.upper[leaving];
                        VStat::AtUpper
                    };
                    self.basis[r] = j;
                    self.vstat[j] = VStat::Basic(r);

                    // binv <- E * binv with the eta column derived from w.
                    let (head, tail) = self.binv.split_at_mut(r * self.m);
                    let (pivot_row, tail) = tail.split_at_mut(self.m);
                    for v in pivot_row.iter_mut() {
                        *v /= pivot;
                    }
                    for (k, chunk) in head.chunks_mut(self.m).enumerate() {
                        let f = w[k];
                        if f != 0.0 {
                            for (c, p) in chunk.iter_mut().zip(pivot_row.iter()) {
                                *c -= f * p;
                            }
                        }
                    }
                    for (k0, chunk) in tail.chunks_mut(self.m).enumerate() {
                        let f = w[r + 1 + k0];
                        if f != 0.0 {
                            for (c, p) in chunk.iter_mut().zip(pivot_row.iter()) {
                                *c -= f * p;
                            }
                        }
                    }
                }
            }
        }
        Err(LpError::Numerics("simplex iteration limit reached".into()))
    }
}

/// Solve without the automatic infeasibility hint (the public `solve_lp`
/// wrapper adds it). A numerically clean fast pass is tried first; on
/// trouble the solve reruns with periodic refactorization of the basis
/// inverse.
pub fn solve_lp_raw(problem: &LpProblem) -> Result<LpOutcome, LpError> {
    match attempt(problem, 0) {
        Ok(outcome) => Ok(outcome),
        Err(LpError::Numerics(_)) => attempt(problem, 192),
        Err(other) => Err(other),
    }
}

fn attempt(problem: &LpProblem, refactor_interval: usize) -> Result<LpOutcome, LpError> {
    let n = problem.num_variables();
    let m = problem.num_constraints();

    // Internal sense is minimize.
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut b = vec![0.0; m];
    let mut lower: Vec<f64> = problem.variables().iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = problem.variables().iter().map(|v| v.upper).collect();
    for (i, c) in problem.constraints().iter().enumerate() {
        b[i] = c.rhs;
        for &(v, coef) in &c.terms {
            cols[v].push((i, coef));
        }
    }
    // Slacks.
    for (i, c) in problem.constraints().iter().enumerate() {
        cols.push(vec![(i, 1.0)]);
        match c.relation {
            Relation::Le => {
                lower.push(0.0);
                upper.push(f64::INFINITY);
            }
            Relation::Ge => {
                lower.push(f64::NEG_INFINITY);
                upper.push(0.0);
            }
            Relation::Eq => {
                lower.push(0.0);
                upper.push(0.0);
            }
        }
    }

    // Nonbasic starting point.
    let mut x = vec![0.0; n + m];
    let mut vstat = vec![VStat::Free; n + m];
    for j in 0..n + m {
        if lower[j].is_finite() {
            x[j] = lower[j];
            vstat[j] = VStat::AtLower;
        } else if upper[j].is_finite() {
            x[j] = upper[j];
            vstat[j] = VStat::AtUpper;
        } else {
            x[j] = 0.0;
            vstat[j] = VStat::Free;
        }
    }

    // Artificial variables absorb the initial residual.
    let mut residual = b.clone();
    for j in 0..n + m {
        if x[j] != 0.0 {
            for &(row, a) in &cols[j] {
                residual[row] -= a * x[j];
            }
        }
    }
    let mut basis = Vec::with_capacity(m);
    let mut cost = vec![0.0; n + m];
    for (i, &r) in residual.iter().enumerate() {
        cols.push(vec![(i, if r >= 0.0 { 1.0 } else { -1.0 })]);
        lower.push(0.0);
        upper.push(f64::INFINITY);
        x.push(r.abs());
        vstat.push(VStat::Basic(i));
        cost.push(1.0);
        basis.push(n + m + i);
    }

    // B^-1 of the all-artificial basis: each column is +-e_r to match the
    // artificial's coefficient sign.
    let mut binv = vec![0.0; m * m];
    for (r, &res) in residual.iter().enumerate() {
        binv[r * m + r] = if res >= 0.0 { 1.0 } else { -1.0 };
    }

    let mut tab =
        Tableau { m, cols, lower, upper, cost, b, x, vstat, basis, binv, refactor_interval };

    // Phase 1: minimize total artificial value.
    if m > 0 {
        if !tab.optimize()? {
            return Err(LpError::Numerics("phase 1 reported unbounded".into()));
        }
        let infeasibility: f64 = (n + m..tab.total_vars()).map(|j| tab.x[j].abs()).sum();
        if infeasibility > PHASE1_FEAS_TOL {
            return Ok(LpOutcome::new(LpStatus::Infeasible));
        }
        // Pin artificials at zero for phase 2.
        for j in n + m..tab.total_vars() {
            tab.lower[j] = 0.0;
            tab.upper[j] = 0.0;
            if !matches!(tab.vstat[j], VStat::Basic(_)) {
                tab.x[j] = 0.0;
            }
        }
    }

    // Phase 2: real objective.
    for j in 0..n {
        tab.cost[j] = sign * problem.objective_coefs()[j];
    }
    for j in n..tab.total_vars() {
        tab.cost[j] = 0.0;
    }
    let optimal = tab.optimize()?;
    if !optimal {
        return Ok(LpOutcome::new(LpStatus::Unbounded));
    }

    let values: Vec<f64> = tab.x[..n].to_vec();
    let worst = problem.max_violation(&values);
    if worst > 1e-6 {
        return Err(LpError::Numerics(format!(
            "solution violates constraints by {worst}"
        )));
    }
    let mut outcome = LpOutcome::new(LpStatus::Optimal);
    outcome.objective = problem.objective_value(&values);
    outcome.values = values;
    Ok(outcome)
}
