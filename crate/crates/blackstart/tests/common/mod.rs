//! Independent oracles shared by the acceptance criteria: brute-force vertex
//! enumeration for linear programs, exhaustive binary enumeration for small
//! MILPs, and an exact fixed-point three-phase power flow.

#![allow(dead_code)]

use blackstart::lp::{LpProblem, MilpProblem, Relation, Sense, VarId};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Gaussian elimination with partial pivoting.
pub fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot_row =
            (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[pivot_row][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in 0..n {
            if row != col {
                let f = m[row][col] / m[col][col];
                if f != 0.0 {
                    for k in col..n {
                        m[row][k] -= f * m[col][k];
                    }
                    rhs[row] -= f * rhs[col];
                }
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

/// Brute-force LP oracle: enumerate candidate vertices as intersections of
/// `n` active hyperplanes (constraint boundaries plus variable bounds) and
/// return the best feasible objective. `None` means infeasible. Assumes
/// box-bounded variables.
pub fn vertex_enumeration(problem: &LpProblem) -> Option<f64> {
    let n = problem.num_variables();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in problem.constraints() {
        let mut row = vec![0.0; n];
        for &(v, coef) in &c.terms {
            row[v] += coef;
        }
        planes.push((row, c.rhs));
    }
    for (i, v) in problem.variables().iter().enumerate() {
        let mut unit = vec![0.0; n];
        unit[i] = 1.0;
        planes.push((unit.clone(), v.lower));
        planes.push((unit, v.upper));
    }

    fn recurse(
        planes: &[(Vec<f64>, f64)],
        problem: &LpProblem,
        choice: &mut Vec<usize>,
        depth: usize,
        start: usize,
        best: &mut Option<f64>,
    ) {
        let n = problem.num_variables();
        if depth == n {
            let a: Vec<Vec<f64>> = choice.iter().map(|&i| planes[i].0.clone()).collect();
            let b: Vec<f64> = choice.iter().map(|&i| planes[i].1).collect();
            if let Some(point) = solve_square(&a, &b) {
                if problem.max_violation(&point) <= 1e-7 {
                    let obj = problem.objective_value(&point);
                    let better = match (problem.sense, *best) {
                        (_, None) => true,
                        (Sense::Maximize, Some(cur)) => obj > cur,
                        (Sense::Minimize, Some(cur)) => obj < cur,
                    };
                    if better {
                        *best = Some(obj);
                    }
                }
            }
            return;
        }
        for i in start..planes.len() {
            choice[depth] = i;
            recurse(planes, problem, choice, depth + 1, i + 1, best);
        }
    }
    let mut best = None;
    let mut choice = vec![0usize; n];
    recurse(&planes, problem, &mut choice, 0, 0, &mut best);
    best
}

/// Random box-bounded LP in 5 variables and 8 rows, mixed relations.
pub fn random_boxed_lp(seed: u64, vars: usize, rows: usize) -> LpProblem {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut lp = LpProblem::new(format!("acc_random{seed}"), Sense::Maximize);
    let ids: Vec<VarId> = (0..vars)
        .map(|i| {
            let hi = rng.gen_range(0.5..3.0);
            lp.add_variable(format!("x{i}"), 0.0, hi)
        })
        .collect();
    for &id in &ids {
        lp.add_objective(id, rng.gen_range(-1.0..1.0));
    }
    for r in 0..rows {
        let mut terms: Vec<(VarId, f64)> = Vec::new();
        for &id in &ids {
            if rng.gen_bool(0.8) {
                terms.push((id, rng.gen_range(-1.0..1.0)));
            }
        }
        let relation = match rng.gen_range(0..10) {
            0..=5 => Relation::Le,
            6..=7 => Relation::Ge,
            _ => Relation::Eq,
        };
        let rhs = match relation {
            Relation::Eq => {
                let point: Vec<f64> = (0..vars).map(|_| rng.gen_range(0.0..0.5)).collect();
                terms.iter().map(|&(v, c)| c * point[v.0]).sum()
            }
            Relation::Le => rng.gen_range(-0.5..2.5),
            Relation::Ge => rng.gen_range(-1.5..1.0),
        };
        lp.add_constraint(format!("r{r}"), terms, relation, rhs);
    }
    lp
}

/// Random all-binary knapsack-with-a-twist instance.
pub fn random_knapsack(seed: u64, items: usize) -> MilpProblem {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut lp = LpProblem::new(format!("acc_knapsack{seed}"), Sense::Maximize);
    let ids: Vec<VarId> =
        (0..items).map(|i| lp.add_variable(format!("b{i}"), 0.0, 1.0)).collect();
    let weights: Vec<f64> = (0..items).map(|_| rng.gen_range(0.2..1.0)).collect();
    for &id in &ids {
        lp.add_objective(id, rng.gen_range(0.1..1.0));
    }
    let capacity = weights.iter().sum::<f64>() * rng.gen_range(0.3..0.7);
    lp.add_constraint(
        "capacity",
        ids.iter().enumerate().map(|(i, &id)| (id, weights[i])).collect(),
        Relation::Le,
        capacity,
    );
    lp.add_constraint(
        "pairing",
        ids.iter().step_by(2).map(|&id| (id, 1.0)).collect(),
        Relation::Le,
        (items / 3).max(1) as f64,
    );
    let mut milp = MilpProblem::new(lp);
    for id in ids {
        milp.mark_binary(id);
    }
    milp
}

/// Exhaustive oracle over every assignment of an all-binary problem.
pub fn exhaustive_binary_optimum(milp: &MilpProblem) -> Option<f64> {
    let items = milp.binaries.len();
    assert_eq!(items, milp.lp.num_variables());
    let mut best: Option<f64> = None;
    for mask in 0..(1u32 << items) {
        let values: Vec<f64> =
            (0..items).map(|i| if mask & (1 << i) != 0 { 1.0 } else { 0.0 }).collect();
        if milp.lp.max_violation(&values) <= 1e-9 {
            let obj = milp.lp.objective_value(&values);
            let better = match (milp.lp.sense, best) {
                (_, None) => true,
                (Sense::Maximize, Some(cur)) => obj > cur,
                (Sense::Minimize, Some(cur)) => obj < cur,
            };
            if better {
                best = Some(obj);
            }
        }
    }
    best
}

/// Minimal complex arithmetic for the exact power-flow oracle.
#[derive(Clone, Copy, Debug)]
pub struct C {
    pub re: f64,
    pub im: f64,
}

impl C {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn mul(self, o: C) -> C {
        C::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    pub fn add(self, o: C) -> C {
        C::new(self.re + o.re, self.im + o.im)
    }

    pub fn sub(self, o: C) -> C {
        C::new(self.re - o.re, self.im - o.im)
    }

    pub fn conj(self) -> C {
        C::new(self.re, -self.im)
    }

    pub fn div(self, o: C) -> C {
        let d = o.re * o.re + o.im * o.im;
        C::new((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)
    }

    pub fn abs2(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// Exact receiving-end squared voltage magnitudes for one three-phase line
/// feeding constant-power wye loads, by fixed-point iteration in per-unit.
pub fn exact_receiving_u2(z_pu: [[C; 3]; 3], s_pu: [C; 3]) -> [f64; 3] {
    let h = 0.866_025_403_784_438_6;
    let source = [C::new(1.0, 0.0), C::new(-0.5, -h), C::new(-0.5, h)];
    let mut v = source;
    for _ in 0..200 {
        let current: Vec<C> = (0..3).map(|p| s_pu[p].div(v[p]).conj()).collect();
        let mut next = [C::new(0.0, 0.0); 3];
        for p in 0..3 {
            let mut drop = C::new(0.0, 0.0);
            for (q, &iq) in current.iter().enumerate() {
                drop = drop.add(z_pu[p][q].mul(iq));
            }
            next[p] = source[p].sub(drop);
        }
        v = next;
    }
    [v[0].abs2(), v[1].abs2(), v[2].abs2()]
}
