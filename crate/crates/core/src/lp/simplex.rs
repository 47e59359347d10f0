//! Dense tableau simplex, two phases, Bland's rule throughout.
use super::{
    Sense, SolveOutcome, SolveStatus, SolverError, StandardLP, FEASIBILITY_TOL, PIVOT_TOL,
};

/// Entries at or below this are treated as zero in ratio tests and pricing.
const ZERO_TOL: f64 = 1e-9;

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    /// `rows x width`, row-major.
    a: Vec<f64>,
    rhs: Vec<f64>,
    width: usize,
    basis: Vec<usize>,
    kinds: Vec<ColumnKind>,
    iterations: usize,
    max_iterations: usize,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.width + j]
    }

    fn pivot(&mut self, row: usize, col: usize) -> Result<(), SolverError> {
        let p = self.at(row, col);
        if !p.is_finite() || p.abs() < PIVOT_TOL {
            return Err(SolverError::NumericalBreakdown(format!(
                "pivot element {p:e} at row {row}, column {col}"
            )));
        }
        self.iterations += 1;
        if self.iterations > self.max_iterations {
            return Err(SolverError::IterationLimit(self.max_iterations));
        }
        let w = self.width;
        let inv = 1.0 / p;
        for v in &mut self.a[row * w..(row + 1) * w] {
            *v *= inv;
        }
        self.rhs[row] *= inv;
        let pivot_row: Vec<f64> = self.a[row * w..(row + 1) * w].to_vec();
        let pivot_rhs = self.rhs[row];
        for i in 0..self.rows() {
            if i == row {
                continue;
            }
            let factor = self.a[i * w + col];
            if factor == 0.0 {
                continue;
            }
            let target = &mut self.a[i * w..(i + 1) * w];
            for (t, &pv) in target.iter_mut().zip(&pivot_row) {
                *t -= factor * pv;
            }
            target[col] = 0.0;
            self.rhs[i] -= factor * pivot_rhs;
        }
        self.basis[row] = col;
        if self.rhs.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NumericalBreakdown(
                "non-finite right-hand side".into(),
            ));
        }
        Ok(())
    }

    /// Reduced costs `c - c_B B^-1 A` for the current basis.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb == 0.0 {
                continue;
            }
            for (j, dj) in d.iter_mut().enumerate() {
                *dj -= cb * self.at(i, j);
            }
        }
        d
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .zip(&self.rhs)
            .map(|(&b, &r)| cost[b] * r)
            .sum()
    }

    /// Runs simplex iterations on `cost` until optimal or unbounded.
    /// Returns `false` on unboundedness.
    fn optimize(&mut self, cost: &[f64], allow_artificial: bool) -> Result<bool, SolverError> {
        loop {
            let d = self.reduced_costs(cost);
            // Bland: lowest-index improving column enters
            let entering = (0..self.width).find(|&j| {
                d[j] < -ZERO_TOL
                    && (allow_artificial || self.kinds[j] != ColumnKind::Artificial)
                    && !self.basis.contains(&j)
            });
            let Some(col) = entering else {
                return Ok(true);
            };
            // Bland: among minimum ratios, the lowest-index basic variable leaves
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows() {
                let a = self.at(i, col);
                if a <= ZERO_TOL {
                    continue;
                }
                let ratio = self.rhs[i].max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((best, best_ratio)) => {
                        let tie = (ratio - best_ratio).abs() <= 1e-12 * best_ratio.abs().max(1.0);
                        if (ratio < best_ratio && !tie) || (tie && self.basis[i] < self.basis[best])
                        {
                            Some((i, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return Ok(false);
            };
            self.pivot(row, col)?;
        }
    }

    fn remove_row(&mut self, row: usize) {
        let w = self.width;
        self.a.drain(row * w..(row + 1) * w);
        self.rhs.remove(row);
        self.basis.remove(row);
    }
}

pub fn solve(lp: &StandardLP) -> Result<SolveOutcome, SolverError> {
    lp.validate()?;
    let n = lp.num_columns();
    let m = lp.rows.len();

    // Orient every row to a non-negative rhs, then lay out auxiliary columns.
    let mut senses = Vec::with_capacity(m);
    let mut signs = Vec::with_capacity(m);
    for row in &lp.rows {
        let flip = row.rhs < 0.0;
        signs.push(if flip { -1.0 } else { 1.0 });
        senses.push(match (row.sense, flip) {
            (Sense::Le, true) => Sense::Ge,
            (Sense::Ge, true) => Sense::Le,
            (s, _) => s,
        });
    }
    let mut kinds = vec![ColumnKind::Structural; n];
    let mut aux = Vec::with_capacity(m); // (slack column, artificial column)
    for sense in &senses {
        let slack = match sense {
            Sense::Le | Sense::Ge => {
                kinds.push(ColumnKind::Slack);
                Some(kinds.len() - 1)
            }
            Sense::Eq => None,
        };
        let artificial = match sense {
            Sense::Le => None,
            Sense::Ge | Sense::Eq => {
                kinds.push(ColumnKind::Artificial);
                Some(kinds.len() - 1)
            }
        };
        aux.push((slack, artificial));
    }
    let width = kinds.len();
    let mut a = vec![0.0; m * width];
    let mut rhs = vec![0.0; m];
    let mut basis = Vec::with_capacity(m);
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, v) in &row.coefficients {
            a[i * width + j] += signs[i] * v;
        }
        rhs[i] = signs[i] * row.rhs;
        let (slack, artificial) = aux[i];
        if let Some(s) = slack {
            a[i * width + s] = if senses[i] == Sense::Le { 1.0 } else { -1.0 };
        }
        if let Some(r) = artificial {
            a[i * width + r] = 1.0;
        }
        basis.push(artificial.or(slack).expect("every row has a basic column"));
    }

    let mut t = Tableau {
        a,
        rhs,
        width,
        basis,
        kinds,
        iterations: 0,
        max_iterations: 50_000 + 200 * (m + width),
    };

    // Phase one.
    let has_artificial = t.kinds.contains(&ColumnKind::Artificial);
    if has_artificial {
        let phase_one: Vec<f64> = t
            .kinds
            .iter()
            .map(|k| {
                if *k == ColumnKind::Artificial {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        t.optimize(&phase_one, true)?;
        let scale = lp.rows.iter().map(|r| r.rhs.abs()).fold(1.0, f64::max);
        if t.objective(&phase_one) > FEASIBILITY_TOL * scale {
            return Ok(SolveOutcome {
                status: SolveStatus::Infeasible,
                primal: Vec::new(),
                objective: f64::NAN,
                iterations: t.iterations,
                reduced_costs: Vec::new(),
                basic: Vec::new(),
            });
        }
        // Drive remaining artificials out of the basis, dropping redundant rows.
        let mut i = 0;
        while i < t.rows() {
            if t.kinds[t.basis[i]] != ColumnKind::Artificial {
                i += 1;
                continue;
            }
            let candidate = (0..width)
                .filter(|&j| t.kinds[j] != ColumnKind::Artificial)
                .map(|j| (j, t.at(i, j).abs()))
                .filter(|&(_, v)| v > ZERO_TOL)
                .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)));
            match candidate {
                Some((j, _)) => {
                    t.pivot(i, j)?;
                    i += 1;
                }
                None => t.remove_row(i),
            }
        }
    }

    // Phase two.
    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(&lp.objective);
    if !t.optimize(&cost, false)? {
        return Ok(SolveOutcome {
            status: SolveStatus::Unbounded,
            primal: Vec::new(),
            objective: f64::NEG_INFINITY,
            iterations: t.iterations,
            reduced_costs: Vec::new(),
            basic: Vec::new(),
        });
    }

    let mut primal = vec![0.0; n];
    let mut basic = vec![false; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            primal[b] = t.rhs[i].max(0.0);
            basic[b] = true;
        }
    }
    let d = t.reduced_costs(&cost);
    Ok(SolveOutcome {
        status: SolveStatus::Optimal,
        objective: lp.objective_value(&primal),
        primal,
        iterations: t.iterations,
        reduced_costs: d[..n].to_vec(),
        basic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{verify, Row};

    fn lp(objective: Vec<f64>, rows: Vec<(Vec<f64>, Sense, f64)>) -> StandardLP {
        StandardLP {
            column_names: (0..objective.len()).map(|j| format!("x{j}")).collect(),
            objective,
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, (coefs, sense, rhs))| Row {
                    name: format!("r{i}"),
                    coefficients: coefs
                        .into_iter()
                        .enumerate()
                        .filter(|(_, v)| *v != 0.0)
                        .collect(),
                    sense,
                    rhs,
                })
                .collect(),
        }
    }

    #[test]
    fn single_lower_bound() {
        let out = solve(&lp(vec![1.0], vec![(vec![1.0], Sense::Ge, 3.0)])).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.primal[0] - 3.0).abs() < 1e-12);
        assert!((out.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn textbook_max_problem() {
        // max 3x + 5y; x <= 4; 2y <= 12; 3x + 2y <= 18  -> (2, 6), 36
        let p = lp(
            vec![-3.0, -5.0],
            vec![
                (vec![1.0, 0.0], Sense::Le, 4.0),
                (vec![0.0, 2.0], Sense::Le, 12.0),
                (vec![3.0, 2.0], Sense::Le, 18.0),
            ],
        );
        let out = solve(&p).unwrap();
        assert!((out.objective + 36.0).abs() < 1e-9);
        assert!((out.primal[0] - 2.0).abs() < 1e-9 && (out.primal[1] - 6.0).abs() < 1e-9);
        assert!(verify(&p, &out).is_ok());
    }

    #[test]
    fn infeasible_and_unbounded() {
        let inf = lp(
            vec![1.0],
            vec![(vec![1.0], Sense::Le, 1.0), (vec![1.0], Sense::Ge, 2.0)],
        );
        assert_eq!(solve(&inf).unwrap().status, SolveStatus::Infeasible);
        let unb = lp(vec![-1.0, 0.0], vec![(vec![1.0, -1.0], Sense::Le, 1.0)]);
        assert_eq!(solve(&unb).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn negative_rhs_and_equalities() {
        // x - y = -2  ->  y = x + 2; min x + y with x >= 1 -> x = 1, y = 3
        let p = lp(
            vec![1.0, 1.0],
            vec![
                (vec![1.0, -1.0], Sense::Eq, -2.0),
                (vec![1.0, 0.0], Sense::Ge, 1.0),
            ],
        );
        let out = solve(&p).unwrap();
        assert!((out.objective - 4.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let p = lp(
            vec![1.0, 2.0],
            vec![
                (vec![1.0, 1.0], Sense::Eq, 2.0),
                (vec![2.0, 2.0], Sense::Eq, 4.0),
            ],
        );
        let out = solve(&p).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective - 2.0).abs() < 1e-9);
        assert!(verify(&p, &out).is_ok());
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let p = lp(
            vec![2.0, 1.0],
            vec![
                (vec![1.0, 1.0], Sense::Ge, 0.0),
                (vec![1.0, -1.0], Sense::Le, 0.0),
            ],
        );
        let out = solve(&p).unwrap();
        assert_eq!(out.objective, 0.0);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under Dantzig's rule without anti-cycling.
        let p = lp(
            vec![-0.75, 150.0, -0.02, 6.0],
            vec![
                (vec![0.25, -60.0, -0.04, 9.0], Sense::Le, 0.0),
                (vec![0.5, -90.0, -0.02, 3.0], Sense::Le, 0.0),
                (vec![0.0, 0.0, 1.0, 0.0], Sense::Le, 1.0),
            ],
        );
        let out = solve(&p).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective + 0.05).abs() < 1e-9);
    }

    #[test]
    fn deterministic_and_scale_invariant() {
        let p = lp(
            vec![1.0, 3.0, 2.0],
            vec![
                (vec![1.0, 1.0, 1.0], Sense::Ge, 4.0),
                (vec![1.0, 0.0, -1.0], Sense::Le, 1.0),
                (vec![0.0, 1.0, 1.0], Sense::Ge, 2.0),
            ],
        );
        let a = solve(&p).unwrap();
        let b = solve(&p).unwrap();
        assert_eq!(a, b);
        let mut scaled = p.clone();
        scaled.objective.iter_mut().for_each(|c| *c *= 7.5);
        let s = solve(&scaled).unwrap();
        assert!((s.objective - 7.5 * a.objective).abs() < 1e-9);
        assert_eq!(s.primal, a.primal);
    }
}
