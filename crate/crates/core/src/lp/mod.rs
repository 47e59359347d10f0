//! Minimal LP model, a dense two-phase simplex and an independent checker.
//!
//! All variables are non-negative; the objective is always minimized.
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub mod format;
mod simplex;

pub use simplex::solve;

/// Primal feasibility and optimality tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Pivots smaller than this abort the solve.
pub const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("malformed LP: {0}")]
    Malformed(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("iteration limit of {0} pivots reached")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

/// One sparse constraint row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub coefficients: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `min c·x  s.t.  rows, x >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardLP {
    pub column_names: Vec<String>,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

impl StandardLP {
    pub fn num_columns(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.column_names.len() != self.objective.len() {
            return Err(SolverError::Malformed(format!(
                "{} column names for {} objective entries",
                self.column_names.len(),
                self.objective.len()
            )));
        }
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(SolverError::Malformed(format!(
                "objective coefficient of `{}` is not finite",
                self.column_names[j]
            )));
        }
        for row in &self.rows {
            if !row.rhs.is_finite() {
                return Err(SolverError::Malformed(format!(
                    "rhs of `{}` is not finite",
                    row.name
                )));
            }
            for &(j, a) in &row.coefficients {
                if j >= self.num_columns() {
                    return Err(SolverError::Malformed(format!(
                        "row `{}` references column {j} of {}",
                        row.name,
                        self.num_columns()
                    )));
                }
                if !a.is_finite() {
                    return Err(SolverError::Malformed(format!(
                        "row `{}` has a non-finite coefficient",
                        row.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Structural values; empty unless optimal.
    pub primal: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Phase-two reduced costs of the structural columns.
    pub reduced_costs: Vec<f64>,
    /// Whether each structural column ended up basic.
    pub basic: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub what: String,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub violations: Vec<Violation>,
    pub max_violation: f64,
    pub recomputed_objective: f64,
    pub objective_error: f64,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Recomputes feasibility, the objective and the optimality certificate of
/// an optimal outcome from the raw LP data.
pub fn verify(lp: &StandardLP, outcome: &SolveOutcome) -> VerifyReport {
    let mut violations = Vec::new();
    let x = &outcome.primal;
    let mut max_violation = 0.0_f64;
    if x.len() != lp.num_columns() {
        violations.push(Violation {
            what: format!(
                "primal has {} entries, LP has {} columns",
                x.len(),
                lp.num_columns()
            ),
            amount: f64::INFINITY,
        });
        return VerifyReport {
            violations,
            max_violation: f64::INFINITY,
            recomputed_objective: f64::NAN,
            objective_error: f64::INFINITY,
        };
    }
    for (name, &v) in lp.column_names.iter().zip(x) {
        if v < -1e-9 {
            max_violation = max_violation.max(-v);
            violations.push(Violation {
                what: format!("{name} is negative"),
                amount: -v,
            });
        }
    }
    for row in &lp.rows {
        let amount = row.violation(x);
        max_violation = max_violation.max(amount);
        if amount > FEASIBILITY_TOL {
            violations.push(Violation {
                what: format!("row {} violated", row.name),
                amount,
            });
        }
    }
    let recomputed_objective = lp.objective_value(x);
    let objective_error = (recomputed_objective - outcome.objective).abs();
    if objective_error > FEASIBILITY_TOL * recomputed_objective.abs().max(1.0) {
        violations.push(Violation {
            what: "objective mismatch".to_string(),
            amount: objective_error,
        });
    }
    for ((name, &d), &is_basic) in lp
        .column_names
        .iter()
        .zip(&outcome.reduced_costs)
        .zip(&outcome.basic)
    {
        if !is_basic && d < -1e-9 {
            violations.push(Violation {
                what: format!("reduced cost of {name} is negative"),
                amount: -d,
            });
        }
    }
    VerifyReport {
        violations,
        max_violation,
        recomputed_objective,
        objective_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn min_x_ge_3() -> StandardLP {
        StandardLP {
            column_names: vec!["x".into()],
            objective: vec![1.0],
            rows: vec![Row {
                name: "c".into(),
                coefficients: vec![(0, 1.0)],
                sense: Sense::Ge,
                rhs: 3.0,
            }],
        }
    }

    #[test]
    fn verify_accepts_valid_outcome() {
        let lp = min_x_ge_3();
        let out = solve(&lp).unwrap();
        let report = verify(&lp, &out);
        assert!(report.is_ok(), "{report:?}");
    }

    #[test]
    fn verify_flags_perturbed_primal() {
        let lp = StandardLP {
            column_names: vec!["x".into(), "y".into()],
            objective: vec![1.0, 2.0],
            rows: vec![Row {
                name: "cap".into(),
                coefficients: vec![(0, 1.0), (1, 1.0)],
                sense: Sense::Eq,
                rhs: 3.0,
            }],
        };
        let mut out = solve(&lp).unwrap();
        out.primal[0] += 1e-3;
        let report = verify(&lp, &out);
        assert!(!report.is_ok());
        assert!(report.violations.iter().any(|v| v.what.contains("cap")));
    }

    #[test]
    fn validate_catches_bad_references() {
        let mut lp = min_x_ge_3();
        lp.rows[0].coefficients.push((3, 1.0));
        assert!(matches!(lp.validate(), Err(SolverError::Malformed(_))));
        let mut lp = min_x_ge_3();
        lp.objective[0] = f64::NAN;
        assert!(lp.validate().is_err());
    }
}
