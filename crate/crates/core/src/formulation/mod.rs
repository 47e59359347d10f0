//! LP materialization of every multi-year cost formulation.
//!
//! Each builder returns a [`Formulation`]: a variable registry, constraint
//! rows and a list of labelled cost terms. The objective vector is always
//! the column-wise sum of those terms, so any objective value can be
//! decomposed back into investment, salvage and operational cost per year.
use crate::finance::FinanceError;
use crate::horizon::HorizonError;
use crate::lp::{Row, StandardLP};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

mod build;
mod compare;
mod model;
#[cfg(test)]
pub(crate) mod testkit;

pub use build::{
    apply_salvage, apply_salvage_with, build, build_basic_annualized, build_basic_total, build_p1,
    build_p2, build_p3, build_standard_milestone,
};
pub use compare::{
    compare, compare_formulations, ColumnDiff, ComparisonReport, Flag, FlagKind, MethodSummary,
    PairComparison, Solved,
};
pub use model::{
    Asset, Demand, MethodOptions, P2CostIndex, RepPeriod, SalvageForm, Scenario, SplitChoice,
};

/// Relative tolerance for every coefficient-equivalence check.
pub const COEFFICIENT_REL_TOL: f64 = 1e-9;
/// Absolute tolerance against published values rounded to cents.
pub const REFERENCE_ABS_TOL: f64 = 0.02;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormulationError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("{0} requires every year to be a milestone")]
    NotYearly(Method),
    #[error("salvage value only applies to total-cost methods, not {0}")]
    SalvageOnAnnualized(Method),
    #[error("salvage value already applied to {0}")]
    SalvageAlreadyApplied(Method),
    #[error("formulations are not comparable: {0}")]
    DimensionMismatch(String),
    #[error("solving {method} failed: {source}")]
    Solver {
        method: Method,
        source: crate::lp::SolverError,
    },
    #[error(transparent)]
    Finance(#[from] FinanceError),
    #[error(transparent)]
    Horizon(#[from] HorizonError),
}

pub type Result<T> = std::result::Result<T, FormulationError>;

/// Formulation tag. Declaration order is the reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BasicTotal,
    BasicAnnualized,
    StandardTotal,
    StandardAnnualized,
    P1Total,
    P1Annualized,
    P2,
    P3,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::BasicTotal,
        Method::BasicAnnualized,
        Method::StandardTotal,
        Method::StandardAnnualized,
        Method::P1Total,
        Method::P1Annualized,
        Method::P2,
        Method::P3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::BasicTotal => "basic-total",
            Method::BasicAnnualized => "basic-annualized",
            Method::StandardTotal => "standard-total",
            Method::StandardAnnualized => "standard-annualized",
            Method::P1Total => "p1-total",
            Method::P1Annualized => "p1-annualized",
            Method::P2 => "p2",
            Method::P3 => "p3",
        }
    }

    pub fn is_total_cost(self) -> bool {
        matches!(
            self,
            Method::BasicTotal | Method::StandardTotal | Method::P1Total
        )
    }

    pub fn requires_yearly(self) -> bool {
        matches!(self, Method::BasicTotal | Method::BasicAnnualized)
    }

    /// Short human description used in text reports.
    pub fn description(self) -> &'static str {
        match self {
            Method::BasicTotal => "yearly, overnight cost",
            Method::BasicAnnualized => "yearly, annualized cost",
            Method::StandardTotal => "milestone weights, overnight cost",
            Method::StandardAnnualized => "milestone weights, annualized cost",
            Method::P1Total => "year mapping, overnight cost",
            Method::P1Annualized => "year mapping, annualized cost",
            Method::P2 => "year mapping with fixed vintage split",
            Method::P3 => "vintage production variables",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.as_str()).collect();
                format!(
                    "unknown method `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

/// Total vs annualized investment cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostMethod {
    Total,
    Annualized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variable {
    /// Capacity built at `year`.
    Invest { asset: usize, year: usize },
    /// Production in `year`, representative period and time step.
    Prod {
        asset: usize,
        year: usize,
        period: usize,
        step: usize,
    },
    /// Production in `year` attributed to the capacity built at `invest`.
    ProdVintage {
        asset: usize,
        invest: usize,
        year: usize,
        period: usize,
        step: usize,
    },
}

impl Variable {
    pub fn name(&self) -> String {
        match *self {
            Variable::Invest { asset, year } => format!("x_a{asset}_y{year}"),
            Variable::Prod {
                asset,
                year,
                period,
                step,
            } => format!("p_a{asset}_y{year}_k{period}_t{step}"),
            Variable::ProdVintage {
                asset,
                invest,
                year,
                period,
                step,
            } => format!("v_a{asset}_m{invest}_y{year}_k{period}_t{step}"),
        }
    }

    pub fn asset(&self) -> usize {
        match *self {
            Variable::Invest { asset, .. }
            | Variable::Prod { asset, .. }
            | Variable::ProdVintage { asset, .. } => asset,
        }
    }
}

/// Dense, insertion-ordered column registry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VariableIndex {
    vars: Vec<Variable>,
    lookup: HashMap<Variable, usize>,
}

impl VariableIndex {
    pub fn add(&mut self, var: Variable) -> usize {
        *self.lookup.entry(var).or_insert_with(|| {
            self.vars.push(var);
            self.vars.len() - 1
        })
    }

    pub fn column(&self, var: &Variable) -> Option<usize> {
        self.lookup.get(var).copied()
    }

    pub fn get(&self, column: usize) -> Variable {
        self.vars[column]
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Variable)> + '_ {
        self.vars.iter().copied().enumerate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Investment,
    Salvage,
    Operational,
}

impl CostKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CostKind::Investment => "investment",
            CostKind::Salvage => "salvage",
            CostKind::Operational => "operational",
        }
    }
}

/// One objective contribution: `coefficient * x[column]`, booked in `year`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostTerm {
    pub column: usize,
    pub kind: CostKind,
    pub year: usize,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Formulation {
    pub method: Method,
    pub variables: VariableIndex,
    pub objective: Vec<f64>,
    pub constraints: Vec<Row>,
    pub terms: Vec<CostTerm>,
    pub salvage: Option<SalvageForm>,
}

impl Formulation {
    pub fn term_label(&self, term: &CostTerm) -> String {
        format!(
            "{}[{}]@y{}",
            term.kind.as_str(),
            self.variables.get(term.column).name(),
            term.year
        )
    }

    pub fn to_lp(&self) -> StandardLP {
        StandardLP {
            column_names: self.variables.iter().map(|(_, v)| v.name()).collect(),
            objective: self.objective.clone(),
            rows: self.constraints.clone(),
        }
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Objective recomputed term by term.
    pub fn decomposition_value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.coefficient * x[t.column]).sum()
    }

    /// Cost booked per `(kind, year)` at the point `x`.
    pub fn cost_breakdown(&self, x: &[f64]) -> BTreeMap<(CostKind, usize), f64> {
        let mut out = BTreeMap::new();
        for t in &self.terms {
            *out.entry((t.kind, t.year)).or_insert(0.0) += t.coefficient * x[t.column];
        }
        out
    }

    pub fn coefficient(&self, var: &Variable) -> Option<f64> {
        self.variables.column(var).map(|c| self.objective[c])
    }

    /// `(variable, objective coefficient)` for every investment column.
    pub fn investment_coefficients(&self) -> Vec<(Variable, f64)> {
        self.variables
            .iter()
            .filter(|(_, v)| matches!(v, Variable::Invest { .. }))
            .map(|(c, v)| (v, self.objective[c]))
            .collect()
    }

    pub fn to_lp_text(&self) -> String {
        crate::lp::format::write_lp(
            &self.to_lp(),
            &[
                format!("method: {}", self.method),
                format!(
                    "columns: {}, rows: {}",
                    self.objective.len(),
                    self.constraints.len()
                ),
            ],
        )
    }
}
