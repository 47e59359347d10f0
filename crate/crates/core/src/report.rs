//! Run orchestration and report emission.
use crate::formulation::{
    build, compare, ComparisonReport, CostKind, FormulationError, Method, Scenario, Solved,
    Variable, COEFFICIENT_REL_TOL, REFERENCE_ABS_TOL,
};
use crate::lp::{self, SolveStatus, FEASIBILITY_TOL, PIVOT_TOL};
use crate::numfmt::{round12, sig12, SIGNIFICANT_DIGITS};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Investment {
    pub variable: String,
    pub asset: String,
    pub year: usize,
    pub capacity: f64,
}

/// One objective term evaluated at the optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermLine {
    pub label: String,
    pub kind: CostKind,
    pub year: usize,
    pub variable: String,
    pub coefficient: f64,
    /// `coefficient * variable` at the optimum; zero when not solved.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearCost {
    pub year: usize,
    pub investment: f64,
    pub salvage: f64,
    pub operational: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub ok: bool,
    pub max_violation: f64,
    pub objective_error: f64,
    /// Objective rebuilt from the term list.
    pub decomposition_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub description: String,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub columns: usize,
    pub rows: usize,
    pub investment_cost: f64,
    pub salvage_cost: f64,
    pub operational_cost: f64,
    pub investments: Vec<Investment>,
    pub cost_by_year: Vec<YearCost>,
    pub terms: Vec<TermLine>,
    pub verification: Option<Verification>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario: String,
    /// SHA-256 of the canonical scenario encoding.
    pub input_sha256: String,
    pub version: String,
    pub tolerances: BTreeMap<String, f64>,
    pub significant_digits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub methods: Vec<MethodResult>,
    /// Present when at least two methods ran.
    pub comparison: Option<ComparisonReport>,
    pub provenance: Provenance,
}

impl RunReport {
    pub fn method(&self, method: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// SHA-256 over the scenario's canonical JSON encoding.
pub fn scenario_hash(scenario: &Scenario) -> String {
    let bytes = serde_json::to_vec(scenario).expect("scenario serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Builds, solves, verifies and compares every requested method. Methods are
/// deduplicated and run in their canonical order.
pub fn run(scenario: &Scenario, methods: &[Method]) -> Result<RunReport, FormulationError> {
    scenario.validate()?;
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();

    let solved: Vec<Solved> = std::thread::scope(|scope| {
        let handles: Vec<_> = methods
            .iter()
            .map(|&m| scope.spawn(move || Solved::solve(build(scenario, m)?)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let results = solved.iter().map(|s| method_result(s, scenario)).collect();
    let comparison = if solved.len() >= 2 {
        Some(compare(&solved, scenario)?)
    } else {
        None
    };
    Ok(RunReport {
        methods: results,
        comparison,
        provenance: Provenance {
            scenario: scenario.name.clone(),
            input_sha256: scenario_hash(scenario),
            version: env!("CARGO_PKG_VERSION").to_string(),
            tolerances: [
                ("coefficient_rel", COEFFICIENT_REL_TOL),
                ("feasibility", FEASIBILITY_TOL),
                ("reference_abs", REFERENCE_ABS_TOL),
                ("pivot", PIVOT_TOL),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
            significant_digits: SIGNIFICANT_DIGITS,
        },
    })
}

fn method_result(s: &Solved, scenario: &Scenario) -> MethodResult {
    let f = &s.formulation;
    let optimal = s.is_optimal();
    let zeros = vec![0.0; f.variables.len()];
    let x = if optimal { &s.outcome.primal } else { &zeros };

    let terms: Vec<TermLine> = f
        .terms
        .iter()
        .map(|t| TermLine {
            label: f.term_label(t),
            kind: t.kind,
            year: t.year,
            variable: f.variables.get(t.column).name(),
            coefficient: t.coefficient,
            value: t.coefficient * x[t.column],
        })
        .collect();

    let mut by_year: BTreeMap<usize, YearCost> = BTreeMap::new();
    for t in &terms {
        let e = by_year.entry(t.year).or_insert(YearCost {
            year: t.year,
            investment: 0.0,
            salvage: 0.0,
            operational: 0.0,
        });
        match t.kind {
            CostKind::Investment => e.investment += t.value,
            CostKind::Salvage => e.salvage += t.value,
            CostKind::Operational => e.operational += t.value,
        }
    }
    let total = |kind: CostKind| {
        terms
            .iter()
            .filter(|t| t.kind == kind)
            .map(|t| t.value)
            .sum()
    };

    let investments = if optimal {
        f.variables
            .iter()
            .filter_map(|(c, v)| match v {
                Variable::Invest { asset, year } => Some(Investment {
                    variable: v.name(),
                    asset: scenario.assets[asset].name.clone(),
                    year,
                    capacity: x[c],
                }),
                _ => None,
            })
            .collect()
    } else {
        Vec::new()
    };

    let verification = optimal.then(|| {
        let v = lp::verify(&f.to_lp(), &s.outcome);
        let decomposed = f.decomposition_value(x);
        let decomposition_error =
            (decomposed - s.outcome.objective).abs() / s.outcome.objective.abs().max(1.0);
        Verification {
            ok: v.is_ok() && decomposition_error <= COEFFICIENT_REL_TOL,
            max_violation: v.max_violation,
            objective_error: v.objective_error,
            decomposition_error,
        }
    });

    MethodResult {
        method: f.method,
        description: f.method.description().to_string(),
        status: s.outcome.status,
        objective: optimal.then_some(s.outcome.objective),
        iterations: s.outcome.iterations,
        columns: f.variables.len(),
        rows: f.constraints.len(),
        investment_cost: total(CostKind::Investment),
        salvage_cost: total(CostKind::Salvage),
        operational_cost: total(CostKind::Operational),
        investments,
        cost_by_year: by_year.into_values().collect(),
        terms,
        verification,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Table,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Table => "txt",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "table" | "text" => Ok(Format::Table),
            other => Err(format!("unknown format `{other}` (json, csv, table)")),
        }
    }
}

pub fn emit(report: &RunReport, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Csv => to_csv(report),
        Format::Table => to_table(report),
    }
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round12(n.as_f64().expect("f64 number"));
            if let Some(num) = serde_json::Number::from_f64(r) {
                *n = num;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and floats rounded to 12 significant digits.
pub fn to_json(report: &RunReport) -> String {
    let mut value = serde_json::to_value(report).expect("report serializes");
    round_floats(&mut value);
    let mut out = serde_json::to_string_pretty(&value).expect("value serializes");
    out.push('\n');
    out
}

pub const CSV_HEADER: [&str; 8] = [
    "method",
    "label",
    "kind",
    "year",
    "variable",
    "coefficient",
    "value",
    "status",
];

/// One row per `(method, term)`.
pub fn to_csv(report: &RunReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for m in &report.methods {
        let status = format!("{:?}", m.status).to_lowercase();
        for t in &m.terms {
            w.write_record([
                m.method.as_str(),
                &t.label,
                t.kind.as_str(),
                &t.year.to_string(),
                &t.variable,
                &sig12(t.coefficient),
                &sig12(t.value),
                &status,
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn opt(v: Option<f64>) -> String {
    v.map(sig12).unwrap_or_else(|| "-".to_string())
}

/// Fixed-width summary, one line per method.
pub fn to_table(report: &RunReport) -> String {
    let mut out = String::new();
    let p = &report.provenance;
    let _ = writeln!(
        out,
        "scenario {} (sha256 {})",
        p.scenario,
        &p.input_sha256[..16]
    );
    let _ = writeln!(
        out,
        "{:<20} {:<10} {:>18} {:>18} {:>18} {:>18}  description",
        "method", "status", "objective", "investment", "salvage", "operational"
    );
    for m in &report.methods {
        let _ = writeln!(
            out,
            "{:<20} {:<10} {:>18} {:>18} {:>18} {:>18}  {}",
            m.method.as_str(),
            format!("{:?}", m.status).to_lowercase(),
            opt(m.objective),
            sig12(m.investment_cost),
            sig12(m.salvage_cost),
            sig12(m.operational_cost),
            m.description
        );
    }
    if let Some(c) = &report.comparison {
        let _ = writeln!(out, "\nmax relative investment-coefficient difference");
        matrix(&mut out, c, &c.investment_diff);
        let _ = writeln!(out, "\nmax relative operational-coefficient difference");
        matrix(&mut out, c, &c.operational_diff);
        if !c.flags.is_empty() {
            let _ = writeln!(out, "\nflags");
            for f in &c.flags {
                let mark = if f.holds { "yes" } else { "no " };
                let _ = writeln!(out, "  [{mark}] {}", f.message);
            }
        }
    }
    out
}

fn matrix(out: &mut String, c: &ComparisonReport, m: &[Vec<f64>]) {
    let _ = write!(out, "{:<20}", "");
    for s in &c.methods {
        let _ = write!(out, " {:>20}", s.method.as_str());
    }
    out.push('\n');
    for (s, row) in c.methods.iter().zip(m) {
        let _ = write!(out, "{:<20}", s.method.as_str());
        for v in row {
            let _ = write!(out, " {:>20}", sig12(*v));
        }
        out.push('\n');
    }
}
