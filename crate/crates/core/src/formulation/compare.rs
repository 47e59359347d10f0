use super::{
    CostKind, Formulation, FormulationError, Method, Result, Scenario, Variable,
    COEFFICIENT_REL_TOL,
};
use crate::horizon::{invest_op_split, to_f64};
use crate::lp::{self, SolveOutcome, SolveStatus};
use serde::{Deserialize, Serialize};
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

/// A formulation together with its solve outcome.
#[derive(Debug, Clone)]
pub struct Solved {
    pub formulation: Formulation,
    pub outcome: SolveOutcome,
}

impl Solved {
    pub fn solve(formulation: Formulation) -> Result<Self> {
        let outcome =
            lp::solve(&formulation.to_lp()).map_err(|source| FormulationError::Solver {
                method: formulation.method,
                source,
            })?;
        Ok(Self {
            formulation,
            outcome,
        })
    }

    pub fn is_optimal(&self) -> bool {
        self.outcome.status == SolveStatus::Optimal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub investment_cost: f64,
    pub salvage_cost: f64,
    pub operational_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDiff {
    pub column: String,
    pub a: f64,
    pub b: f64,
    pub rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub a: Method,
    pub b: Method,
    /// `objective(b) - objective(a)`, when both solved to optimality.
    pub objective_gap: Option<f64>,
    pub investment_max_rel_diff: f64,
    pub operational_max_rel_diff: f64,
    /// Investment columns whose coefficients differ beyond tolerance.
    pub investment_diffs: Vec<ColumnDiff>,
    /// Production columns whose effective coefficients differ beyond tolerance.
    pub operational_diffs: Vec<ColumnDiff>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagKind {
    TotalAnnualizedEquivalence,
    StandardWeightsDistortion,
    P2P3Gap,
    PresetSplitAssumption,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub kind: FlagKind,
    pub methods: Vec<Method>,
    /// Whether the property named by `kind` was observed.
    pub holds: bool,
    pub value: Option<f64>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub methods: Vec<MethodSummary>,
    /// Max relative investment-coefficient difference, `[i][j]` over `methods`.
    pub investment_diff: Vec<Vec<f64>>,
    /// Max relative operational-coefficient difference, `[i][j]` over `methods`.
    pub operational_diff: Vec<Vec<f64>>,
    pub pairs: Vec<PairComparison>,
    pub flags: Vec<Flag>,
}

impl ComparisonReport {
    pub fn pair(&self, a: Method, b: Method) -> Option<&PairComparison> {
        self.pairs
            .iter()
            .find(|p| (p.a == a && p.b == b) || (p.a == b && p.b == a))
    }

    pub fn flags_of(&self, kind: FlagKind) -> impl Iterator<Item = &Flag> {
        self.flags.iter().filter(move |f| f.kind == kind)
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn summary(s: &Solved) -> MethodSummary {
    let (objective, breakdown) = if s.is_optimal() {
        (
            Some(s.outcome.objective),
            s.formulation.cost_breakdown(&s.outcome.primal),
        )
    } else {
        (None, BTreeMap::new())
    };
    let sum = |kind: CostKind| -> f64 {
        breakdown
            .iter()
            .filter(|((k, _), _)| *k == kind)
            .map(|(_, v)| v)
            .sum()
    };
    MethodSummary {
        method: s.formulation.method,
        status: s.outcome.status,
        objective,
        investment_cost: sum(CostKind::Investment),
        salvage_cost: sum(CostKind::Salvage),
        operational_cost: sum(CostKind::Operational),
    }
}

fn investment_map(f: &Formulation) -> BTreeMap<Variable, f64> {
    f.investment_coefficients().into_iter().collect()
}

/// Objective coefficient per aggregate production column. Vintage columns
/// are folded back with the fixed split, which is the point where the two
/// vintage-aware formulations coincide.
fn operational_map(f: &Formulation, scenario: &Scenario) -> Result<BTreeMap<Variable, f64>> {
    let mut out = BTreeMap::new();
    let mut splits = BTreeMap::new();
    for (col, var) in f.variables.iter() {
        match var {
            Variable::Invest { .. } => {}
            Variable::Prod { .. } => {
                *out.entry(var).or_insert(0.0) += f.objective[col];
            }
            Variable::ProdVintage {
                asset,
                invest,
                year,
                period,
                step,
            } => {
                let split = match splits.entry(asset) {
                    Entry::Occupied(e) => e.into_mut(),
                    Entry::Vacant(e) => {
                        let lt = scenario.assets[asset].cost.lifetime;
                        e.insert(invest_op_split(
                            &scenario.horizon,
                            lt,
                            &scenario.split_scheme(asset)?,
                        )?)
                    }
                };
                let share = to_f64(split.get(invest, year));
                let key = Variable::Prod {
                    asset,
                    year,
                    period,
                    step,
                };
                *out.entry(key).or_insert(0.0) += share * f.objective[col];
            }
        }
    }
    Ok(out)
}

fn diff_maps(
    what: &str,
    a: (Method, &BTreeMap<Variable, f64>),
    b: (Method, &BTreeMap<Variable, f64>),
) -> Result<(f64, Vec<ColumnDiff>)> {
    if a.1.len() != b.1.len() || a.1.keys().zip(b.1.keys()).any(|(x, y)| x != y) {
        return Err(FormulationError::DimensionMismatch(format!(
            "{} and {} have different {what} columns ({} vs {})",
            a.0,
            b.0,
            a.1.len(),
            b.1.len()
        )));
    }
    let mut worst = 0.0f64;
    let mut diffs = Vec::new();
    for ((var, &ca), &cb) in a.1.iter().zip(b.1.values()) {
        let d = rel_diff(ca, cb);
        worst = worst.max(d);
        if d > COEFFICIENT_REL_TOL {
            diffs.push(ColumnDiff {
                column: var.name(),
                a: ca,
                b: cb,
                rel_diff: d,
            });
        }
    }
    Ok((worst, diffs))
}

/// Cross-compares solved formulations built from the same scenario.
pub fn compare(solved: &[Solved], scenario: &Scenario) -> Result<ComparisonReport> {
    let n = solved.len();
    let inv: Vec<_> = solved
        .iter()
        .map(|s| investment_map(&s.formulation))
        .collect();
    let ops = solved
        .iter()
        .map(|s| operational_map(&s.formulation, scenario))
        .collect::<Result<Vec<_>>>()?;
    let methods: Vec<MethodSummary> = solved.iter().map(summary).collect();

    let mut investment_diff = vec![vec![0.0; n]; n];
    let mut operational_diff = vec![vec![0.0; n]; n];
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (mi, mj) = (methods[i].method, methods[j].method);
            let (inv_max, investment_diffs) =
                diff_maps("investment", (mi, &inv[i]), (mj, &inv[j]))?;
            let (op_max, operational_diffs) =
                diff_maps("production", (mi, &ops[i]), (mj, &ops[j]))?;
            investment_diff[i][j] = inv_max;
            investment_diff[j][i] = inv_max;
            operational_diff[i][j] = op_max;
            operational_diff[j][i] = op_max;
            let objective_gap = match (methods[i].objective, methods[j].objective) {
                (Some(a), Some(b)) => Some(b - a),
                _ => None,
            };
            pairs.push(PairComparison {
                a: mi,
                b: mj,
                objective_gap,
                investment_max_rel_diff: inv_max,
                operational_max_rel_diff: op_max,
                investment_diffs,
                operational_diffs,
            });
        }
    }

    let mut report = ComparisonReport {
        methods,
        investment_diff,
        operational_diff,
        pairs,
        flags: Vec::new(),
    };
    report.flags = flags(&report);
    Ok(report)
}

/// Solves each formulation, then compares.
pub fn compare_formulations(
    formulations: Vec<Formulation>,
    scenario: &Scenario,
) -> Result<ComparisonReport> {
    let solved = formulations
        .into_iter()
        .map(Solved::solve)
        .collect::<Result<Vec<_>>>()?;
    compare(&solved, scenario)
}

fn flags(report: &ComparisonReport) -> Vec<Flag> {
    let present = |m: Method| report.methods.iter().any(|s| s.method == m);
    let mut out = Vec::new();

    for (total, annual) in [
        (Method::BasicTotal, Method::BasicAnnualized),
        (Method::StandardTotal, Method::StandardAnnualized),
        (Method::P1Total, Method::P1Annualized),
    ] {
        let Some(p) = report.pair(total, annual) else {
            continue;
        };
        let holds = p.investment_max_rel_diff <= COEFFICIENT_REL_TOL;
        let message = if holds {
            format!(
                "{total} and {annual} investment coefficients agree within {COEFFICIENT_REL_TOL:e}"
            )
        } else {
            format!(
                "{total} and {annual} investment coefficients differ by up to {:.3e} relative",
                p.investment_max_rel_diff
            )
        };
        out.push(Flag {
            kind: FlagKind::TotalAnnualizedEquivalence,
            methods: vec![total, annual],
            holds,
            value: Some(p.investment_max_rel_diff),
            message,
        });
    }

    for (standard, p1) in [
        (Method::StandardTotal, Method::P1Total),
        (Method::StandardAnnualized, Method::P1Annualized),
    ] {
        let Some(p) = report.pair(standard, p1) else {
            continue;
        };
        let worst = p
            .investment_diffs
            .iter()
            .chain(&p.operational_diffs)
            .max_by(|a, b| a.rel_diff.total_cmp(&b.rel_diff));
        let value = p.investment_max_rel_diff.max(p.operational_max_rel_diff);
        let holds = value > COEFFICIENT_REL_TOL;
        let message = match worst {
            Some(d) => format!(
                "{standard} deviates from {p1}; largest gap on {} ({:.6} vs {:.6}, {:.3e} relative)",
                d.column, d.a, d.b, d.rel_diff
            ),
            None => format!("{standard} and {p1} coefficients coincide"),
        };
        out.push(Flag {
            kind: FlagKind::StandardWeightsDistortion,
            methods: vec![standard, p1],
            holds,
            value: Some(value),
            message,
        });
    }

    if report.pair(Method::P2, Method::P3).is_some() {
        let objective = |m: Method| {
            report
                .methods
                .iter()
                .find(|s| s.method == m)
                .and_then(|s| s.objective)
        };
        let (p2, p3) = (objective(Method::P2), objective(Method::P3));
        let (holds, value, message) = match (p2, p3) {
            (Some(p2), Some(p3)) => {
                let gap = p2 - p3;
                let holds = p3 <= p2 + COEFFICIENT_REL_TOL * p2.abs().max(1.0);
                let message = if holds {
                    format!("p3 objective is {gap:.6} below p2 (fixed vintage split)")
                } else {
                    format!("p3 objective exceeds p2 by {:.6}", -gap)
                };
                (holds, Some(gap), message)
            }
            _ => (
                false,
                None,
                "p2/p3 gap unavailable: not both solved to optimality".to_string(),
            ),
        };
        out.push(Flag {
            kind: FlagKind::P2P3Gap,
            methods: vec![Method::P2, Method::P3],
            holds,
            value,
            message,
        });
    }

    if present(Method::P2) {
        out.push(Flag {
            kind: FlagKind::PresetSplitAssumption,
            methods: vec![Method::P2],
            holds: true,
            value: None,
            message: "p2 splits production across vintages with preset weights, which assumes \
                      every investment is actually made; when some vintages stay unbuilt the \
                      operational cost can be misstated"
                .to_string(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::build;
    use crate::formulation::testkit::{fixture, milestones};
    use crate::horizon::Horizon;

    fn solved(s: &Scenario, methods: &[Method]) -> Vec<Solved> {
        methods
            .iter()
            .map(|&m| Solved::solve(build(s, m).unwrap()).unwrap())
            .collect()
    }

    #[test]
    fn self_comparison_is_zero() {
        let s = milestones(5);
        let one = solved(&s, &[Method::P2]);
        let twice = vec![one[0].clone(), one[0].clone()];
        let r = compare(&twice, &s).unwrap();
        assert_eq!(r.investment_diff, vec![vec![0.0; 2]; 2]);
        assert_eq!(r.operational_diff, vec![vec![0.0; 2]; 2]);
        assert!(r.pairs[0].investment_diffs.is_empty());
        assert_eq!(r.pairs[0].objective_gap, Some(0.0));
    }

    #[test]
    fn yearly_total_and_annualized_flagged_equivalent() {
        let s = fixture(4, Horizon::yearly(6).unwrap());
        let r = compare(
            &solved(&s, &[Method::BasicTotal, Method::BasicAnnualized]),
            &s,
        )
        .unwrap();
        let flag = r
            .flags_of(FlagKind::TotalAnnualizedEquivalence)
            .next()
            .unwrap();
        assert!(flag.holds, "{}", flag.message);
        assert!(r.investment_diff[0][1] <= COEFFICIENT_REL_TOL);
    }

    #[test]
    fn standard_vs_p1_distortion_flagged() {
        let s = milestones(6);
        let r = compare(
            &solved(&s, &[Method::StandardAnnualized, Method::P1Annualized]),
            &s,
        )
        .unwrap();
        let flag = r
            .flags_of(FlagKind::StandardWeightsDistortion)
            .next()
            .unwrap();
        assert!(flag.holds);
        let pair = r
            .pair(Method::StandardAnnualized, Method::P1Annualized)
            .unwrap();
        assert!(pair.investment_diffs.iter().any(|d| d.column == "x_a0_y0"));
    }

    #[test]
    fn vintage_columns_fold_back_onto_p2() {
        let s = milestones(5);
        let r = compare(&solved(&s, &[Method::P2, Method::P3]), &s).unwrap();
        assert!(r.operational_diff[0][1] <= COEFFICIENT_REL_TOL);
        assert_eq!(r.flags_of(FlagKind::P2P3Gap).count(), 1);
        assert_eq!(r.flags_of(FlagKind::PresetSplitAssumption).count(), 1);
    }

    #[test]
    fn mismatched_horizons_are_rejected() {
        let a = milestones(5);
        let b = a.with_horizon(Horizon::new(6, vec![0, 3]).unwrap());
        let mut both = solved(&a, &[Method::P2]);
        both.extend(solved(&b, &[Method::P2]));
        assert!(matches!(
            compare(&both, &a),
            Err(FormulationError::DimensionMismatch(_))
        ));
    }
}
