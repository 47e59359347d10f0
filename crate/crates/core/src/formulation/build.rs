use super::{
    CostKind, CostMethod, CostTerm, Formulation, FormulationError, Method, P2CostIndex, Result,
    SalvageForm, Scenario, Variable, VariableIndex,
};
use crate::finance::{salvage_percentage, salvage_value};
use crate::horizon::{
    active_investments, invest_op_split, linear_year_map, milestone_interval_weights, to_f64,
    tri_weights,
};
use crate::lp::{Row, Sense};
use std::collections::BTreeMap;

struct Builder<'a> {
    scenario: &'a Scenario,
    method: Method,
    vars: VariableIndex,
    rows: Vec<Row>,
    terms: BTreeMap<(usize, CostKind, usize), f64>,
}

impl<'a> Builder<'a> {
    fn new(scenario: &'a Scenario, method: Method) -> Result<Self> {
        scenario.validate()?;
        if method.requires_yearly() && !scenario.horizon.is_yearly() {
            return Err(FormulationError::NotYearly(method));
        }
        let mut b = Self {
            scenario,
            method,
            vars: VariableIndex::default(),
            rows: Vec::new(),
            terms: BTreeMap::new(),
        };
        for asset in 0..scenario.assets.len() {
            for &year in scenario.horizon.milestones() {
                b.vars.add(Variable::Invest { asset, year });
            }
            for &year in scenario.horizon.milestones() {
                for (period, p) in scenario.periods.iter().enumerate() {
                    for step in 0..p.steps {
                        b.vars.add(Variable::Prod {
                            asset,
                            year,
                            period,
                            step,
                        });
                    }
                }
            }
        }
        Ok(b)
    }

    fn discount(&self, year: usize) -> f64 {
        self.scenario.financial.social_discount(year)
    }

    fn wacc_discount(&self, build_year: usize, offset: usize) -> f64 {
        (1.0 + self.scenario.financial.wacc(build_year)).powi(-(offset as i32))
    }

    fn lifetime(&self, asset: usize) -> u32 {
        self.scenario.assets[asset].cost.lifetime
    }

    fn col(&self, var: Variable) -> usize {
        self.vars.column(&var).expect("variable registered")
    }

    fn add_term(&mut self, column: usize, kind: CostKind, year: usize, coefficient: f64) {
        if coefficient != 0.0 {
            *self.terms.entry((column, kind, year)).or_insert(0.0) += coefficient;
        }
    }

    /// Steps of every representative period as `(period, step)`.
    fn grid(&self) -> Vec<(usize, usize)> {
        self.scenario
            .periods
            .iter()
            .enumerate()
            .flat_map(|(k, p)| (0..p.steps).map(move |t| (k, t)))
            .collect()
    }

    /// `C^op_year * W^op_{year,period}`.
    fn op_rate(&self, asset: usize, year: usize, period: usize) -> f64 {
        self.scenario.assets[asset].op_cost_by_year[year]
            * self.scenario.periods[period].weight_by_year[year]
    }

    /// `p_{mu,k,t} <= sum of x_m over investments alive at mu`.
    fn production_limits(&mut self) {
        let grid = self.grid();
        for asset in 0..self.scenario.assets.len() {
            let lt = self.lifetime(asset);
            for &mu in self.scenario.horizon.milestones() {
                let active = active_investments(&self.scenario.horizon, lt, mu);
                for &(period, step) in &grid {
                    let mut coefficients = vec![(
                        self.col(Variable::Prod {
                            asset,
                            year: mu,
                            period,
                            step,
                        }),
                        1.0,
                    )];
                    coefficients.extend(
                        active
                            .iter()
                            .map(|&m| (self.col(Variable::Invest { asset, year: m }), -1.0)),
                    );
                    self.rows.push(Row {
                        name: format!("cap_a{asset}_y{mu}_k{period}_t{step}"),
                        coefficients,
                        sense: Sense::Le,
                        rhs: 0.0,
                    });
                }
            }
        }
    }

    fn vintage_constraints(&mut self) {
        let grid = self.grid();
        for asset in 0..self.scenario.assets.len() {
            let lt = self.lifetime(asset);
            for &mu in self.scenario.horizon.milestones() {
                let active = active_investments(&self.scenario.horizon, lt, mu);
                for &(period, step) in &grid {
                    for &m in &active {
                        self.vars.add(Variable::ProdVintage {
                            asset,
                            invest: m,
                            year: mu,
                            period,
                            step,
                        });
                    }
                }
            }
        }
        for asset in 0..self.scenario.assets.len() {
            let lt = self.lifetime(asset);
            for &mu in self.scenario.horizon.milestones() {
                let active = active_investments(&self.scenario.horizon, lt, mu);
                for &(period, step) in &grid {
                    let vintage = |m: usize| Variable::ProdVintage {
                        asset,
                        invest: m,
                        year: mu,
                        period,
                        step,
                    };
                    for &m in &active {
                        self.rows.push(Row {
                            name: format!("vcap_a{asset}_m{m}_y{mu}_k{period}_t{step}"),
                            coefficients: vec![
                                (self.col(vintage(m)), 1.0),
                                (self.col(Variable::Invest { asset, year: m }), -1.0),
                            ],
                            sense: Sense::Le,
                            rhs: 0.0,
                        });
                    }
                    let mut coefficients = vec![(
                        self.col(Variable::Prod {
                            asset,
                            year: mu,
                            period,
                            step,
                        }),
                        1.0,
                    )];
                    coefficients.extend(active.iter().map(|&m| (self.col(vintage(m)), -1.0)));
                    self.rows.push(Row {
                        name: format!("agg_a{asset}_y{mu}_k{period}_t{step}"),
                        coefficients,
                        sense: Sense::Eq,
                        rhs: 0.0,
                    });
                }
            }
        }
    }

    fn demand_rows(&mut self) {
        let grid = self.grid();
        for &mu in self.scenario.horizon.milestones() {
            for &(period, step) in &grid {
                let coefficients = (0..self.scenario.assets.len())
                    .map(|asset| {
                        (
                            self.col(Variable::Prod {
                                asset,
                                year: mu,
                                period,
                                step,
                            }),
                            1.0,
                        )
                    })
                    .collect();
                self.rows.push(Row {
                    name: format!("dem_y{mu}_k{period}_t{step}"),
                    coefficients,
                    sense: Sense::Ge,
                    rhs: self.scenario.demand.get(mu, period, step),
                });
            }
        }
    }

    /// `(1+R)^-m C^T_m x_m`.
    fn investment_total(&mut self) {
        for asset in 0..self.scenario.assets.len() {
            for &m in self.scenario.horizon.milestones() {
                let c = self.discount(m) * self.scenario.assets[asset].cost.total(m);
                let col = self.col(Variable::Invest { asset, year: m });
                self.add_term(col, CostKind::Investment, m, c);
            }
        }
    }

    /// Annuities of `x_m` over its clipped lifetime window. With
    /// `milestone_weighted`, only milestone years count, each scaled by `W^I`.
    fn investment_annualized(&mut self, milestone_weighted: bool) {
        let horizon = &self.scenario.horizon;
        let weights = milestone_interval_weights(horizon);
        for asset in 0..self.scenario.assets.len() {
            let lt = self.lifetime(asset);
            for &m in horizon.milestones() {
                let col = self.col(Variable::Invest { asset, year: m });
                let base = self.discount(m) * self.scenario.assets[asset].cost.annualized(m);
                for j in m..=horizon.window_end(m, lt) {
                    let scale = if milestone_weighted {
                        if !horizon.is_milestone(j) {
                            continue;
                        }
                        weights.get(j) as f64
                    } else {
                        1.0
                    };
                    let c = base * self.wacc_discount(m, j - m) * scale;
                    self.add_term(col, CostKind::Investment, j, c);
                }
            }
        }
    }

    /// `(1+R)^-m * weight * C^op_m W^op_mk` per production variable at `m`.
    fn operational_at_milestone(&mut self, milestone_weighted: bool) {
        let weights = milestone_interval_weights(&self.scenario.horizon);
        let grid = self.grid();
        for asset in 0..self.scenario.assets.len() {
            for &m in self.scenario.horizon.milestones() {
                let scale = if milestone_weighted {
                    weights.get(m) as f64
                } else {
                    1.0
                };
                for &(period, step) in &grid {
                    let col = self.col(Variable::Prod {
                        asset,
                        year: m,
                        period,
                        step,
                    });
                    let c = self.discount(m) * scale * self.op_rate(asset, m, period);
                    self.add_term(col, CostKind::Operational, m, c);
                }
            }
        }
    }

    /// Every calendar year charged through the linear year map.
    fn operational_year_mapped(&mut self) {
        let map = linear_year_map(&self.scenario.horizon);
        let grid = self.grid();
        for asset in 0..self.scenario.assets.len() {
            for ((m, y), w) in map.iter() {
                let w = to_f64(w);
                for &(period, step) in &grid {
                    let col = self.col(Variable::Prod {
                        asset,
                        year: m,
                        period,
                        step,
                    });
                    let c = self.discount(y) * w * self.op_rate(asset, m, period);
                    self.add_term(col, CostKind::Operational, y, c);
                }
            }
        }
    }

    fn operational_fixed_split(&mut self) -> Result<()> {
        let horizon = self.scenario.horizon.clone();
        let grid = self.grid();
        let index = self.scenario.options.p2_cost_index;
        for asset in 0..self.scenario.assets.len() {
            let lt = self.lifetime(asset);
            let split = invest_op_split(&horizon, lt, &self.scenario.split_scheme(asset)?)?;
            let tri = tri_weights(&horizon, lt)?;
            for ((m, mu), share) in split.iter() {
                let share = to_f64(share);
                for y in m..=horizon.window_end(m, lt) {
                    let w = to_f64(tri.get(m, y, mu));
                    if w == 0.0 {
                        continue;
                    }
                    // cost data and production taken either at mu or at m
                    let at = match index {
                        P2CostIndex::OperationalMilestone => mu,
                        P2CostIndex::InvestmentMilestone => m,
                    };
                    for &(period, step) in &grid {
                        let col = self.col(Variable::Prod {
                            asset,
                            year: at,
                            period,
                            step,
                        });
                        let c = self.discount(y) * w * share * self.op_rate(asset, at, period);
                        self.add_term(col, CostKind::Operational, y, c);
                    }
                }
            }
        }
        Ok(())
    }

    fn operational_vintage(&mut self) -> Result<()> {
        let horizon = self.scenario.horizon.clone();
        let grid = self.grid();
        for asset in 0..self.scenario.assets.len() {
            let lt = self.lifetime(asset);
            let tri = tri_weights(&horizon, lt)?;
            for ((m, y, mu), w) in tri.iter() {
                let w = to_f64(w);
                for &(period, step) in &grid {
                    let col = self.col(Variable::ProdVintage {
                        asset,
                        invest: m,
                        year: mu,
                        period,
                        step,
                    });
                    let c = self.discount(y) * w * self.op_rate(asset, mu, period);
                    self.add_term(col, CostKind::Operational, y, c);
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> Formulation {
        let terms: Vec<CostTerm> = self
            .terms
            .into_iter()
            .map(|((column, kind, year), coefficient)| CostTerm {
                column,
                kind,
                year,
                coefficient,
            })
            .collect();
        let mut f = Formulation {
            method: self.method,
            objective: vec![0.0; self.vars.len()],
            variables: self.vars,
            constraints: self.rows,
            terms,
            salvage: None,
        };
        recompute_objective(&mut f);
        f
    }
}

fn recompute_objective(f: &mut Formulation) {
    f.objective.iter_mut().for_each(|c| *c = 0.0);
    for t in &f.terms {
        f.objective[t.column] += t.coefficient;
    }
}

/// Yearly overnight-cost formulation. Salvage is credited when the scenario
/// options ask for it.
pub fn build_basic_total(scenario: &Scenario) -> Result<Formulation> {
    let mut b = Builder::new(scenario, Method::BasicTotal)?;
    b.investment_total();
    b.operational_at_milestone(false);
    b.production_limits();
    b.demand_rows();
    let f = b.finish();
    if scenario.options.basic_total_salvage {
        apply_salvage(f, scenario)
    } else {
        Ok(f)
    }
}

/// Yearly annualized-cost formulation; annuities clipped at the last year.
pub fn build_basic_annualized(scenario: &Scenario) -> Result<Formulation> {
    let mut b = Builder::new(scenario, Method::BasicAnnualized)?;
    b.investment_annualized(false);
    b.operational_at_milestone(false);
    b.production_limits();
    b.demand_rows();
    Ok(b.finish())
}

/// Milestone formulation with integer interval weights on operation.
pub fn build_standard_milestone(scenario: &Scenario, method: CostMethod) -> Result<Formulation> {
    let tag = match method {
        CostMethod::Total => Method::StandardTotal,
        CostMethod::Annualized => Method::StandardAnnualized,
    };
    let mut b = Builder::new(scenario, tag)?;
    match method {
        CostMethod::Total => b.investment_total(),
        CostMethod::Annualized => b.investment_annualized(true),
    }
    b.operational_at_milestone(true);
    b.production_limits();
    b.demand_rows();
    let f = b.finish();
    match method {
        CostMethod::Total => apply_salvage(f, scenario),
        CostMethod::Annualized => Ok(f),
    }
}

/// Milestone formulation with every calendar year mapped onto milestones.
pub fn build_p1(scenario: &Scenario, method: CostMethod) -> Result<Formulation> {
    let tag = match method {
        CostMethod::Total => Method::P1Total,
        CostMethod::Annualized => Method::P1Annualized,
    };
    let mut b = Builder::new(scenario, tag)?;
    match method {
        CostMethod::Total => b.investment_total(),
        CostMethod::Annualized => b.investment_annualized(false),
    }
    b.operational_year_mapped();
    b.production_limits();
    b.demand_rows();
    let f = b.finish();
    match method {
        CostMethod::Total => apply_salvage(f, scenario),
        CostMethod::Annualized => Ok(f),
    }
}

/// Year mapping plus a predefined split of production across vintages.
pub fn build_p2(scenario: &Scenario) -> Result<Formulation> {
    let mut b = Builder::new(scenario, Method::P2)?;
    b.investment_annualized(false);
    b.operational_fixed_split()?;
    b.production_limits();
    b.demand_rows();
    Ok(b.finish())
}

/// Explicit vintage production variables.
pub fn build_p3(scenario: &Scenario) -> Result<Formulation> {
    let mut b = Builder::new(scenario, Method::P3)?;
    b.vintage_constraints();
    b.investment_annualized(false);
    b.operational_vintage()?;
    b.demand_rows();
    Ok(b.finish())
}

pub fn build(scenario: &Scenario, method: Method) -> Result<Formulation> {
    match method {
        Method::BasicTotal => build_basic_total(scenario),
        Method::BasicAnnualized => build_basic_annualized(scenario),
        Method::StandardTotal => build_standard_milestone(scenario, CostMethod::Total),
        Method::StandardAnnualized => build_standard_milestone(scenario, CostMethod::Annualized),
        Method::P1Total => build_p1(scenario, CostMethod::Total),
        Method::P1Annualized => build_p1(scenario, CostMethod::Annualized),
        Method::P2 => build_p2(scenario),
        Method::P3 => build_p3(scenario),
    }
}

pub fn apply_salvage(formulation: Formulation, scenario: &Scenario) -> Result<Formulation> {
    apply_salvage_with(formulation, scenario, SalvageForm::Absolute)
}

/// Credits the discounted salvage value of every investment column.
pub fn apply_salvage_with(
    mut formulation: Formulation,
    scenario: &Scenario,
    form: SalvageForm,
) -> Result<Formulation> {
    if !formulation.method.is_total_cost() {
        return Err(FormulationError::SalvageOnAnnualized(formulation.method));
    }
    if formulation.salvage.is_some() {
        return Err(FormulationError::SalvageAlreadyApplied(formulation.method));
    }
    let last = scenario.horizon.last_year();
    let mut extra = Vec::new();
    for (column, var) in formulation.variables.iter() {
        let Variable::Invest { asset, year } = var else {
            continue;
        };
        let cost = &scenario.assets[asset].cost;
        let sv = salvage_value(
            cost.annualized(year),
            scenario.financial.wacc(year),
            cost.lifetime,
            year,
            last,
        )?;
        if sv == 0.0 {
            continue;
        }
        let credit = match form {
            SalvageForm::Absolute => sv,
            SalvageForm::Percentage => cost.total(year) * salvage_percentage(sv, cost.total(year))?,
        };
        extra.push(CostTerm {
            column,
            kind: CostKind::Salvage,
            year,
            coefficient: -scenario.financial.social_discount(year) * credit,
        });
    }
    formulation.terms.extend(extra);
    formulation
        .terms
        .sort_by_key(|t| (t.column, t.kind, t.year));
    formulation.salvage = Some(form);
    recompute_objective(&mut formulation);
    Ok(formulation)
}
