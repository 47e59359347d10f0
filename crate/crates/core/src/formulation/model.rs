use super::{FormulationError, Result};
use crate::finance::{AnnuityConvention, CostProfile, FinancialSpec};
use crate::horizon::{Horizon, SplitScheme};
use serde::{Deserialize, Serialize};

/// A representative period: `steps` time steps, each standing for
/// `weight_by_year[y]` hours in year `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepPeriod {
    pub steps: usize,
    pub weight_by_year: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asset {
    pub name: String,
    pub cost: CostProfile,
    /// Variable cost per MWh, by year.
    pub op_cost_by_year: Vec<f64>,
    /// Relative efficiency per milestone; drives the efficiency-weighted split.
    pub efficiency: Option<Vec<f64>>,
}

/// Demand in MW, indexed `[year][period][step]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    values: Vec<Vec<Vec<f64>>>,
}

impl Demand {
    pub fn new(values: Vec<Vec<Vec<f64>>>) -> Self {
        Self { values }
    }

    /// Same demand in every year, step and period.
    pub fn constant(years: usize, periods: &[RepPeriod], level: f64) -> Self {
        Self::new(vec![
            periods.iter().map(|p| vec![level; p.steps]).collect();
            years
        ])
    }

    pub fn get(&self, year: usize, period: usize, step: usize) -> f64 {
        self.values[year][period][step]
    }

    pub fn values(&self) -> &[Vec<Vec<f64>>] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitChoice {
    #[default]
    Equal,
    Efficiency,
}

/// Which cost data multiplies production in the fixed-split formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum P2CostIndex {
    /// Costs and production taken at the operational milestone.
    #[default]
    OperationalMilestone,
    /// Costs and production taken at the investment milestone.
    InvestmentMilestone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SalvageForm {
    /// `C^T - SV`
    Absolute,
    /// `C^T (1 - SVP)`
    Percentage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodOptions {
    pub convention: AnnuityConvention,
    pub split: SplitChoice,
    pub p2_cost_index: P2CostIndex,
    /// Whether the yearly total-cost method credits salvage value.
    pub basic_total_salvage: bool,
}

impl Default for MethodOptions {
    fn default() -> Self {
        Self {
            convention: AnnuityConvention::FirstYearUndiscounted,
            split: SplitChoice::Equal,
            p2_cost_index: P2CostIndex::OperationalMilestone,
            basic_total_salvage: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub horizon: Horizon,
    pub financial: FinancialSpec,
    pub periods: Vec<RepPeriod>,
    pub assets: Vec<Asset>,
    pub demand: Demand,
    pub options: MethodOptions,
}

fn invalid(msg: String) -> FormulationError {
    FormulationError::InvalidScenario(msg)
}

fn check_series(field: &str, values: &[f64], years: usize) -> Result<()> {
    if values.len() != years {
        return Err(invalid(format!(
            "{field}: expected {years} yearly values, got {}",
            values.len()
        )));
    }
    if let Some((y, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        return Err(invalid(format!(
            "{field}[{y}]: must be finite and non-negative, got {v}"
        )));
    }
    Ok(())
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let years = self.horizon.total_years();
        self.financial
            .check_covers(years)
            .map_err(|e| invalid(format!("financial.wacc: {e}")))?;
        if self.periods.is_empty() {
            return Err(invalid(
                "periods: at least one representative period is required".into(),
            ));
        }
        for (k, p) in self.periods.iter().enumerate() {
            if p.steps == 0 {
                return Err(invalid(format!("periods[{k}].steps: must be at least 1")));
            }
            check_series(
                &format!("periods[{k}].weight_hours"),
                &p.weight_by_year,
                years,
            )?;
        }
        if self.assets.is_empty() {
            return Err(invalid("assets: at least one asset is required".into()));
        }
        for (i, a) in self.assets.iter().enumerate() {
            let field = |f: &str| format!("assets[{i}].{f}");
            if a.cost.lifetime < 1 {
                return Err(invalid(format!(
                    "{}: must be at least 1",
                    field("lifetime")
                )));
            }
            check_series(&field("total_cost"), &a.cost.total_cost_by_year, years)?;
            check_series(
                &field("annualized_cost"),
                &a.cost.annualized_cost_by_year,
                years,
            )?;
            check_series(&field("op_cost"), &a.op_cost_by_year, years)?;
            if self.options.split == SplitChoice::Efficiency {
                let eff = a.efficiency.as_ref().ok_or_else(|| {
                    invalid(format!(
                        "{}: required by the efficiency split",
                        field("efficiency")
                    ))
                })?;
                SplitScheme::efficiency_from_floats(&self.horizon, eff)
                    .map_err(|e| invalid(format!("{}: {e}", field("efficiency"))))?;
            }
        }
        let values = self.demand.values();
        if values.len() != years {
            return Err(invalid(format!(
                "demand: expected {years} years, got {}",
                values.len()
            )));
        }
        for (y, per_year) in values.iter().enumerate() {
            if per_year.len() != self.periods.len() {
                return Err(invalid(format!(
                    "demand[{y}]: expected {} periods",
                    self.periods.len()
                )));
            }
            for (k, steps) in per_year.iter().enumerate() {
                if steps.len() != self.periods[k].steps {
                    return Err(invalid(format!(
                        "demand[{y}][{k}]: expected {} steps, got {}",
                        self.periods[k].steps,
                        steps.len()
                    )));
                }
                if steps.iter().any(|d| !d.is_finite() || *d < 0.0) {
                    return Err(invalid(format!(
                        "demand[{y}][{k}]: values must be non-negative"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn split_scheme(&self, asset: usize) -> Result<SplitScheme> {
        match self.options.split {
            SplitChoice::Equal => Ok(SplitScheme::EqualSplit),
            SplitChoice::Efficiency => {
                let eff = self.assets[asset]
                    .efficiency
                    .as_deref()
                    .ok_or_else(|| invalid(format!("assets[{asset}].efficiency: missing")))?;
                Ok(SplitScheme::efficiency_from_floats(&self.horizon, eff)?)
            }
        }
    }

    /// Same scenario with a different horizon; series are kept as they are.
    pub fn with_horizon(&self, horizon: Horizon) -> Self {
        Self {
            horizon,
            ..self.clone()
        }
    }
}
