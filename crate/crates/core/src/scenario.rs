//! Scenario files: a TOML document describing one planning problem.
//!
//! Year series accept either a scalar (same value every year) or one value
//! per year. Rates are plain fractions.
use crate::finance::{AnnuityConvention, CostProfile, FinancialSpec};
use crate::formulation::{
    Asset, Demand, FormulationError, Method, MethodOptions, P2CostIndex, RepPeriod, Scenario,
    SplitChoice,
};
use crate::horizon::Horizon;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Relative tolerance when both cost series are given for one asset.
pub const COST_CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error(
        "assets[{asset}]: total_cost and annualized_cost disagree by {rel_error:.3e} relative"
    )]
    InconsistentCost { asset: usize, rel_error: f64 },
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

fn invalid(field: impl Into<String>, message: impl ToString) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        message: message.to_string(),
    }
}

/// A scalar or a per-year array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum YearSeries {
    Constant(f64),
    PerYear(Vec<f64>),
}

impl YearSeries {
    fn expand(&self, field: &str, years: usize) -> Result<Vec<f64>> {
        match self {
            YearSeries::Constant(v) => Ok(vec![*v; years]),
            YearSeries::PerYear(v) if v.len() == years => Ok(v.clone()),
            YearSeries::PerYear(v) => Err(invalid(
                field,
                format!("expected {years} values, got {}", v.len()),
            )),
        }
    }

    fn compact(values: &[f64]) -> Self {
        match values.first() {
            Some(&first) if values.iter().all(|&v| v.to_bits() == first.to_bits()) => {
                YearSeries::Constant(first)
            }
            _ => YearSeries::PerYear(values.to_vec()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonSection {
    pub total_years: usize,
    /// Omitted means every year is a milestone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub milestones: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinancialSection {
    pub social_discount_rate: f64,
    pub wacc: YearSeries,
    #[serde(default)]
    pub convention: AnnuityConvention,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsSection {
    #[serde(default)]
    pub split: SplitChoice,
    #[serde(default)]
    pub p2_cost_index: P2CostIndex,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basic_total_salvage: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodSection {
    pub steps: usize,
    /// Hours each step stands for, per year.
    pub weight_hours: YearSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetSection {
    pub name: String,
    pub lifetime: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_cost: Option<YearSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annualized_cost: Option<YearSeries>,
    pub op_cost: YearSeries,
    /// One value per milestone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<Vec<f64>>,
}

/// Either a full `[year][period][step]` table, or a per-period profile
/// scaled year by year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_by_year: Option<YearSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Vec<Vec<f64>>>>,
}

/// The on-disk document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<Method>,
    pub horizon: HorizonSection,
    pub financial: FinancialSection,
    #[serde(default)]
    pub options: OptionsSection,
    pub periods: Vec<PeriodSection>,
    pub assets: Vec<AssetSection>,
    pub demand: DemandSection,
}

/// Which investment cost series an asset was specified with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostBasis {
    Total,
    Annualized,
}

/// A validated scenario plus what the file asked for.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDocument {
    pub scenario: Scenario,
    /// Methods requested by the file, in file order.
    pub methods: Vec<Method>,
    pub cost_basis: Vec<CostBasis>,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    load_document(path).map(|d| d.scenario)
}

pub fn load_document(path: impl AsRef<Path>) -> Result<ScenarioDocument> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ScenarioDocument::from_toml(&text)
}

impl ScenarioDocument {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let years = file.horizon.total_years;
        let horizon = match &file.horizon.milestones {
            Some(ms) => Horizon::new(years, ms.clone()),
            None => Horizon::yearly(years),
        }
        .map_err(|e| invalid("horizon.milestones", e))?;

        let wacc = file.financial.wacc.expand("financial.wacc", years)?;
        let financial = FinancialSpec::new(file.financial.social_discount_rate, wacc)
            .map_err(|e| invalid("financial", e))?;
        let convention = file.financial.convention;

        let periods = file
            .periods
            .iter()
            .enumerate()
            .map(|(k, p)| {
                Ok(RepPeriod {
                    steps: p.steps,
                    weight_by_year: p
                        .weight_hours
                        .expand(&format!("periods[{k}].weight_hours"), years)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut assets = Vec::with_capacity(file.assets.len());
        let mut cost_basis = Vec::with_capacity(file.assets.len());
        for (i, a) in file.assets.iter().enumerate() {
            let field = |f: &str| format!("assets[{i}].{f}");
            let (cost, basis) = match (&a.total_cost, &a.annualized_cost) {
                (None, None) => {
                    return Err(invalid(
                        field("total_cost"),
                        "one of total_cost or annualized_cost is required",
                    ))
                }
                (Some(t), None) => {
                    let t = t.expand(&field("total_cost"), years)?;
                    let c = CostProfile::from_total(t, a.lifetime, &financial, convention)
                        .map_err(|e| invalid(field("total_cost"), e))?;
                    (c, CostBasis::Total)
                }
                (None, Some(an)) => {
                    let an = an.expand(&field("annualized_cost"), years)?;
                    let c = CostProfile::from_annualized(an, a.lifetime, &financial, convention)
                        .map_err(|e| invalid(field("annualized_cost"), e))?;
                    (c, CostBasis::Annualized)
                }
                (Some(t), Some(an)) => {
                    let given = CostProfile {
                        total_cost_by_year: t.expand(&field("total_cost"), years)?,
                        annualized_cost_by_year: an.expand(&field("annualized_cost"), years)?,
                        lifetime: a.lifetime,
                    };
                    let rel_error = given
                        .consistency_error(&financial, convention)
                        .map_err(|e| invalid(field("annualized_cost"), e))?;
                    if rel_error > COST_CONSISTENCY_TOL {
                        return Err(ScenarioError::InconsistentCost {
                            asset: i,
                            rel_error,
                        });
                    }
                    let c = CostProfile::from_total(
                        given.total_cost_by_year,
                        a.lifetime,
                        &financial,
                        convention,
                    )
                    .map_err(|e| invalid(field("total_cost"), e))?;
                    (c, CostBasis::Total)
                }
            };
            assets.push(Asset {
                name: a.name.clone(),
                cost,
                op_cost_by_year: a.op_cost.expand(&field("op_cost"), years)?,
                efficiency: a.efficiency.clone(),
            });
            cost_basis.push(basis);
        }

        let demand = match (&file.demand.values, &file.demand.profile) {
            (Some(_), Some(_)) => {
                return Err(invalid("demand", "give either values or profile, not both"))
            }
            (Some(values), None) => {
                if file.demand.scale_by_year.is_some() {
                    return Err(invalid("demand.scale_by_year", "only applies to a profile"));
                }
                Demand::new(values.clone())
            }
            (None, Some(profile)) => {
                let scale = match &file.demand.scale_by_year {
                    Some(s) => s.expand("demand.scale_by_year", years)?,
                    None => vec![1.0; years],
                };
                Demand::new(
                    scale
                        .iter()
                        .map(|s| {
                            profile
                                .iter()
                                .map(|row| row.iter().map(|d| d * s).collect())
                                .collect()
                        })
                        .collect(),
                )
            }
            (None, None) => return Err(invalid("demand", "values or profile is required")),
        };

        let options = MethodOptions {
            convention,
            split: file.options.split,
            p2_cost_index: file.options.p2_cost_index,
            basic_total_salvage: file
                .options
                .basic_total_salvage
                .unwrap_or(MethodOptions::default().basic_total_salvage),
        };

        let scenario = Scenario {
            name: file.name,
            horizon,
            financial,
            periods,
            assets,
            demand,
            options,
        };
        scenario.validate().map_err(|e| match e {
            FormulationError::InvalidScenario(msg) => match msg.split_once(": ") {
                Some((field, message)) => invalid(field, message),
                None => invalid("scenario", msg),
            },
            other => invalid("scenario", other),
        })?;
        Ok(Self {
            scenario,
            methods: file.methods,
            cost_basis,
        })
    }

    pub fn to_file(&self) -> ScenarioFile {
        let s = &self.scenario;
        ScenarioFile {
            name: s.name.clone(),
            methods: self.methods.clone(),
            horizon: HorizonSection {
                total_years: s.horizon.total_years(),
                milestones: (!s.horizon.is_yearly()).then(|| s.horizon.milestones().to_vec()),
            },
            financial: FinancialSection {
                social_discount_rate: s.financial.social_discount_rate,
                wacc: YearSeries::compact(&s.financial.wacc_by_year),
                convention: s.options.convention,
            },
            options: OptionsSection {
                split: s.options.split,
                p2_cost_index: s.options.p2_cost_index,
                basic_total_salvage: Some(s.options.basic_total_salvage),
            },
            periods: s
                .periods
                .iter()
                .map(|p| PeriodSection {
                    steps: p.steps,
                    weight_hours: YearSeries::compact(&p.weight_by_year),
                })
                .collect(),
            assets: s
                .assets
                .iter()
                .zip(&self.cost_basis)
                .map(|(a, basis)| {
                    let (total_cost, annualized_cost) = match basis {
                        CostBasis::Total => {
                            (Some(YearSeries::compact(&a.cost.total_cost_by_year)), None)
                        }
                        CostBasis::Annualized => (
                            None,
                            Some(YearSeries::compact(&a.cost.annualized_cost_by_year)),
                        ),
                    };
                    AssetSection {
                        name: a.name.clone(),
                        lifetime: a.cost.lifetime,
                        total_cost,
                        annualized_cost,
                        op_cost: YearSeries::compact(&a.op_cost_by_year),
                        efficiency: a.efficiency.clone(),
                    }
                })
                .collect(),
            demand: DemandSection {
                profile: None,
                scale_by_year: None,
                values: Some(s.demand.values().to_vec()),
            },
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("scenario documents always serialize")
    }
}
