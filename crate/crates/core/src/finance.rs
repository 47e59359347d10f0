//! Discounting, annuities and salvage value.
//!
//! Year 0 is the base year for every discount factor. Rates are fractions
//! per year (`0.05` is five percent).
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FinanceError {
    #[error("discount rate {0} must be greater than -1")]
    RateOutOfRange(f64),
    #[error("WACC {0} must be strictly positive to annualize")]
    NonPositiveWacc(f64),
    #[error("lifetime must be at least one year, got {0}")]
    ZeroLifetime(u32),
    #[error("cost must be non-negative and finite, got {0}")]
    InvalidCost(f64),
    #[error("annuity sequence is empty")]
    EmptyAnnuities,
    #[error("build year {build_year} is after the last modelled year {last_modelled_year}")]
    BuildAfterHorizon {
        build_year: usize,
        last_modelled_year: usize,
    },
    #[error("total cost must be positive to express salvage as a percentage")]
    ZeroTotalCost,
    #[error("WACC given for {given} years, but {needed} are required")]
    WaccCoverage { given: usize, needed: usize },
}

pub type Result<T> = std::result::Result<T, FinanceError>;

/// Whether the first annuity payment is discounted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnuityConvention {
    /// Payments at the start of each year: exponents `0 .. LT-1`.
    #[default]
    FirstYearUndiscounted,
    /// Payments at the end of each year: exponents `1 .. LT`.
    FirstYearDiscounted,
}

impl AnnuityConvention {
    fn first_exponent(self) -> i32 {
        match self {
            AnnuityConvention::FirstYearUndiscounted => 0,
            AnnuityConvention::FirstYearDiscounted => 1,
        }
    }
}

/// Social discount rate plus the per-year cost of capital.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinancialSpec {
    pub social_discount_rate: f64,
    pub wacc_by_year: Vec<f64>,
}

impl FinancialSpec {
    pub fn new(social_discount_rate: f64, wacc_by_year: Vec<f64>) -> Result<Self> {
        check_rate(social_discount_rate)?;
        for &w in &wacc_by_year {
            check_rate(w)?;
        }
        Ok(Self {
            social_discount_rate,
            wacc_by_year,
        })
    }

    /// Fails unless a WACC is available for every year in `0..years`.
    pub fn check_covers(&self, years: usize) -> Result<()> {
        if self.wacc_by_year.len() < years {
            return Err(FinanceError::WaccCoverage {
                given: self.wacc_by_year.len(),
                needed: years,
            });
        }
        Ok(())
    }

    pub fn wacc(&self, year: usize) -> f64 {
        self.wacc_by_year[year]
    }

    /// `1/(1+R)^year`.
    pub fn social_discount(&self, year: usize) -> f64 {
        discount_factor(self.social_discount_rate, year as u32)
            .expect("social discount rate validated at construction")
    }
}

/// Total and annualized investment cost series for one asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostProfile {
    pub total_cost_by_year: Vec<f64>,
    pub annualized_cost_by_year: Vec<f64>,
    pub lifetime: u32,
}

impl CostProfile {
    /// Builds the profile from overnight costs, deriving constant annuities.
    pub fn from_total(
        total_cost_by_year: Vec<f64>,
        lifetime: u32,
        financial: &FinancialSpec,
        convention: AnnuityConvention,
    ) -> Result<Self> {
        financial.check_covers(total_cost_by_year.len())?;
        let annualized_cost_by_year = total_cost_by_year
            .iter()
            .enumerate()
            .map(|(y, &c)| annualize(c, financial.wacc(y), lifetime, convention))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            total_cost_by_year,
            annualized_cost_by_year,
            lifetime,
        })
    }

    /// Builds the profile from constant annuities, deriving overnight costs.
    pub fn from_annualized(
        annualized_cost_by_year: Vec<f64>,
        lifetime: u32,
        financial: &FinancialSpec,
        convention: AnnuityConvention,
    ) -> Result<Self> {
        if lifetime < 1 {
            return Err(FinanceError::ZeroLifetime(lifetime));
        }
        financial.check_covers(annualized_cost_by_year.len())?;
        let total_cost_by_year = annualized_cost_by_year
            .iter()
            .enumerate()
            .map(|(y, &a)| {
                check_cost(a)?;
                total_from_annuities(&vec![a; lifetime as usize], financial.wacc(y), convention)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            total_cost_by_year,
            annualized_cost_by_year,
            lifetime,
        })
    }

    pub fn total(&self, year: usize) -> f64 {
        self.total_cost_by_year[year]
    }

    pub fn annualized(&self, year: usize) -> f64 {
        self.annualized_cost_by_year[year]
    }

    /// Largest relative mismatch between the two series under `convention`.
    pub fn consistency_error(
        &self,
        financial: &FinancialSpec,
        convention: AnnuityConvention,
    ) -> Result<f64> {
        let mut worst = 0.0_f64;
        for (y, (&total, &annual)) in self
            .total_cost_by_year
            .iter()
            .zip(&self.annualized_cost_by_year)
            .enumerate()
        {
            let implied = total_from_annuities(
                &vec![annual; self.lifetime as usize],
                financial.wacc(y),
                convention,
            )?;
            let scale = total.abs().max(implied.abs());
            if scale > 0.0 {
                worst = worst.max((implied - total).abs() / scale);
            }
        }
        Ok(worst)
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !rate.is_finite() || rate <= -1.0 {
        return Err(FinanceError::RateOutOfRange(rate));
    }
    Ok(())
}

fn check_cost(cost: f64) -> Result<()> {
    if !cost.is_finite() || cost < 0.0 {
        return Err(FinanceError::InvalidCost(cost));
    }
    Ok(())
}

/// `1/(1+rate)^years_from_base`.
pub fn discount_factor(rate: f64, years_from_base: u32) -> Result<f64> {
    check_rate(rate)?;
    Ok((1.0 + rate).powi(-(years_from_base as i32)))
}

/// Constant annuity that repays `total_cost` over `lifetime` years.
pub fn annualize(
    total_cost: f64,
    wacc: f64,
    lifetime: u32,
    convention: AnnuityConvention,
) -> Result<f64> {
    if !wacc.is_finite() || wacc <= 0.0 {
        return Err(FinanceError::NonPositiveWacc(wacc));
    }
    if lifetime < 1 {
        return Err(FinanceError::ZeroLifetime(lifetime));
    }
    check_cost(total_cost)?;
    let growth = 1.0 + wacc;
    let tail = 1.0 - growth.powi(-(lifetime as i32));
    let factor = match convention {
        AnnuityConvention::FirstYearUndiscounted => wacc / (growth * tail),
        AnnuityConvention::FirstYearDiscounted => wacc / tail,
    };
    Ok(factor * total_cost)
}

/// Present value at the build year of an annuity stream (one entry per
/// lifetime year). Accepts non-constant profiles.
pub fn total_from_annuities(
    annuities: &[f64],
    wacc: f64,
    convention: AnnuityConvention,
) -> Result<f64> {
    if annuities.is_empty() {
        return Err(FinanceError::EmptyAnnuities);
    }
    check_rate(wacc)?;
    let growth = 1.0 + wacc;
    let first = convention.first_exponent();
    Ok(annuities
        .iter()
        .enumerate()
        .map(|(offset, a)| a * growth.powi(-(offset as i32 + first)))
        .sum())
}

/// Discounted annuity mass that falls strictly after `last_modelled_year`,
/// referenced to `build_year`.
pub fn salvage_value(
    annualized_cost: f64,
    wacc: f64,
    lifetime: u32,
    build_year: usize,
    last_modelled_year: usize,
) -> Result<f64> {
    if build_year > last_modelled_year {
        return Err(FinanceError::BuildAfterHorizon {
            build_year,
            last_modelled_year,
        });
    }
    check_rate(wacc)?;
    let growth = 1.0 + wacc;
    let end_of_life = build_year + lifetime as usize; // exclusive
    Ok(((last_modelled_year + 1)..end_of_life)
        .map(|j| annualized_cost * growth.powi(-((j - build_year) as i32)))
        .sum())
}

/// Salvage value as a share of the overnight cost.
pub fn salvage_percentage(salvage: f64, total_cost: f64) -> Result<f64> {
    if total_cost <= 0.0 || !total_cost.is_finite() {
        return Err(FinanceError::ZeroTotalCost);
    }
    Ok(salvage / total_cost)
}
