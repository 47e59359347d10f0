//! Milestone bookkeeping and the four weight tables.
//!
//! All tables hold exact rationals; conversion to `f64` happens in the
//! formulation builders.
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub type Weight = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HorizonError {
    #[error("horizon must span at least one year")]
    EmptyHorizon,
    #[error("milestone list is empty")]
    NoMilestones,
    #[error("first milestone must be year 0, got {0}")]
    FirstMilestoneNotZero(usize),
    #[error("milestones must be strictly increasing ({prev} then {next})")]
    NotIncreasing { prev: usize, next: usize },
    #[error("milestone {milestone} is outside the horizon of {total_years} years")]
    OutOfRange {
        milestone: usize,
        total_years: usize,
    },
    #[error("lifetime must be at least one year")]
    ZeroLifetime,
    #[error("year {0} is not a milestone")]
    NotAMilestone(usize),
    #[error("efficiency for milestone {0} must be positive and finite")]
    BadEfficiency(usize),
    #[error("no efficiency given for milestone {0}")]
    MissingEfficiency(usize),
    #[error("no investment is active at operational milestone {0}")]
    NoActiveInvestment(usize),
}

pub type Result<T> = std::result::Result<T, HorizonError>;

/// Modelled span `0..total_years` with its milestone (investment) years.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Horizon {
    total_years: usize,
    milestones: Vec<usize>,
}

impl Horizon {
    pub fn new(total_years: usize, milestones: Vec<usize>) -> Result<Self> {
        if total_years == 0 {
            return Err(HorizonError::EmptyHorizon);
        }
        let first = *milestones.first().ok_or(HorizonError::NoMilestones)?;
        if first != 0 {
            return Err(HorizonError::FirstMilestoneNotZero(first));
        }
        for pair in milestones.windows(2) {
            if pair[1] <= pair[0] {
                return Err(HorizonError::NotIncreasing {
                    prev: pair[0],
                    next: pair[1],
                });
            }
        }
        let last = *milestones.last().unwrap();
        if last >= total_years {
            return Err(HorizonError::OutOfRange {
                milestone: last,
                total_years,
            });
        }
        Ok(Self {
            total_years,
            milestones,
        })
    }

    /// Every year is a milestone.
    pub fn yearly(total_years: usize) -> Result<Self> {
        Self::new(total_years, (0..total_years).collect())
    }

    pub fn total_years(&self) -> usize {
        self.total_years
    }

    pub fn last_year(&self) -> usize {
        self.total_years - 1
    }

    pub fn milestones(&self) -> &[usize] {
        &self.milestones
    }

    pub fn is_yearly(&self) -> bool {
        self.milestones.len() == self.total_years
    }

    pub fn is_milestone(&self, year: usize) -> bool {
        self.milestones.binary_search(&year).is_ok()
    }

    /// Last year an investment made at `build_year` is still producing,
    /// clipped to the horizon.
    pub fn window_end(&self, build_year: usize, lifetime: u32) -> usize {
        (build_year + lifetime as usize - 1).min(self.last_year())
    }
}

/// Number of calendar years each milestone stands for (`W^I`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilestoneWeights {
    weights: BTreeMap<usize, i64>,
}

impl MilestoneWeights {
    pub fn get(&self, milestone: usize) -> i64 {
        self.weights.get(&milestone).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.weights.iter().map(|(&m, &w)| (m, w))
    }

    pub fn total(&self) -> i64 {
        self.weights.values().sum()
    }
}

/// Fractional mapping of each calendar year onto milestones (`W^O`),
/// keyed by `(milestone, year)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YearMapWeights {
    entries: BTreeMap<(usize, usize), Weight>,
}

impl YearMapWeights {
    pub fn get(&self, milestone: usize, year: usize) -> Weight {
        self.entries
            .get(&(milestone, year))
            .copied()
            .unwrap_or_else(Weight::zero)
    }

    /// Non-zero `(milestone, weight)` pairs for one calendar year.
    pub fn row(&self, year: usize) -> Vec<(usize, Weight)> {
        self.entries
            .iter()
            .filter(|((_, y), _)| *y == year)
            .map(|(&(m, _), &w)| (m, w))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), Weight)> + '_ {
        self.entries.iter().map(|(&k, &w)| (k, w))
    }
}

/// Share of an operational milestone's production attributed to each
/// investment milestone (`W^M`), keyed by `(investment, operational)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvestOpWeights {
    entries: BTreeMap<(usize, usize), Weight>,
}

impl InvestOpWeights {
    pub fn get(&self, invest: usize, operational: usize) -> Weight {
        self.entries
            .get(&(invest, operational))
            .copied()
            .unwrap_or_else(Weight::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), Weight)> + '_ {
        self.entries.iter().map(|(&k, &w)| (k, w))
    }
}

/// Lifetime-masked weight of investment `m` on year `y` and operational
/// milestone `mu` (`W^Y`), keyed by `(m, y, mu)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriWeights {
    entries: BTreeMap<(usize, usize, usize), Weight>,
}

impl TriWeights {
    pub fn get(&self, invest: usize, year: usize, operational: usize) -> Weight {
        self.entries
            .get(&(invest, year, operational))
            .copied()
            .unwrap_or_else(Weight::zero)
    }

    /// Non-zero `(mu, weight)` pairs for a given investment and year.
    pub fn slice(&self, invest: usize, year: usize) -> Vec<(usize, Weight)> {
        self.entries
            .range((invest, year, 0)..=(invest, year, usize::MAX))
            .map(|(&(_, _, mu), &w)| (mu, w))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize, usize), Weight)> + '_ {
        self.entries.iter().map(|(&k, &w)| (k, w))
    }
}

/// How production at an operational milestone is split across vintages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitScheme {
    EqualSplit,
    /// Relative efficiency per investment milestone.
    EfficiencyWeighted(BTreeMap<usize, Weight>),
}

impl SplitScheme {
    /// Efficiencies given as floats, one per milestone in order.
    pub fn efficiency_from_floats(horizon: &Horizon, values: &[f64]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, &m) in horizon.milestones().iter().enumerate() {
            let v = *values.get(i).ok_or(HorizonError::MissingEfficiency(m))?;
            if !v.is_finite() || v <= 0.0 {
                return Err(HorizonError::BadEfficiency(m));
            }
            let r = Weight::approximate_float(v).ok_or(HorizonError::BadEfficiency(m))?;
            map.insert(m, r);
        }
        Ok(SplitScheme::EfficiencyWeighted(map))
    }
}

pub fn milestone_interval_weights(horizon: &Horizon) -> MilestoneWeights {
    let ms = horizon.milestones();
    let weights = ms
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let next = ms.get(i + 1).copied().unwrap_or(horizon.total_years());
            (m, (next - m) as i64)
        })
        .collect();
    MilestoneWeights { weights }
}

pub fn linear_year_map(horizon: &Horizon) -> YearMapWeights {
    let ms = horizon.milestones();
    let mut entries = BTreeMap::new();
    for y in 0..horizon.total_years() {
        // milestones[0] == 0, so a lower neighbour always exists
        let lower_idx = ms.partition_point(|&m| m <= y) - 1;
        let a = ms[lower_idx];
        match ms.get(lower_idx + 1) {
            Some(&b) if a != y => {
                let span = (b - a) as i64;
                entries.insert((a, y), Weight::new((b - y) as i64, span));
                entries.insert((b, y), Weight::new((y - a) as i64, span));
            }
            _ => {
                entries.insert((a, y), Weight::one());
            }
        }
    }
    YearMapWeights { entries }
}

/// Investment milestones whose lifetime window contains `operational`.
pub fn active_investments(horizon: &Horizon, lifetime: u32, operational: usize) -> Vec<usize> {
    horizon
        .milestones()
        .iter()
        .copied()
        .filter(|&m| m <= operational && operational < m + lifetime as usize)
        .collect()
}

pub fn invest_op_split(
    horizon: &Horizon,
    lifetime: u32,
    scheme: &SplitScheme,
) -> Result<InvestOpWeights> {
    if lifetime == 0 {
        return Err(HorizonError::ZeroLifetime);
    }
    let mut entries = BTreeMap::new();
    for &mu in horizon.milestones() {
        let active = active_investments(horizon, lifetime, mu);
        if active.is_empty() {
            return Err(HorizonError::NoActiveInvestment(mu));
        }
        match scheme {
            SplitScheme::EqualSplit => {
                let share = Weight::new(1, active.len() as i64);
                for m in active {
                    entries.insert((m, mu), share);
                }
            }
            SplitScheme::EfficiencyWeighted(eff) => {
                let effs = active
                    .iter()
                    .map(|m| {
                        let e = *eff.get(m).ok_or(HorizonError::MissingEfficiency(*m))?;
                        if e <= Weight::zero() {
                            return Err(HorizonError::BadEfficiency(*m));
                        }
                        Ok(e)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let total: Weight = effs.iter().copied().sum();
                for (m, e) in active.into_iter().zip(effs) {
                    entries.insert((m, mu), e / total);
                }
            }
        }
    }
    Ok(InvestOpWeights { entries })
}

pub fn tri_weights(horizon: &Horizon, lifetime: u32) -> Result<TriWeights> {
    if lifetime == 0 {
        return Err(HorizonError::ZeroLifetime);
    }
    let year_map = linear_year_map(horizon);
    let mut entries = BTreeMap::new();
    for &m in horizon.milestones() {
        let reach_end = m + lifetime as usize - 1;
        let reachable: Vec<usize> = horizon
            .milestones()
            .iter()
            .copied()
            .filter(|&mu| m <= mu && mu <= reach_end)
            .collect();
        for y in m..=horizon.window_end(m, lifetime) {
            for (mu, w) in year_map.row(y) {
                // masked columns hand their mass to the closest reachable milestone
                let target = if reachable.contains(&mu) {
                    mu
                } else {
                    *reachable
                        .iter()
                        .min_by_key(|&&r| r.abs_diff(mu))
                        .expect("investment milestone is always reachable from itself")
                };
                *entries.entry((m, y, target)).or_insert_with(Weight::zero) += w;
            }
        }
    }
    Ok(TriWeights { entries })
}

/// One line of the weight-table CSV dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub table: String,
    pub asset: Option<String>,
    pub m: usize,
    pub y: Option<usize>,
    pub mu: Option<usize>,
    /// Exact value, e.g. `2/3`.
    pub weight: String,
    pub value: f64,
}

fn record(
    table: &str,
    asset: Option<&str>,
    m: usize,
    y: Option<usize>,
    mu: Option<usize>,
    w: Weight,
) -> WeightRecord {
    WeightRecord {
        table: table.to_string(),
        asset: asset.map(str::to_string),
        m,
        y,
        mu,
        weight: w.to_string(),
        value: to_f64(w),
    }
}

pub fn to_f64(w: Weight) -> f64 {
    *w.numer() as f64 / *w.denom() as f64
}

/// Records for the horizon-only tables (`W^I`, `W^O`).
pub fn horizon_records(horizon: &Horizon) -> Vec<WeightRecord> {
    let mut out: Vec<WeightRecord> = milestone_interval_weights(horizon)
        .iter()
        .map(|(m, w)| record("w_invest", None, m, None, None, Weight::from_integer(w)))
        .collect();
    out.extend(
        linear_year_map(horizon)
            .iter()
            .map(|((m, y), w)| record("w_year_map", None, m, Some(y), None, w)),
    );
    out
}

/// Records for the lifetime-dependent tables (`W^M`, `W^Y`) of one asset.
pub fn asset_records(
    horizon: &Horizon,
    asset: &str,
    lifetime: u32,
    scheme: &SplitScheme,
) -> Result<Vec<WeightRecord>> {
    let mut out: Vec<WeightRecord> = invest_op_split(horizon, lifetime, scheme)?
        .iter()
        .map(|((m, mu), w)| record("w_invest_op", Some(asset), m, None, Some(mu), w))
        .collect();
    out.extend(
        tri_weights(horizon, lifetime)?
            .iter()
            .map(|((m, y, mu), w)| record("w_tri", Some(asset), m, Some(y), Some(mu), w)),
    );
    Ok(out)
}

pub fn write_weight_csv<W: std::io::Write>(records: &[WeightRecord], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["table", "asset", "m", "y", "mu", "weight", "value"])?;
    let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            r.table.as_str(),
            r.asset.as_deref().unwrap_or(""),
            &r.m.to_string(),
            &opt(r.y),
            &opt(r.mu),
            &r.weight,
            &crate::numfmt::sig12(r.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}
