use super::{Asset, Demand, MethodOptions, RepPeriod, Scenario};
use crate::finance::{AnnuityConvention, CostProfile, FinancialSpec};
use crate::horizon::Horizon;

pub const R: f64 = 0.05;
pub const WACC: [f64; 6] = [0.02, 0.03, 0.04, 0.05, 0.06, 0.07];

pub fn fixture(lt: u32, horizon: Horizon) -> Scenario {
    let years = horizon.total_years();
    let financial = FinancialSpec::new(R, WACC[..years].to_vec()).unwrap();
    let total = (0..years).map(|y| 100.0 + 10.0 * y as f64).collect();
    let cost =
        CostProfile::from_total(total, lt, &financial, AnnuityConvention::default()).unwrap();
    let periods = vec![
        RepPeriod {
            steps: 2,
            weight_by_year: vec![8.0; years],
        },
        RepPeriod {
            steps: 1,
            weight_by_year: (0..years).map(|y| 4.0 + y as f64).collect(),
        },
    ];
    Scenario {
        name: "fixture".into(),
        horizon,
        financial,
        demand: Demand::constant(years, &periods, 1.0),
        periods,
        assets: vec![Asset {
            name: "gen".into(),
            cost,
            op_cost_by_year: (0..years).map(|y| 3.0 + y as f64).collect(),
            efficiency: None,
        }],
        options: MethodOptions::default(),
    }
}

pub fn milestones(lt: u32) -> Scenario {
    fixture(lt, Horizon::new(6, vec![0, 2, 5]).unwrap())
}
