#![allow(dead_code)]

use multiyear::finance::{AnnuityConvention, CostProfile, FinancialSpec};
use multiyear::formulation::{Asset, Demand, MethodOptions, RepPeriod, Scenario};
use multiyear::horizon::Horizon;
use multiyear::lp::{Row, Sense, StandardLP};
use multiyear::scenario::load_scenario;
use rand::Rng;
use std::path::PathBuf;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.toml"))
}

pub fn bundled(name: &str) -> Scenario {
    load_scenario(fixture_path(name)).expect("bundled scenario loads")
}

/// Same scenario with every asset's lifetime replaced; annuities re-derived
/// from the overnight costs.
pub fn with_lifetime(s: &Scenario, lifetime: u32) -> Scenario {
    let mut out = s.clone();
    for a in &mut out.assets {
        a.cost = CostProfile::from_total(
            a.cost.total_cost_by_year.clone(),
            lifetime,
            &s.financial,
            s.options.convention,
        )
        .unwrap();
    }
    out
}

fn series(rng: &mut impl Rng, years: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..years).map(|_| rng.random_range(lo..hi)).collect()
}

/// A random but always feasible scenario on `horizon`.
pub fn random_scenario(rng: &mut impl Rng, horizon: Horizon, max_lifetime: u32) -> Scenario {
    let years = horizon.total_years();
    let financial =
        FinancialSpec::new(rng.random_range(0.0..0.12), series(rng, years, 0.01, 0.15)).unwrap();
    let periods: Vec<RepPeriod> = (0..rng.random_range(1..=2))
        .map(|_| RepPeriod {
            steps: rng.random_range(1..=2),
            weight_by_year: series(rng, years, 1.0, 100.0),
        })
        .collect();
    let assets = (0..rng.random_range(1..=2))
        .map(|i| {
            let lifetime = rng.random_range(1..=max_lifetime);
            Asset {
                name: format!("asset{i}"),
                cost: CostProfile::from_total(
                    series(rng, years, 50.0, 2000.0),
                    lifetime,
                    &financial,
                    AnnuityConvention::FirstYearUndiscounted,
                )
                .unwrap(),
                op_cost_by_year: series(rng, years, 0.0, 5.0),
                efficiency: None,
            }
        })
        .collect();
    let demand = Demand::new(
        (0..years)
            .map(|_| {
                periods
                    .iter()
                    .map(|p| series(rng, p.steps, 0.0, 100.0))
                    .collect()
            })
            .collect(),
    );
    Scenario {
        name: "random".into(),
        horizon,
        financial,
        periods,
        assets,
        demand,
        options: MethodOptions::default(),
    }
}

pub fn random_yearly(rng: &mut impl Rng, max_years: usize, max_lifetime: u32) -> Scenario {
    let years = rng.random_range(1..=max_years);
    random_scenario(rng, Horizon::yearly(years).unwrap(), max_lifetime)
}

pub fn random_milestones(rng: &mut impl Rng, max_years: usize, max_lifetime: u32) -> Scenario {
    let years = rng.random_range(2..=max_years);
    let mut ms = vec![0];
    ms.extend((1..years).filter(|_| rng.random_bool(0.4)));
    random_scenario(rng, Horizon::new(years, ms).unwrap(), max_lifetime)
}

/// Random bounded LP: a budget row `sum x <= U` keeps every instance bounded.
pub fn random_lp(rng: &mut impl Rng, max_columns: usize) -> StandardLP {
    let n = rng.random_range(1..=max_columns);
    let m = rng.random_range(1..=5);
    let mut rows: Vec<Row> = (0..m)
        .map(|i| {
            let sense = match rng.random_range(0..3) {
                0 => Sense::Le,
                1 => Sense::Ge,
                _ => Sense::Eq,
            };
            Row {
                name: format!("r{i}"),
                coefficients: (0..n)
                    .filter_map(|j| {
                        let keep = rng.random_bool(0.7);
                        let c = rng.random_range(-5..=5) as f64;
                        keep.then_some((j, c))
                    })
                    .collect(),
                sense,
                rhs: rng.random_range(-10..=20) as f64,
            }
        })
        .collect();
    rows.push(Row {
        name: "budget".into(),
        coefficients: (0..n).map(|j| (j, 1.0)).collect(),
        sense: Sense::Le,
        rhs: rng.random_range(1..=30) as f64,
    });
    StandardLP {
        column_names: (0..n).map(|j| format!("x{j}")).collect(),
        objective: (0..n).map(|_| rng.random_range(-10..=10) as f64).collect(),
        rows,
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    let pivot = a[c].clone();
                    for (v, p) in a[r][c..].iter_mut().zip(&pivot[c..]) {
                        *v -= f * p;
                    }
                    b[r] -= f * b[c];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Minimum over all basic feasible solutions; `None` when there is none.
/// Exact for bounded LPs with `x >= 0`, whose feasible set is pointed.
pub fn vertex_enumeration(lp: &StandardLP) -> Option<f64> {
    let n = lp.num_columns();
    // constraint i < rows: row i; otherwise bound x_{i - rows} >= 0
    let dense: Vec<Vec<f64>> = lp
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![0.0; n];
            for &(j, c) in &r.coefficients {
                v[j] += c;
            }
            v
        })
        .collect();
    let m = dense.len();
    let mut best: Option<f64> = None;
    combinations(m + n, n, &mut |active| {
        let (a, b): (Vec<Vec<f64>>, Vec<f64>) = active
            .iter()
            .map(|&i| {
                if i < m {
                    (dense[i].clone(), lp.rows[i].rhs)
                } else {
                    let mut e = vec![0.0; n];
                    e[i - m] = 1.0;
                    (e, 0.0)
                }
            })
            .unzip();
        let Some(x) = solve_square(a, b) else {
            return;
        };
        if x.iter().any(|&v| v < -1e-9) {
            return;
        }
        if lp.rows.iter().any(|r| r.violation(&x) > 1e-9) {
            return;
        }
        let z = lp.objective_value(&x);
        best = Some(best.map_or(z, |b: f64| b.min(z)));
    });
    best
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
