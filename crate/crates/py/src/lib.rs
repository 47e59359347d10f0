//! Python bindings for the multi-year cost formulations.

use multiyear::finance::{self, AnnuityConvention};
use multiyear::formulation::{self as form, Method};
use multiyear::horizon::{self as hz, SplitScheme, Weight};
use multiyear::lp::{self, SolveStatus};
use multiyear::report::{self, Format};
use multiyear::scenario::ScenarioDocument;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use std::collections::BTreeMap;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn convention(name: &str) -> PyResult<AnnuityConvention> {
    match name {
        "undiscounted" | "first_year_undiscounted" => Ok(AnnuityConvention::FirstYearUndiscounted),
        "discounted" | "first_year_discounted" => Ok(AnnuityConvention::FirstYearDiscounted),
        other => Err(PyValueError::new_err(format!(
            "unknown convention `{other}` (undiscounted, discounted)"
        ))),
    }
}

fn method(name: &str) -> PyResult<Method> {
    name.parse().map_err(PyValueError::new_err)
}

type Fractions<K> = BTreeMap<K, (i64, i64)>;

fn frac(w: Weight) -> (i64, i64) {
    (*w.numer(), *w.denom())
}

/// Annuity that repays `total_cost` over `lifetime` years.
#[pyfunction]
#[pyo3(signature = (total_cost, wacc, lifetime, convention = "undiscounted"))]
fn annualize(total_cost: f64, wacc: f64, lifetime: u32, convention: &str) -> PyResult<f64> {
    finance::annualize(total_cost, wacc, lifetime, self::convention(convention)?).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (annuities, wacc, convention = "undiscounted"))]
fn total_from_annuities(annuities: Vec<f64>, wacc: f64, convention: &str) -> PyResult<f64> {
    finance::total_from_annuities(&annuities, wacc, self::convention(convention)?)
        .map_err(value_err)
}

#[pyfunction]
fn salvage_value(
    annualized_cost: f64,
    wacc: f64,
    lifetime: u32,
    build_year: usize,
    last_modelled_year: usize,
) -> PyResult<f64> {
    finance::salvage_value(
        annualized_cost,
        wacc,
        lifetime,
        build_year,
        last_modelled_year,
    )
    .map_err(value_err)
}

#[pyfunction]
fn discount_factor(rate: f64, years_from_base: u32) -> PyResult<f64> {
    finance::discount_factor(rate, years_from_base).map_err(value_err)
}

/// Modelled years and the milestone subset. Weights come back as
/// `(numerator, denominator)` pairs.
#[pyclass(name = "Horizon", frozen)]
struct PyHorizon {
    inner: hz::Horizon,
}

#[pymethods]
impl PyHorizon {
    #[new]
    #[pyo3(signature = (total_years, milestones = None))]
    fn new(total_years: usize, milestones: Option<Vec<usize>>) -> PyResult<Self> {
        let inner = match milestones {
            Some(ms) => hz::Horizon::new(total_years, ms),
            None => hz::Horizon::yearly(total_years),
        }
        .map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn total_years(&self) -> usize {
        self.inner.total_years()
    }

    #[getter]
    fn milestones(&self) -> Vec<usize> {
        self.inner.milestones().to_vec()
    }

    fn is_yearly(&self) -> bool {
        self.inner.is_yearly()
    }

    /// Years each milestone stands for.
    fn interval_weights(&self) -> BTreeMap<usize, i64> {
        hz::milestone_interval_weights(&self.inner).iter().collect()
    }

    /// `{(m, y): weight}` mapping years onto milestones.
    fn year_map(&self) -> Fractions<(usize, usize)> {
        hz::linear_year_map(&self.inner)
            .iter()
            .map(|(k, w)| (k, frac(w)))
            .collect()
    }

    /// `{(m, mu): weight}`; `efficiency` switches to the weighted split.
    #[pyo3(signature = (lifetime, efficiency = None))]
    fn invest_op_split(
        &self,
        lifetime: u32,
        efficiency: Option<Vec<f64>>,
    ) -> PyResult<Fractions<(usize, usize)>> {
        let scheme = match efficiency {
            Some(v) => SplitScheme::efficiency_from_floats(&self.inner, &v).map_err(value_err)?,
            None => SplitScheme::EqualSplit,
        };
        Ok(hz::invest_op_split(&self.inner, lifetime, &scheme)
            .map_err(value_err)?
            .iter()
            .map(|(k, w)| (k, frac(w)))
            .collect())
    }

    /// `{(m, y, mu): weight}`.
    fn tri_weights(&self, lifetime: u32) -> PyResult<Fractions<(usize, usize, usize)>> {
        Ok(hz::tri_weights(&self.inner, lifetime)
            .map_err(value_err)?
            .iter()
            .map(|(k, w)| (k, frac(w)))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Horizon(total_years={}, milestones={:?})",
            self.inner.total_years(),
            self.inner.milestones()
        )
    }
}

/// A validated scenario, as read from a TOML file.
#[pyclass(name = "Scenario", frozen)]
struct PyScenario {
    doc: ScenarioDocument,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let doc = ScenarioDocument::from_toml(text).map_err(value_err)?;
        Ok(Self { doc })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let doc = multiyear::scenario::load_document(path).map_err(value_err)?;
        Ok(Self { doc })
    }

    fn to_toml(&self) -> String {
        self.doc.to_toml()
    }

    #[getter]
    fn name(&self) -> String {
        self.doc.scenario.name.clone()
    }

    #[getter]
    fn methods(&self) -> Vec<&'static str> {
        self.doc.methods.iter().map(|m| m.as_str()).collect()
    }

    #[getter]
    fn horizon(&self) -> PyHorizon {
        PyHorizon {
            inner: self.doc.scenario.horizon.clone(),
        }
    }

    #[getter]
    fn assets(&self) -> Vec<String> {
        self.doc
            .scenario
            .assets
            .iter()
            .map(|a| a.name.clone())
            .collect()
    }

    fn sha256(&self) -> String {
        report::scenario_hash(&self.doc.scenario)
    }

    fn build(&self, method: &str) -> PyResult<PyFormulation> {
        let inner = form::build(&self.doc.scenario, self::method(method)?).map_err(value_err)?;
        Ok(PyFormulation { inner })
    }

    /// Solve and compare; returns the report text in `format`
    /// (`json`, `csv` or `table`).
    #[pyo3(signature = (methods = None, format = "json"))]
    fn run(&self, py: Python<'_>, methods: Option<Vec<String>>, format: &str) -> PyResult<String> {
        let format: Format = format.parse().map_err(PyValueError::new_err)?;
        let methods = match methods {
            Some(names) => names
                .iter()
                .map(|n| self::method(n))
                .collect::<PyResult<Vec<_>>>()?,
            None if !self.doc.methods.is_empty() => self.doc.methods.clone(),
            None => {
                let yearly = self.doc.scenario.horizon.is_yearly();
                Method::ALL
                    .into_iter()
                    .filter(|m| yearly || !m.requires_yearly())
                    .collect()
            }
        };
        let scenario = &self.doc.scenario;
        let result = py.detach(|| report::run(scenario, &methods));
        match result {
            Ok(r) => Ok(report::emit(&r, format)),
            Err(e @ form::FormulationError::Solver { .. }) => {
                Err(PyRuntimeError::new_err(e.to_string()))
            }
            Err(e) => Err(value_err(e)),
        }
    }

    fn __repr__(&self) -> String {
        format!("Scenario(name={:?})", self.doc.scenario.name)
    }
}

/// One LP with its labelled objective terms.
#[pyclass(name = "Formulation", frozen)]
struct PyFormulation {
    inner: form::Formulation,
}

#[pymethods]
impl PyFormulation {
    #[getter]
    fn method(&self) -> &'static str {
        self.inner.method.as_str()
    }

    #[getter]
    fn columns(&self) -> Vec<String> {
        self.inner.variables.iter().map(|(_, v)| v.name()).collect()
    }

    #[getter]
    fn objective(&self) -> Vec<f64> {
        self.inner.objective.clone()
    }

    #[getter]
    fn num_rows(&self) -> usize {
        self.inner.constraints.len()
    }

    /// `[(label, kind, year, coefficient)]`.
    fn terms(&self) -> Vec<(String, &'static str, usize, f64)> {
        self.inner
            .terms
            .iter()
            .map(|t| {
                (
                    self.inner.term_label(t),
                    t.kind.as_str(),
                    t.year,
                    t.coefficient,
                )
            })
            .collect()
    }

    fn lp_text(&self) -> String {
        self.inner.to_lp_text()
    }

    /// `(status, objective, {column: value})`.
    fn solve(&self, py: Python<'_>) -> PyResult<(String, f64, BTreeMap<String, f64>)> {
        let lp = self.inner.to_lp();
        let out = py
            .detach(|| lp::solve(&lp))
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        let status = match out.status {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
        };
        let values = lp.column_names.iter().cloned().zip(out.primal).collect();
        Ok((status.to_string(), out.objective, values))
    }

    fn __repr__(&self) -> String {
        format!(
            "Formulation(method={:?}, columns={}, rows={})",
            self.inner.method.as_str(),
            self.inner.objective.len(),
            self.inner.constraints.len()
        )
    }
}

#[pymodule]
#[pyo3(name = "multiyear")]
fn python_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(annualize, m)?)?;
    m.add_function(wrap_pyfunction!(total_from_annuities, m)?)?;
    m.add_function(wrap_pyfunction!(salvage_value, m)?)?;
    m.add_function(wrap_pyfunction!(discount_factor, m)?)?;
    m.add_class::<PyHorizon>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyFormulation>()?;
    m.add(
        "METHODS",
        Method::ALL.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
    )?;
    Ok(())
}
