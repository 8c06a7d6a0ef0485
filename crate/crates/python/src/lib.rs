//! Python bindings: `import delreg`.

use delreg_core::advisor::{self, PatternSpec};
use delreg_core::simulation::{self, ReproduceOptions, SimSetting, TableId};
use delreg_core::{
    covariance, estimate_kappa, fit, observation_proportions, v_matrices, v_single, CovarianceModel,
    Dataset, KappaMethod, Method, ProportionSet,
};
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, value: serde_json::Value) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(&value).map_err(value_error)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(value_error)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

fn square(values: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let d = values.len();
    if values.iter().any(|r| r.len() != d) {
        return Err(value_error("matrix must be square"));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| values[i][j]))
}

/// Numeric table with missing cells. `None` or NaN marks a missing value.
#[pyclass(name = "Dataset", frozen, skip_from_py_object)]
pub struct PyDataset {
    inner: Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (rows, response, names=None))]
    fn new(rows: Vec<Vec<Option<f64>>>, response: usize, names: Option<Vec<String>>) -> PyResult<Self> {
        let values: Vec<Vec<f64>> =
            rows.iter().map(|r| r.iter().map(|v| v.unwrap_or(f64::NAN)).collect()).collect();
        let mask: Vec<Vec<bool>> =
            rows.iter().map(|r| r.iter().map(|v| v.is_some_and(|x| !x.is_nan())).collect()).collect();
        let mut inner = Dataset::from_rows(&values, &mask, response).map_err(value_error)?;
        if let Some(names) = names {
            inner = inner.with_names(names).map_err(value_error)?;
        }
        Ok(Self { inner })
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn response_index(&self) -> usize {
        self.inner.response_index()
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    /// Rows with `None` for missing cells.
    fn rows(&self) -> Vec<Vec<Option<f64>>> {
        let d = &self.inner;
        (0..d.n_rows())
            .map(|i| (0..d.n_cols()).map(|j| d.is_observed(i, j).then(|| d.value(i, j))).collect())
            .collect()
    }

    /// Coefficients, effective sample size and the positive-definiteness flag.
    #[pyo3(signature = (method="cc"))]
    fn fit(&self, py: Python<'_>, method: &str) -> PyResult<Py<PyAny>> {
        let f = fit(&self.inner, parse(method)?).map_err(value_error)?;
        to_py(
            py,
            serde_json::json!({
                "method": f.method.to_string(),
                "beta": f.beta_hat.as_slice(),
                "n_effective": f.n_effective,
                "positive_definite": f.cov_estimate.pd,
            }),
        )
    }

    /// Covariance estimate in model order (predictors, then response) and
    /// whether it is positive definite.
    #[pyo3(signature = (method="ac"))]
    fn covariance(&self, method: &str) -> PyResult<(Vec<Vec<f64>>, bool)> {
        let est = covariance(&self.inner, parse(method)?).map_err(value_error)?;
        Ok((rows(&est.matrix), est.pd))
    }

    #[pyo3(signature = (method="marginal"))]
    fn kappa(&self, method: &str) -> PyResult<f64> {
        let m: KappaMethod = parse(method)?;
        Ok(estimate_kappa(&self.inner, m).map_err(value_error)?.value)
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n_rows={}, names={:?})", self.inner.n_rows(), self.inner.names())
    }
}

/// Joint covariance of predictors and response, with kurtosis parameter κ.
#[pyclass(name = "Model", frozen, skip_from_py_object)]
pub struct PyModel {
    inner: CovarianceModel,
}

#[pymethods]
impl PyModel {
    /// `sigma` is the full covariance; the response defaults to the last column.
    #[new]
    #[pyo3(signature = (sigma, response=None, kappa=0.0))]
    fn new(sigma: Vec<Vec<f64>>, response: Option<usize>, kappa: f64) -> PyResult<Self> {
        let sigma = square(&sigma)?;
        let response = response.unwrap_or(sigma.nrows().saturating_sub(1));
        let inner = CovarianceModel::partition(&sigma, response)
            .and_then(|m| m.with_kappa(kappa))
            .map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (sigma_x, beta, resid_var, kappa=0.0))]
    fn from_parts(sigma_x: Vec<Vec<f64>>, beta: Vec<f64>, resid_var: f64, kappa: f64) -> PyResult<Self> {
        let inner = CovarianceModel::from_parts(&square(&sigma_x)?, &DVector::from_vec(beta), resid_var)
            .and_then(|m| m.with_kappa(kappa))
            .map_err(value_error)?;
        Ok(Self { inner })
    }

    fn with_kappa(&self, kappa: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.clone().with_kappa(kappa).map_err(value_error)? })
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn beta(&self) -> Vec<f64> {
        self.inner.beta().as_slice().to_vec()
    }

    #[getter]
    fn resid_var(&self) -> f64 {
        self.inner.resid_var()
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa()
    }

    #[getter]
    fn sigma(&self) -> Vec<Vec<f64>> {
        rows(self.inner.sigma())
    }

    fn __repr__(&self) -> String {
        format!("Model(p={}, beta={:?}, kappa={})", self.inner.p(), self.inner.beta().as_slice(), self.inner.kappa())
    }
}

/// Missing-data pattern. Column 0 is the target predictor for the nested
/// patterns `a` and `b`.
#[pyclass(name = "Pattern", frozen, skip_from_py_object)]
pub struct PyPattern {
    inner: PatternSpec,
}

#[pymethods]
impl PyPattern {
    /// The first predictor is observed at least as often as the rest.
    #[staticmethod]
    fn a(q1: f64, q_rest: f64) -> PyResult<Self> {
        Ok(Self { inner: PatternSpec::pattern_a(q1, q_rest).map_err(value_error)? })
    }

    /// The first predictor is observed at most as often as the rest.
    #[staticmethod]
    fn b(q1: f64, q_rest: f64) -> PyResult<Self> {
        Ok(Self { inner: PatternSpec::pattern_b(q1, q_rest).map_err(value_error)? })
    }

    /// Columns (predictors, then response) missing independently.
    #[staticmethod]
    fn independent(q: Vec<f64>) -> PyResult<Self> {
        let props = ProportionSet::independent(&q).map_err(value_error)?;
        Ok(Self { inner: PatternSpec::general(props) })
    }

    /// Empirical pattern of a dataset.
    #[staticmethod]
    fn observed(dataset: PyRef<'_, PyDataset>) -> PyResult<Self> {
        let props = observation_proportions(&dataset.inner).map_err(value_error)?;
        Ok(Self { inner: PatternSpec::general(props) })
    }

    #[getter]
    fn kind(&self) -> String {
        format!("{:?}", self.inner.kind).to_uppercase()
    }

    /// Proportion of rows observing every listed column.
    fn q(&self, columns: Vec<usize>, dim: usize) -> PyResult<f64> {
        Ok(self.inner.proportions(dim).map_err(value_error)?.q(&columns))
    }
}

/// `{"v_cc", "v_ac", "v_d"}` matrices at sample size `n`.
#[pyfunction]
fn variances(py: Python<'_>, model: PyRef<'_, PyModel>, pattern: PyRef<'_, PyPattern>, n: f64) -> PyResult<Py<PyAny>> {
    let props = pattern.inner.proportions(model.inner.dim()).map_err(value_error)?;
    let r = v_matrices(&model.inner, &props, n).map_err(value_error)?;
    to_py(
        py,
        serde_json::json!({"v_cc": rows(&r.v_cc), "v_ac": rows(&r.v_ac), "v_d": rows(&r.v_d)}),
    )
}

/// Asymptotic variance of one coefficient under one estimator.
#[pyfunction]
#[pyo3(signature = (model, pattern, n, method, target=0))]
fn variance(
    model: PyRef<'_, PyModel>,
    pattern: PyRef<'_, PyPattern>,
    n: f64,
    method: &str,
    target: usize,
) -> PyResult<f64> {
    let props = pattern.inner.proportions(model.inner.dim()).map_err(value_error)?;
    let m: Method = parse(method)?;
    v_single(&model.inner, &props, n, m, target).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (model, pattern, n, target=0))]
fn advise(
    py: Python<'_>,
    model: PyRef<'_, PyModel>,
    pattern: PyRef<'_, PyPattern>,
    n: f64,
    target: usize,
) -> PyResult<Py<PyAny>> {
    let rec = advisor::advise(&model.inner, &pattern.inner, n, target).map_err(value_error)?;
    to_py(py, serde_json::to_value(&rec).map_err(value_error)?)
}

/// Monte Carlo variances for numbered setting 1 to 5.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (setting, n, pattern, seed, inner=10_000, outer=100, target=0))]
fn simulate(
    py: Python<'_>,
    setting: u8,
    n: usize,
    pattern: PyRef<'_, PyPattern>,
    seed: u64,
    inner: usize,
    outer: usize,
    target: usize,
) -> PyResult<Py<PyAny>> {
    let s = SimSetting::numbered(setting, n, pattern.inner.clone())
        .and_then(|s| s.with_replicates(inner, outer))
        .and_then(|s| s.with_target(target))
        .map_err(value_error)?;
    let mc = py.detach(|| simulation::run_mc(&s, seed)).map_err(value_error)?;
    to_py(py, serde_json::to_value(&mc).map_err(value_error)?)
}

/// One of the reference tables: T4, S1, S2, S3 or FIG3.
#[pyfunction]
#[pyo3(signature = (table, seed, inner=10_000, outer=100, theory_only=false))]
fn reproduce(
    py: Python<'_>,
    table: &str,
    seed: u64,
    inner: usize,
    outer: usize,
    theory_only: bool,
) -> PyResult<Py<PyAny>> {
    let id: TableId = parse(table)?;
    let opts = ReproduceOptions { seed, inner, outer, theory_only };
    let report = py.detach(|| simulation::reproduce_table(id, &opts)).map_err(value_error)?;
    to_py(py, serde_json::to_value(&report).map_err(value_error)?)
}

#[pymodule]
pub fn delreg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyPattern>()?;
    m.add_function(wrap_pyfunction!(variances, m)?)?;
    m.add_function(wrap_pyfunction!(variance, m)?)?;
    m.add_function(wrap_pyfunction!(advise, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    Ok(())
}
