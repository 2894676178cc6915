//! Python bindings. Matrices and weights are opaque handles built from rows
//! or catalog rules; reports come back as plain dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hsl_core::adaptive::{doob_components, martingale_bound};
use hsl_core::covfactor::{cholesky_lower, verify_factorization as verify_factor};
use hsl_core::innovations::sample_innovations;
use hsl_core::simulate::{build_path, exact_tail_sup, mc_expected_sup};
use hsl_core::stoptime::{fourth_moment_ratio as moment_ratio, verify_stopping_inequality};
use hsl_core::{catalog, coeffs, io, simulate, BoundReport, EnumCap, Embedding, InnovationLaw, InnovationSpec, Method, SeriesModel};

fn err(e: hsl_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "CoefficientMatrix", module = "hsl", frozen)]
struct PyMatrix(hsl_core::CoefficientMatrix);

#[pymethods]
impl PyMatrix {
    /// Row `n` holds `a(n,1)..a(n,n)`.
    #[staticmethod]
    fn from_rows(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        hsl_core::CoefficientMatrix::from_rows(&rows).map(Self).map_err(err)
    }

    /// Catalog rule (`fgn0`, `power:alpha=2`, `collinear:geometric`, ...) or a `trimat` path.
    #[staticmethod]
    fn rule(text: &str, order: usize) -> PyResult<Self> {
        catalog::parse_matrix(text, order).map(Self).map_err(err)
    }

    /// Lower-triangular factor of a covariance rule (`fgn:H=0.3`, `identity`) or `covmat` path.
    #[staticmethod]
    fn factor(cov: &str, size: usize) -> PyResult<Self> {
        let spec = catalog::parse_covariance(cov, size).map_err(err)?;
        cholesky_lower(&spec).map(Self).map_err(err)
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    #[getter]
    fn label(&self) -> String {
        self.0.label().to_string()
    }

    #[getter]
    fn is_complex(&self) -> bool {
        self.0.is_complex()
    }

    /// Real part of `a(n,k)`.
    fn get(&self, n: usize, k: usize) -> PyResult<f64> {
        self.0.get_re(n, k).map_err(err)
    }

    fn row(&self, n: usize) -> PyResult<Vec<f64>> {
        Ok(self.0.row(n).map_err(err)?.into_iter().map(|z| z.re).collect())
    }

    #[pyo3(signature = (rows=None))]
    fn to_trimat(&self, rows: Option<usize>) -> PyResult<String> {
        io::write_trimat(&self.0, rows.unwrap_or(self.0.order())).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("CoefficientMatrix(label={:?}, order={})", self.0.label(), self.0.order())
    }
}

#[pyclass(name = "Weights", module = "hsl", frozen)]
struct PyWeights(hsl_core::VectorWeights);

#[pymethods]
impl PyWeights {
    #[staticmethod]
    fn from_vectors(vectors: Vec<Vec<f64>>) -> PyResult<Self> {
        hsl_core::VectorWeights::from_vectors(&vectors).map(Self).map_err(err)
    }

    /// Catalog rule (`geometric`, `harmonic:d=3`, `trig:alpha=1`, ...) or a `vecs` path.
    #[staticmethod]
    fn rule(text: &str, order: usize) -> PyResult<Self> {
        catalog::parse_weights(text, order).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn norm_sq(&self, n: usize) -> PyResult<f64> {
        self.0.norm_sq(n).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Weights(label={:?}, dim={})", self.0.label(), self.0.dim())
    }
}

fn model(matrix: &PyMatrix, weights: Option<&PyWeights>) -> SeriesModel {
    let m = SeriesModel::new(matrix.0.clone());
    match weights {
        Some(w) => m.with_weights(w.0.clone()),
        None => m,
    }
}

fn spec(dist: &str, dim: usize, embedding: Option<&str>) -> PyResult<InnovationSpec> {
    let law: InnovationLaw = dist.parse().map_err(err)?;
    let embedding: Embedding = match embedding {
        Some(e) => e.parse().map_err(err)?,
        None if dim == 1 => Embedding::Scalar,
        None => Embedding::AxisCycling,
    };
    InnovationSpec::new(law, dim, embedding).map_err(err)
}

fn method(exact: bool, replicas: u64, seed: u64) -> PyResult<Method> {
    Ok(if exact { Method::Exact(EnumCap::from_env().map_err(err)?) } else { Method::monte_carlo(replicas, seed) })
}

fn bound_dict<'py>(py: Python<'py>, b: &BoundReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("method", b.method)?;
    d.set_item("lhs", b.lhs)?;
    d.set_item("lhs_se", b.lhs_se)?;
    d.set_item("rhs", b.rhs)?;
    d.set_item("rhs_se", b.rhs_se)?;
    d.set_item("margin", b.margin)?;
    d.set_item("verdict", b.verdict.label())?;
    Ok(d)
}

/// Truncated criterion with its diagonal profile and convergence flag.
#[pyfunction]
#[pyo3(signature = (matrix, n, k, *, policy="stagnation", weights=None))]
fn criterion_sum<'py>(
    py: Python<'py>,
    matrix: &PyMatrix,
    n: usize,
    k: usize,
    policy: &str,
    weights: Option<&PyWeights>,
) -> PyResult<Bound<'py, PyDict>> {
    let policy = policy.parse().map_err(err)?;
    let p = match weights {
        Some(w) => coeffs::weighted_criterion_sum(&matrix.0, &w.0, n, k, policy),
        None => coeffs::criterion_sum(&matrix.0, n, k, policy),
    }
    .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("value", p.value())?;
    d.set_item("converged", p.converged())?;
    d.set_item("flag", p.flag.describe())?;
    d.set_item("applied_policy", p.applied_policy.name())?;
    d.set_item("tail_bound", p.tail_bound)?;
    d.set_item("norms", p.norms.clone())?;
    d.set_item("partial_criterion", p.partial_criterion.clone())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (matrix, n, *, weights=None))]
fn levy_bound(matrix: &PyMatrix, n: usize, weights: Option<&PyWeights>) -> PyResult<f64> {
    model(matrix, weights).levy_bound(n).map_err(err)
}

/// `A_N`, `B_N` and `2 (A_N + B_N)` with inner cutoff `k`.
#[pyfunction]
#[pyo3(signature = (matrix, n, k, *, weights=None))]
fn tail_report<'py>(py: Python<'py>, matrix: &PyMatrix, n: usize, k: usize, weights: Option<&PyWeights>) -> PyResult<Bound<'py, PyDict>> {
    let t = model(matrix, weights).tail_report(n, k).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("a", t.a)?;
    d.set_item("b", t.b)?;
    d.set_item("bound_rhs", t.bound_rhs)?;
    Ok(d)
}

/// `E sup_{n<=N} |S_n|` by enumeration or Monte Carlo.
#[pyfunction]
#[pyo3(signature = (matrix, n, *, weights=None, dist="rademacher", dim=1, embedding=None, exact=false, replicas=100_000, seed=1))]
#[allow(clippy::too_many_arguments)]
fn expected_sup<'py>(
    py: Python<'py>,
    matrix: &PyMatrix,
    n: usize,
    weights: Option<&PyWeights>,
    dist: &str,
    dim: usize,
    embedding: Option<&str>,
    exact: bool,
    replicas: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let (model, spec) = (model(matrix, weights), spec(dist, dim, embedding)?);
    let d = PyDict::new(py);
    match method(exact, replicas, seed)? {
        Method::Exact(cap) => {
            d.set_item("mean", exact_tail_sup(&model, &spec, 0, n, cap).map_err(err)?)?;
            d.set_item("std_error", None::<f64>)?;
        }
        Method::MonteCarlo { replicas, seed } => {
            let e = mc_expected_sup(&model, &spec, n, replicas, seed).map_err(err)?;
            d.set_item("mean", e.mean)?;
            d.set_item("std_error", e.std_error)?;
        }
    }
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (matrix, n, *, weights=None, dist="rademacher", dim=1, embedding=None, exact=false, replicas=100_000, seed=1))]
#[allow(clippy::too_many_arguments)]
fn verify_levy<'py>(
    py: Python<'py>,
    matrix: &PyMatrix,
    n: usize,
    weights: Option<&PyWeights>,
    dist: &str,
    dim: usize,
    embedding: Option<&str>,
    exact: bool,
    replicas: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = simulate::verify_levy(&model(matrix, weights), &spec(dist, dim, embedding)?, n, method(exact, replicas, seed)?)
        .map_err(err)?;
    bound_dict(py, &r)
}

/// Tail sup over `S_{N+l} - S_N`, `l <= m`, against `2 (A_N + B_N)`.
#[pyfunction]
#[pyo3(signature = (matrix, n, m, *, weights=None, dist="rademacher", dim=1, embedding=None, exact=false, replicas=100_000, seed=1))]
#[allow(clippy::too_many_arguments)]
fn verify_tail<'py>(
    py: Python<'py>,
    matrix: &PyMatrix,
    n: usize,
    m: usize,
    weights: Option<&PyWeights>,
    dist: &str,
    dim: usize,
    embedding: Option<&str>,
    exact: bool,
    replicas: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let (r, t) = simulate::verify_tail(&model(matrix, weights), &spec(dist, dim, embedding)?, n, m, method(exact, replicas, seed)?)
        .map_err(err)?;
    let d = bound_dict(py, &r)?;
    d.set_item("a", t.a)?;
    d.set_item("b", t.b)?;
    Ok(d)
}

/// First-crossing inequality, one dict per level.
#[pyfunction]
#[pyo3(signature = (matrix, n, levels, *, weights=None, dist="rademacher", dim=1, embedding=None, exact=false, replicas=100_000, seed=1))]
#[allow(clippy::too_many_arguments)]
fn verify_stopping<'py>(
    py: Python<'py>,
    matrix: &PyMatrix,
    n: usize,
    levels: Vec<f64>,
    weights: Option<&PyWeights>,
    dist: &str,
    dim: usize,
    embedding: Option<&str>,
    exact: bool,
    replicas: u64,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let reports =
        verify_stopping_inequality(&model(matrix, weights), &spec(dist, dim, embedding)?, n, &levels, method(exact, replicas, seed)?)
            .map_err(err)?;
    reports
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("level", r.level)?;
            d.set_item("p_sup", r.p_sup)?;
            d.set_item("p_terminal", r.p_terminal)?;
            d.set_item("p_flipped", r.p_flipped)?;
            d.set_item("diff_se", r.diff_se)?;
            d.set_item("identity_failures", r.identity_failures)?;
            d.set_item("verdict", r.verdict.label())?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
#[pyo3(signature = (matrix, m, j, *, dist="rademacher", dim=1, embedding=None, exact=false, replicas=100_000, seed=1))]
#[allow(clippy::too_many_arguments)]
fn fourth_moment_ratio<'py>(
    py: Python<'py>,
    matrix: &PyMatrix,
    m: usize,
    j: usize,
    dist: &str,
    dim: usize,
    embedding: Option<&str>,
    exact: bool,
    replicas: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = moment_ratio(&model(matrix, None), &spec(dist, dim, embedding)?, m, j, method(exact, replicas, seed)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("fourth", r.fourth)?;
    d.set_item("second", r.second)?;
    d.set_item("ratio", r.ratio)?;
    d.set_item("ratio_se", r.ratio_se)?;
    Ok(d)
}

/// Prefix sums `S_1..S_N` of one seeded path.
#[pyfunction]
#[pyo3(signature = (matrix, n, *, weights=None, dist="rademacher", dim=1, embedding=None, seed=1, stream=0))]
#[allow(clippy::too_many_arguments)]
fn simulate_path(
    matrix: &PyMatrix,
    n: usize,
    weights: Option<&PyWeights>,
    dist: &str,
    dim: usize,
    embedding: Option<&str>,
    seed: u64,
    stream: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let spec = spec(dist, dim, embedding)?;
    let path = build_path(&model(matrix, weights), &sample_innovations(&spec, n, seed, stream), n).map_err(err)?;
    Ok((1..=n).map(|i| path.prefix_sum(i).to_vec()).collect())
}

/// Maximal bound for a predictable rule (`constant` uses `matrix`).
#[pyfunction]
#[pyo3(signature = (rule, n, *, matrix=None, dist="rademacher", exact=false, replicas=100_000, seed=1))]
#[allow(clippy::too_many_arguments)]
fn verify_martingale<'py>(
    py: Python<'py>,
    rule: &str,
    n: usize,
    matrix: Option<&PyMatrix>,
    dist: &str,
    exact: bool,
    replicas: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = spec(dist, 1, None)?;
    let rule = catalog::parse_predictable(rule, n, matrix.map(|m| &m.0), spec.law()).map_err(err)?;
    let r = martingale_bound(&rule, &spec, n, method(exact, replicas, seed)?).map_err(err)?;
    let d = bound_dict(py, &r.bound)?;
    d.set_item("rhs_source", r.rhs_source.label())?;
    d.set_item("envelope_rhs", r.envelope_rhs)?;
    Ok(d)
}

/// Doob L2 check for every decomposition component.
#[pyfunction]
#[pyo3(signature = (rule, n, *, matrix=None, dist="rademacher", exact=false, replicas=100_000, seed=1))]
#[allow(clippy::too_many_arguments)]
fn verify_doob<'py>(
    py: Python<'py>,
    rule: &str,
    n: usize,
    matrix: Option<&PyMatrix>,
    dist: &str,
    exact: bool,
    replicas: u64,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let spec = spec(dist, 1, None)?;
    let rule = catalog::parse_predictable(rule, n, matrix.map(|m| &m.0), spec.law()).map_err(err)?;
    doob_components(&rule, &spec, n, method(exact, replicas, seed)?)
        .map_err(err)?
        .iter()
        .map(|r| {
            let d = bound_dict(py, &r.bound)?;
            d.set_item("component", r.component)?;
            Ok(d)
        })
        .collect()
}

/// Largest `|α αᵀ - R|` entry for a covariance rule or file.
#[pyfunction]
#[pyo3(signature = (matrix, cov, *, tol=1e-10))]
fn verify_factorization<'py>(py: Python<'py>, matrix: &PyMatrix, cov: &str, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let spec = catalog::parse_covariance(cov, matrix.0.order()).map_err(err)?;
    let r = verify_factor(&matrix.0, &spec, tol).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("max_deviation", r.max_deviation)?;
    d.set_item("at", r.at)?;
    d.set_item("passed", r.passed)?;
    Ok(d)
}

#[pymodule]
fn hsl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMatrix>()?;
    m.add_class::<PyWeights>()?;
    m.add_function(wrap_pyfunction!(criterion_sum, m)?)?;
    m.add_function(wrap_pyfunction!(levy_bound, m)?)?;
    m.add_function(wrap_pyfunction!(tail_report, m)?)?;
    m.add_function(wrap_pyfunction!(expected_sup, m)?)?;
    m.add_function(wrap_pyfunction!(verify_levy, m)?)?;
    m.add_function(wrap_pyfunction!(verify_tail, m)?)?;
    m.add_function(wrap_pyfunction!(verify_stopping, m)?)?;
    m.add_function(wrap_pyfunction!(fourth_moment_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_path, m)?)?;
    m.add_function(wrap_pyfunction!(verify_martingale, m)?)?;
    m.add_function(wrap_pyfunction!(verify_doob, m)?)?;
    m.add_function(wrap_pyfunction!(verify_factorization, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
