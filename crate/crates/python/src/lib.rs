//! Python bindings. Reports come back as plain dicts and lists.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pauliest as pe;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: pe::Error) -> PyErr {
    match e {
        pe::Error::Io(_) => PyIOError::new_err(e.to_string()),
        pe::Error::Numeric { .. } | pe::Error::Infeasible(_) | pe::Error::Pole(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn parse_policy(policy: &str) -> PyResult<pe::KindPolicy> {
    policy.parse().map_err(to_py)
}

fn parse_precision(precision: &str) -> PyResult<pe::Precision> {
    match precision {
        "double" => Ok(pe::Precision::Double),
        "extended" => Ok(pe::Precision::Extended),
        "auto" => Ok(pe::Precision::Auto),
        other => Err(PyValueError::new_err(format!(
            "unknown precision {other:?}"
        ))),
    }
}

#[pyclass(name = "PauliString", frozen, eq, ord, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct PyPauliString(pe::PauliString);

#[pymethods]
impl PyPauliString {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse().map(PyPauliString).map_err(to_py)
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        PyPauliString(pe::PauliString::identity(n))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("PauliString('{}')", self.0)
    }

    fn weight(&self) -> usize {
        self.0.weight()
    }

    fn symbols(&self) -> Vec<u8> {
        self.0.to_symbols()
    }

    /// Symbol-wise product, up to phase.
    fn xor(&self, other: &PyPauliString) -> PyResult<Self> {
        self.0.xor(&other.0).map(PyPauliString).map_err(to_py)
    }

    fn prefix(&self, k: usize) -> PyResult<Self> {
        self.0.prefix(k).map(PyPauliString).map_err(to_py)
    }
}

#[pyclass(name = "SpamParams", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PySpamParams(pe::SpamParams);

#[pymethods]
impl PySpamParams {
    #[new]
    fn new(r_prep: f64, r_meas: f64) -> PyResult<Self> {
        pe::SpamParams::new(r_prep, r_meas)
            .map(PySpamParams)
            .map_err(to_py)
    }

    #[getter]
    fn r_prep(&self) -> f64 {
        self.0.r_prep
    }

    #[getter]
    fn r_meas(&self) -> f64 {
        self.0.r_meas
    }

    fn retention(&self) -> f64 {
        self.0.retention()
    }

    fn delta(&self) -> f64 {
        self.0.delta()
    }

    fn __repr__(&self) -> String {
        format!(
            "SpamParams(r_prep={}, r_meas={})",
            self.0.r_prep, self.0.r_meas
        )
    }
}

/// A Pauli error-rate distribution given as `{string: probability}`.
#[pyclass(name = "ErrorRateDistribution", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDistribution(pe::ErrorRateDistribution);

#[pymethods]
impl PyDistribution {
    #[new]
    fn new(rates: BTreeMap<String, f64>) -> PyResult<Self> {
        pe::ErrorRateDistribution::from_strs(rates.iter().map(|(s, p)| (s.as_str(), *p)))
            .map(PyDistribution)
            .map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        pe::ErrorRateDistribution::from_json(text)
            .map(PyDistribution)
            .map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn prob(&self, pauli: &str) -> PyResult<f64> {
        let c: pe::PauliString = pauli.parse().map_err(to_py)?;
        Ok(self.0.prob(&c))
    }

    fn to_dict(&self) -> BTreeMap<String, f64> {
        self.0.iter().map(|(s, p)| (s.to_string(), p)).collect()
    }

    fn __len__(&self) -> usize {
        self.0.support_len()
    }
}

#[pyclass(name = "ProbeBatch", frozen)]
struct PyProbeBatch(pe::ProbeBatch);

#[pymethods]
impl PyProbeBatch {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        pe::read_batch(&path).map(PyProbeBatch).map_err(to_py)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        pe::write_batch(&self.0, &path).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    #[getter]
    fn spam(&self) -> PySpamParams {
        PySpamParams(self.0.spam)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// `(basis, readout)` strings of record `i`.
    fn record(&self, i: usize) -> PyResult<(String, String)> {
        let r = self
            .0
            .records()
            .get(i)
            .ok_or_else(|| PyValueError::new_err(format!("record {i} out of range")))?;
        Ok((r.basis().to_string(), r.readout().to_string()))
    }

    /// Weight counts of the readouts altered by `prefix`, restricted to its length.
    fn altered_histogram(&self, prefix: &str) -> PyResult<Vec<u64>> {
        let b: pe::PauliString = prefix.parse().map_err(to_py)?;
        Ok(self
            .0
            .altered_histogram(&b)
            .map_err(to_py)?
            .counts()
            .to_vec())
    }
}

#[pyfunction]
#[pyo3(signature = (kind, n, nu1=None, nu2=None, lam=None, b=None))]
fn amatrix(
    kind: &str,
    n: usize,
    nu1: Option<f64>,
    nu2: Option<f64>,
    lam: Option<f64>,
    b: Option<f64>,
) -> PyResult<Vec<Vec<f64>>> {
    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| PyValueError::new_err(format!("{kind} channel needs {name}")))
    };
    let spec = match kind {
        "bec" => pe::ChannelSpec::Bec {
            lambda: need(lam, "lam")?,
        },
        "z" => pe::ChannelSpec::Z {
            lambda: need(lam, "lam")?,
        },
        "bsc" => pe::ChannelSpec::Bsc { b: need(b, "b")? },
        "zflip" => pe::ChannelSpec::Zflip {
            nu1: need(nu1, "nu1")?,
            nu2: need(nu2, "nu2")?,
        },
        other => return Err(PyValueError::new_err(format!("unknown channel {other:?}"))),
    };
    Ok(pe::amatrix(&spec, n).map_err(to_py)?.to_rows())
}

/// Estimator weights for `k` coordinates through ZFlip(nu1, nu2).
#[pyfunction]
#[pyo3(signature = (nu1, nu2, k, kind="exact", eps_bias=None, precision="auto"))]
fn build_estimator(
    py: Python<'_>,
    nu1: f64,
    nu2: f64,
    k: usize,
    kind: &str,
    eps_bias: Option<f64>,
    precision: &str,
) -> PyResult<Py<PyAny>> {
    let kind = match (kind, eps_bias) {
        ("exact", _) => pe::EstimatorKind::ExactInverse,
        ("lp", Some(eps_bias)) => pe::EstimatorKind::LpRegularized { eps_bias },
        ("lp", None) => return Err(PyValueError::new_err("lp estimator needs eps_bias")),
        (other, _) => {
            return Err(PyValueError::new_err(format!(
                "unknown estimator {other:?}"
            )))
        }
    };
    let spec = pe::ChannelSpec::Zflip { nu1, nu2 };
    let est = pe::build_estimator(&spec, k, kind, parse_precision(precision)?).map_err(to_py)?;
    json_to_py(py, &est)
}

#[pyfunction]
fn simulate_batch(
    pi: &PyDistribution,
    spam: &PySpamParams,
    m: usize,
    seed: u64,
) -> PyResult<PyProbeBatch> {
    pe::simulate_batch(&pi.0, &spam.0, m, seed)
        .map(PyProbeBatch)
        .map_err(to_py)
}

/// Exact readout law as `{bitstring: probability}`.
#[pyfunction]
fn exact_readout_distribution(
    pi: &PyDistribution,
    spam: &PySpamParams,
) -> PyResult<BTreeMap<String, f64>> {
    let law = pe::exact_readout_distribution(&pi.0, &spam.0).map_err(to_py)?;
    Ok(law.into_iter().map(|(r, p)| (r.to_string(), p)).collect())
}

/// Estimate the probability of `target` from a batch.
#[pyfunction]
#[pyo3(signature = (batch, target, fail_prob=0.05, kind="exact", eps_bias=None))]
fn estimate_probability(
    py: Python<'_>,
    batch: &PyProbeBatch,
    target: &str,
    fail_prob: f64,
    kind: &str,
    eps_bias: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let b: pe::PauliString = target.parse().map_err(to_py)?;
    let spam = batch.0.spam;
    let est = pe::build_estimator(
        &pe::ChannelSpec::probe_channel(spam.retention()),
        b.len(),
        match (kind, eps_bias) {
            ("exact", _) => pe::EstimatorKind::ExactInverse,
            ("lp", Some(eps_bias)) => pe::EstimatorKind::LpRegularized { eps_bias },
            _ => {
                return Err(PyValueError::new_err(
                    "kind is \"exact\", or \"lp\" with eps_bias",
                ))
            }
        },
        pe::Precision::Auto,
    )
    .map_err(to_py)?;
    let hist = batch.0.altered_histogram(&b).map_err(to_py)?;
    let e = pe::estimate_p0(&hist, &est, fail_prob).map_err(to_py)?;
    json_to_py(py, &e)
}

#[pyfunction]
#[pyo3(signature = (n, eps, fail_prob, spam, policy="auto"))]
fn plan_budget(
    n: usize,
    eps: f64,
    fail_prob: f64,
    spam: &PySpamParams,
    policy: &str,
) -> PyResult<u64> {
    pe::plan_budget(n, eps, fail_prob, &spam.0, parse_policy(policy)?).map_err(to_py)
}

fn options(policy: &str, assumed_spam: Option<&PySpamParams>) -> PyResult<pe::RecoverOptions> {
    Ok(pe::RecoverOptions {
        policy: parse_policy(policy)?,
        assumed_spam: assumed_spam.map(|s| s.0),
    })
}

/// Recover the error-rate distribution from a batch; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (batch, eps, fail_prob=0.05, policy="auto", assumed_spam=None))]
fn recover(
    py: Python<'_>,
    batch: &PyProbeBatch,
    eps: f64,
    fail_prob: f64,
    policy: &str,
    assumed_spam: Option<&PySpamParams>,
) -> PyResult<Py<PyAny>> {
    let opts = options(policy, assumed_spam)?;
    let report = py
        .detach(|| pe::recover_with(&batch.0, &batch.0.spam, eps, fail_prob, &opts))
        .map_err(to_py)?;
    json_to_py(py, &report)
}

/// Recovery run on exact frequencies, as if `samples` probes were taken.
#[pyfunction]
#[pyo3(signature = (pi, spam, eps, fail_prob=0.05, samples=1u64 << 30, policy="auto"))]
fn recover_exact(
    py: Python<'_>,
    pi: &PyDistribution,
    spam: &PySpamParams,
    eps: f64,
    fail_prob: f64,
    samples: u64,
    policy: &str,
) -> PyResult<Py<PyAny>> {
    let obs = pe::ExactObserver::new(pi.0.clone(), spam.0, samples);
    let opts = options(policy, None)?;
    let report = py
        .detach(|| pe::recover_with(&obs, &spam.0, eps, fail_prob, &opts))
        .map_err(to_py)?;
    json_to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (nu1, nu2, n, eps, grid=pe::eta::DEFAULT_GRID))]
fn eta_report(
    py: Python<'_>,
    nu1: f64,
    nu2: f64,
    n: usize,
    eps: f64,
    grid: usize,
) -> PyResult<Py<PyAny>> {
    let r = py
        .detach(|| pe::eta_report(nu1, nu2, n, eps, &pe::EtaConstants::default(), grid))
        .map_err(to_py)?;
    json_to_py(py, &r)
}

#[pyfunction]
fn formula_bound(py: Python<'_>, eps: f64, nu1: f64, nu2: f64, n: usize) -> PyResult<Py<PyAny>> {
    let f = pe::formula_bound(eps, nu1, nu2, n, &pe::EtaConstants::default()).map_err(to_py)?;
    json_to_py(py, &f)
}

#[pymodule]
fn pauliest_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", pe::VERSION)?;
    m.add("GENERATOR_NAME", pe::GENERATOR_NAME)?;
    m.add_class::<PyPauliString>()?;
    m.add_class::<PySpamParams>()?;
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyProbeBatch>()?;
    m.add_function(wrap_pyfunction!(amatrix, m)?)?;
    m.add_function(wrap_pyfunction!(build_estimator, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_batch, m)?)?;
    m.add_function(wrap_pyfunction!(exact_readout_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_probability, m)?)?;
    m.add_function(wrap_pyfunction!(plan_budget, m)?)?;
    m.add_function(wrap_pyfunction!(recover, m)?)?;
    m.add_function(wrap_pyfunction!(recover_exact, m)?)?;
    m.add_function(wrap_pyfunction!(eta_report, m)?)?;
    m.add_function(wrap_pyfunction!(formula_bound, m)?)?;
    Ok(())
}
