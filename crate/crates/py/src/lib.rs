//! Python bindings: configuration, scheme solves, detection and sensing
//! helpers, beampatterns and the oracle suite.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use covert_ris::channel::ChannelSet;
use covert_ris::covertness;
use covert_ris::experiments::{beampattern, default_grid, parse_config, render_config, run_scenario, Scheme};
use covert_ris::optimizer::{solve_scheme, Access, CsiModel, LiftedSolution};
use covert_ris::oracle::{self, SuiteOptions};
use covert_ris::sensing::{crb as crb_of, SensingModel};
use covert_ris::{CMat, Error, Profile, SystemConfig, C64};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_)
        | Error::DimensionMismatch(_)
        | Error::ConfigParse { .. }
        | Error::ConfigRange { .. }
        | Error::NumericalDomain(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// System parameters. Build from a profile or from `key = value` text.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
pub struct PyConfig {
    inner: SystemConfig,
}

#[pymethods]
impl PyConfig {
    /// Small array profile used for quick runs.
    #[staticmethod]
    fn desk() -> Self {
        PyConfig { inner: SystemConfig::desk() }
    }

    /// Full-size reference parameters.
    #[staticmethod]
    fn full() -> Self {
        PyConfig { inner: SystemConfig::full() }
    }

    #[staticmethod]
    #[pyo3(signature = (text, profile=None))]
    fn from_text(text: &str, profile: Option<&str>) -> PyResult<Self> {
        let base = profile.map(|p| p.parse::<Profile>()).transpose().map_err(to_py)?;
        let inner = covert_ris::experiments::config_io::parse_config_with_base(text, base).map_err(to_py)?;
        Ok(PyConfig { inner })
    }

    fn to_text(&self) -> String {
        render_config(&self.inner)
    }

    /// Copy with one key replaced, using the same keys and units as the text format.
    fn with_value(&self, key: &str, value: &str) -> PyResult<Self> {
        let mut text: String = render_config(&self.inner)
            .lines()
            .filter(|l| l.split('=').next().map(str::trim) != Some(key))
            .map(|l| format!("{l}\n"))
            .collect();
        text.push_str(&format!("{key} = {value}\n"));
        Ok(PyConfig { inner: parse_config(&text).map_err(to_py)? })
    }

    #[getter]
    fn n_tx(&self) -> usize {
        self.inner.n_tx
    }

    #[getter]
    fn n_rx(&self) -> usize {
        self.inner.n_rx
    }

    #[getter]
    fn ris_elements(&self) -> usize {
        self.inner.ris_elements()
    }

    /// Watts.
    #[getter]
    fn power(&self) -> f64 {
        self.inner.power
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    #[getter]
    fn channel_uses(&self) -> usize {
        self.inner.channel_uses
    }

    #[getter]
    fn qos_rate(&self) -> f64 {
        self.inner.qos_rate
    }

    #[getter]
    fn gamma_crb(&self) -> f64 {
        self.inner.gamma_crb
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(n_tx={}, n_rx={}, M={}, P={} W, eps={}, L={})",
            self.inner.n_tx,
            self.inner.n_rx,
            self.inner.ris_elements(),
            self.inner.power,
            self.inner.epsilon,
            self.inner.channel_uses
        )
    }
}

/// Outcome of one scheme solve.
#[pyclass(name = "Solution", skip_from_py_object)]
pub struct PySolution {
    inner: LiftedSolution,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn covert_rate(&self) -> f64 {
        self.inner.covert_rate
    }

    #[getter]
    fn carol_rate(&self) -> f64 {
        self.inner.carol_rate
    }

    #[getter]
    fn sinr_b(&self) -> f64 {
        self.inner.sinr_b
    }

    #[getter]
    fn sinr_c(&self) -> f64 {
        self.inner.sinr_c
    }

    #[getter]
    fn covert_ratio(&self) -> f64 {
        self.inner.covert_ratio
    }

    #[getter]
    fn worst_covert_ratio(&self) -> f64 {
        self.inner.worst_covert_ratio
    }

    #[getter]
    fn x2(&self) -> f64 {
        self.inner.x2
    }

    #[getter]
    fn achieved_crb(&self) -> Option<f64> {
        self.inner.achieved_crb
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations()
    }

    #[getter]
    fn w_b(&self) -> Vec<C64> {
        self.inner.wb_vec.iter().copied().collect()
    }

    #[getter]
    fn w_c(&self) -> Vec<C64> {
        self.inner.wc_vec.iter().copied().collect()
    }

    /// Unit-modulus RIS coefficients.
    #[getter]
    fn v(&self) -> Vec<C64> {
        self.inner.v_vec.iter().copied().collect()
    }

    /// `(angles_rad, total, bob, carol)`, each curve normalized to its peak.
    #[pyo3(signature = (config, points=1801))]
    fn beampattern(&self, config: &PyConfig, points: usize) -> PyResult<Curves> {
        let bp = beampattern(&self.inner, &config.inner, &default_grid(points)).map_err(to_py)?;
        Ok((
            bp.rows.iter().map(|r| r.theta).collect(),
            bp.rows.iter().map(|r| r.p_total).collect(),
            bp.rows.iter().map(|r| r.p_bob).collect(),
            bp.rows.iter().map(|r| r.p_carol).collect(),
        ))
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(covert_rate={:.4}, carol_rate={:.4}, ratio={:.6}, converged={})",
            self.inner.covert_rate,
            self.inner.carol_rate,
            self.inner.worst_covert_ratio,
            if self.inner.converged { "True" } else { "False" }
        )
    }
}

fn parse_scheme(scheme: &str, access: &str) -> PyResult<Scheme> {
    let csi: CsiModel = scheme.parse().map_err(to_py)?;
    let access: Access = access.parse().map_err(to_py)?;
    Ok(Scheme::new(csi, access))
}

/// Solves one scheme on the channel drawn from `seed`. A run that stops
/// before the rank-one gap closes still returns its best iterate with
/// `converged == False`.
#[pyfunction]
#[pyo3(signature = (config, scheme, access="noma", seed=0))]
fn solve(py: Python<'_>, config: &PyConfig, scheme: &str, access: &str, seed: u64) -> PyResult<PySolution> {
    let scheme = parse_scheme(scheme, access)?;
    let cfg = config.inner.clone();
    let out = py.detach(move || {
        ChannelSet::generate(&cfg, seed).and_then(|ch| solve_scheme(&cfg, &ch, scheme.csi, scheme.access))
    });
    match out {
        Ok(inner) => Ok(PySolution { inner }),
        Err(Error::NonConvergence { best, .. }) => Ok(PySolution { inner: *best }),
        Err(e) => Err(to_py(e)),
    }
}

/// One results row as a dict; rates are `None` unless the status is optimal.
#[pyfunction]
#[pyo3(signature = (config, scheme, access="noma", seed=0))]
fn run<'py>(py: Python<'py>, config: &PyConfig, scheme: &str, access: &str, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let scheme = parse_scheme(scheme, access)?;
    let cfg = config.inner.clone();
    let rec = py.detach(move || run_scenario(&cfg, scheme, seed));
    let d = PyDict::new(py);
    d.set_item("scenario", rec.scenario.as_str())?;
    d.set_item("access", rec.access.as_str())?;
    d.set_item("seed", rec.seed)?;
    d.set_item("status", rec.status.as_str())?;
    d.set_item("covert_rate", rec.covert_rate)?;
    d.set_item("carol_rate", rec.carol_rate)?;
    d.set_item("covert_ratio", rec.covert_ratio)?;
    d.set_item("achieved_crb", rec.achieved_crb)?;
    d.set_item("iters", rec.iters)?;
    d.set_item("wall_s", rec.wall_s)?;
    Ok(d)
}

/// Root `x > 1` of `ln x + 1/x = 1 + 2ε²/L`.
#[pyfunction]
fn solve_x2(epsilon: f64, channel_uses: usize) -> PyResult<f64> {
    covertness::solve_x2(epsilon, channel_uses).map_err(to_py)
}

/// Per-sample KL divergence between the warden's two hypotheses.
#[pyfunction]
fn kl_divergence(lambda0: f64, lambda1: f64) -> PyResult<f64> {
    covertness::kl_divergence(lambda0, lambda1).map_err(to_py)
}

/// `(dep, p_fa, p_md)` of the optimal test over `L` channel uses.
#[pyfunction]
fn dep_exact(lambda0: f64, lambda1: f64, channel_uses: usize) -> PyResult<(f64, f64, f64)> {
    let d = covertness::dep_exact(lambda0, lambda1, channel_uses).map_err(to_py)?;
    Ok((d.dep, d.p_fa, d.p_md))
}

#[pyfunction]
fn pinsker_bound(lambda0: f64, lambda1: f64, channel_uses: usize) -> PyResult<f64> {
    covertness::pinsker_bound(lambda0, lambda1, channel_uses).map_err(to_py)
}

/// `(dep, standard_error)` by simulation of the likelihood-ratio test.
#[pyfunction]
#[pyo3(signature = (lambda0, lambda1, channel_uses, trials=100_000, seed=0))]
fn mdep_monte_carlo(
    py: Python<'_>,
    lambda0: f64,
    lambda1: f64,
    channel_uses: usize,
    trials: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let e = py
        .detach(|| oracle::mdep_monte_carlo(lambda0, lambda1, channel_uses, trials, seed))
        .map_err(to_py)?;
    Ok((e.dep, e.std_err))
}

type Curves = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>);

fn to_cmat(rows: Vec<Vec<C64>>) -> PyResult<CMat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a square matrix"));
    }
    Ok(CMat::from_fn(n, n, |i, j| rows[i][j]))
}

/// Angle CRB (rad²) of the warden for transmit covariance `w`.
#[pyfunction]
fn crb(config: &PyConfig, w: Vec<Vec<C64>>) -> PyResult<f64> {
    let model = SensingModel::from_config(&config.inner).map_err(to_py)?;
    crb_of(&model, &to_cmat(w)?).map_err(to_py)
}

/// Runs the oracle suite; returns `(name, passed, max_deviation, tolerance)` rows.
#[pyfunction]
#[pyo3(signature = (seed=2024))]
fn validate(py: Python<'_>, seed: u64) -> PyResult<Vec<(String, bool, f64, f64)>> {
    let reports = py.detach(|| oracle::run_suite(&SuiteOptions { seed, ..SuiteOptions::default() })).map_err(to_py)?;
    Ok(reports.into_iter().map(|r| (r.name, r.pass, r.max_deviation, r.tolerance)).collect())
}

#[pymodule]
fn covert_ris_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(solve_x2, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(dep_exact, m)?)?;
    m.add_function(wrap_pyfunction!(pinsker_bound, m)?)?;
    m.add_function(wrap_pyfunction!(mdep_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(crb, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
