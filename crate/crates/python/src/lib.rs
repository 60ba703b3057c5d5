//! Python bindings for `twrelay-core`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use twrelay_core::af_optimal::{self, BeamformerSolution};
use twrelay_core::channel::{self, NetworkDims, PowerConfig};
use twrelay_core::dmt::{self, DmtDims, Duplex, Strategy};
use twrelay_core::harness::{self, selftest, ExperimentConfig};
use twrelay_core::{bounds, dcm, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Io(_) | Error::DimensionMismatch(_) | Error::InvalidMultiplexingGain { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn matrix_rows(m: &twrelay_core::numkernel::CMatrix) -> Vec<Vec<Complex64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Channel realization for the K-relay network.
#[pyclass(name = "ChannelSet", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChannelSet(channel::ChannelSet);

#[pymethods]
impl PyChannelSet {
    /// i.i.d. CN(0, 1) draw, reproducible from `(seed, index)`.
    #[staticmethod]
    #[pyo3(signature = (m, n, k, seed, index = 0))]
    fn draw(m: usize, n: usize, k: usize, seed: u64, index: u64) -> PyResult<Self> {
        Ok(Self(channel::draw_channels(NetworkDims::new(m, n, k).map_err(py_err)?, seed, index)))
    }

    /// Single-antenna relays from `(h, h_r, g, g_r)` tuples.
    #[staticmethod]
    fn scalar(links: Vec<(Complex64, Complex64, Complex64, Complex64)>) -> PyResult<Self> {
        channel::ChannelSet::scalar(&links).map(Self).map_err(py_err)
    }

    /// `(M, N, K)`.
    #[getter]
    fn dims(&self) -> (usize, usize, usize) {
        (self.0.dims.m, self.0.dims.n, self.0.dims.k)
    }

    fn swap_terminals(&self) -> Self {
        Self(self.0.swap_terminals())
    }

    fn __repr__(&self) -> String {
        let (m, n, k) = self.dims();
        format!("ChannelSet(M={m}, N={n}, K={k})")
    }
}

/// Single-relay channel with a direct terminal link.
#[pyclass(name = "DirectChannelSet", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDirectChannelSet(channel::DirectChannelSet);

#[pymethods]
impl PyDirectChannelSet {
    #[staticmethod]
    #[pyo3(signature = (m1, m2, mr, seed, index = 0))]
    fn draw(m1: usize, m2: usize, mr: usize, seed: u64, index: u64) -> Self {
        Self(channel::draw_direct_channels(m1, m2, mr, seed, index))
    }

    #[staticmethod]
    fn scalar(h: Complex64, h_r: Complex64, g: Complex64, g_r: Complex64, h12: Complex64, h12_r: Complex64) -> Self {
        Self(channel::DirectChannelSet::scalar(h, h_r, g, g_r, h12, h12_r))
    }

    /// `(m1, m2, mr)`.
    #[getter]
    fn dims(&self) -> (usize, usize, usize) {
        (self.0.m1, self.0.m2, self.0.mr)
    }

    fn __repr__(&self) -> String {
        let (a, b, c) = self.dims();
        format!("DirectChannelSet(m1={a}, m2={b}, mr={c})")
    }
}

/// Minimum-power AF beamformer and its certificate.
#[pyclass(name = "BeamformerSolution", frozen, get_all)]
struct PySolution {
    weights: Vec<Vec<Vec<Complex64>>>,
    sinr12: f64,
    sinr21: f64,
    total_power: f64,
    per_relay_power: Vec<f64>,
    lambda1: f64,
    lambda2: f64,
    kkt_residual: f64,
    dual_value: f64,
    iterations: usize,
    feasible: bool,
}

impl From<BeamformerSolution> for PySolution {
    fn from(s: BeamformerSolution) -> Self {
        Self {
            weights: s.weights.w.iter().map(matrix_rows).collect(),
            sinr12: s.sinr12,
            sinr21: s.sinr21,
            total_power: s.total_power,
            per_relay_power: s.per_relay_power,
            lambda1: s.lambda1,
            lambda2: s.lambda2,
            kkt_residual: s.kkt_residual,
            dual_value: s.dual_value,
            iterations: s.iterations,
            feasible: s.feasible,
        }
    }
}

#[pymethods]
impl PySolution {
    fn __repr__(&self) -> String {
        format!(
            "BeamformerSolution(total_power={:.6}, sinr12={:.6}, sinr21={:.6}, lambda1={:.6}, lambda2={:.6})",
            self.total_power, self.sinr12, self.sinr21, self.lambda1, self.lambda2
        )
    }
}

fn power(p: f64, p_r: f64, per_relay: bool) -> PyResult<PowerConfig> {
    let kind = if per_relay { channel::ConstraintKind::PerRelay } else { channel::ConstraintKind::SumAcrossRelays };
    PowerConfig::new(p, p_r, kind).map_err(py_err)
}

/// Least relay power meeting both SINR targets.
#[pyfunction]
fn solve_min_power(ch: &PyChannelSet, p: f64, gamma0: f64, gamma1: f64) -> PyResult<PySolution> {
    af_optimal::solve_min_power(&ch.0, p, gamma0, gamma1).map(Into::into).map_err(py_err)
}

/// Largest sum rate with `R12 = beta * R`, and the beamformer achieving it.
#[pyfunction]
#[pyo3(signature = (ch, p, p_r, beta, per_relay = false))]
fn rate_profile_solve(ch: &PyChannelSet, p: f64, p_r: f64, beta: f64, per_relay: bool) -> PyResult<(f64, PySolution)> {
    let (r, s) = af_optimal::rate_profile_solve(&ch.0, &power(p, p_r, per_relay)?, p, beta).map_err(py_err)?;
    Ok((r, s.into()))
}

/// AF boundary points as `(beta, r12, r21)`.
#[pyfunction]
#[pyo3(signature = (ch, p, p_r, betas, per_relay = false))]
fn af_rate_region(ch: &PyChannelSet, p: f64, p_r: f64, betas: Vec<f64>, per_relay: bool) -> PyResult<Vec<(f64, f64, f64)>> {
    let region = af_optimal::af_rate_region(&ch.0, &power(p, p_r, per_relay)?, p, &betas).map_err(py_err)?;
    Ok(region.samples.iter().map(|s| (s.beta, s.r12, s.r21)).collect())
}

/// Dual channel matching rates `(r12, r21)`.
#[pyfunction]
fn dcm_rates(ch: &PyChannelSet, p: f64, p_r: f64) -> PyResult<(f64, f64)> {
    let r = dcm::dcm_rates(&ch.0, &PowerConfig::new(p, p_r, channel::ConstraintKind::SumAcrossRelays).map_err(py_err)?).map_err(py_err)?;
    Ok((r.r12, r.r21))
}

/// Broadcast and multiple-access cut values over an alpha grid.
#[pyfunction]
#[pyo3(signature = (ch, p, p_r, alpha_grid = None))]
fn cutset_region<'py>(py: Python<'py>, ch: &PyChannelSet, p: f64, p_r: f64, alpha_grid: Option<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let grid = alpha_grid.unwrap_or_else(bounds::default_alpha_grid);
    let b = bounds::cutset_region(&ch.0, p, p_r, &grid).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("alpha", &b.alpha_grid)?;
    d.set_item("bc12", &b.bc12)?;
    d.set_item("bc21", &b.bc21)?;
    d.set_item("mac12", &b.mac12)?;
    d.set_item("mac21", &b.mac21)?;
    Ok(d)
}

/// Water level for the given channel eigenvalues and budget.
#[pyfunction]
fn waterfill(eigs: Vec<f64>, p_r: f64) -> PyResult<f64> {
    bounds::waterfill(&eigs, p_r).map_err(py_err)
}

/// Compression noise level (full duplex); infinite when no level works.
#[pyfunction]
fn compression_noise_full(dch: &PyDirectChannelSet, p: f64) -> PyResult<f64> {
    dmt::compression_noise_full(&dch.0, p).map_err(py_err)
}

/// Full-duplex compress-and-forward rates `(r12, r21)`.
#[pyfunction]
fn cf_rates_full(dch: &PyDirectChannelSet, p: f64) -> PyResult<(f64, f64)> {
    dmt::cf_rates_full(&dch.0, p).map(|r| (r.r12, r.r21)).map_err(py_err)
}

/// Three-phase compress-and-forward rates `(r12, r21)`.
#[pyfunction]
fn cf_rates_half(dch: &PyDirectChannelSet, p: f64, t1: f64, t2: f64) -> PyResult<(f64, f64)> {
    dmt::cf_rates_half(&dch.0, p, t1, t2).map(|r| (r.r12, r.r21)).map_err(py_err)
}

/// Full-duplex tradeoff ceiling `(d12, d21)` at multiplexing gain `r`.
#[pyfunction]
fn dmt_upper_full(m1: usize, m2: usize, mr: usize, r: f64) -> PyResult<(f64, f64)> {
    dmt::dmt_upper_full(m1, m2, mr, r).map_err(py_err)
}

fn parse_strategy(name: &str, t: Option<(f64, f64)>) -> PyResult<Strategy> {
    let need_t = || t.ok_or_else(|| PyValueError::new_err(format!("strategy {name:?} needs t=(t1, t2)")));
    Ok(match name {
        "cf_full" => Strategy::CfFull,
        "upper_full" => Strategy::UpperFull,
        "cf_half" => need_t().map(|(t1, t2)| Strategy::CfHalf { t1, t2 })?,
        "upper_half" => need_t().map(|(t1, t2)| Strategy::UpperHalf { t1, t2 })?,
        "lower_half" => need_t().map(|(t1, t2)| Strategy::LowerHalf { t1, t2 })?,
        other => return Err(PyValueError::new_err(format!("unknown strategy {other:?}"))),
    })
}

/// Monte Carlo outage probabilities and fitted exponents.
#[pyfunction]
#[pyo3(signature = (m1, m2, mr, r12, r21, snr_db, trials, seed, strategy = "cf_full", t = None, rate_floor_bits = dmt::DEFAULT_RATE_FLOOR_BITS))]
#[allow(clippy::too_many_arguments)]
fn outage_curve<'py>(
    py: Python<'py>,
    m1: usize,
    m2: usize,
    mr: usize,
    r12: f64,
    r21: f64,
    snr_db: Vec<f64>,
    trials: u64,
    seed: u64,
    strategy: &str,
    t: Option<(f64, f64)>,
    rate_floor_bits: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let strategy = parse_strategy(strategy, t)?;
    let duplex = if matches!(strategy, Strategy::CfFull | Strategy::UpperFull) { Duplex::Full } else { Duplex::Half };
    let dims = DmtDims::new(m1, m2, mr, duplex).map_err(py_err)?;
    let c = py
        .detach(|| dmt::outage_curve(dims, r12, r21, &snr_db, trials, seed, strategy, rate_floor_bits))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("snr_db", c.points.iter().map(|p| p.snr_db).collect::<Vec<_>>())?;
    d.set_item("p12", c.points.iter().map(|p| p.p12()).collect::<Vec<_>>())?;
    d.set_item("p21", c.points.iter().map(|p| p.p21()).collect::<Vec<_>>())?;
    d.set_item("events12", c.points.iter().map(|p| p.events12).collect::<Vec<_>>())?;
    d.set_item("events21", c.points.iter().map(|p| p.events21).collect::<Vec<_>>())?;
    d.set_item("d12", c.d12.as_ref().ok().map(|f| (f.exponent, f.stderr)))?;
    d.set_item("d21", c.d21.as_ref().ok().map(|f| (f.exponent, f.stderr)))?;
    Ok(d)
}

/// Runs an experiment from a JSON config and returns the CSV table.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(py_err)?;
    py.detach(|| harness::run_experiment(&cfg)).map(|t| t.to_csv_string()).map_err(py_err)
}

/// Closed-form oracle checks as `(name, passed, detail)`.
#[pyfunction]
fn run_selftest() -> Vec<(String, bool, String)> {
    selftest::run_selftest().into_iter().map(|c| (c.name.to_string(), c.passed, c.detail)).collect()
}

#[pymodule]
fn twrelay(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChannelSet>()?;
    m.add_class::<PyDirectChannelSet>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve_min_power, m)?)?;
    m.add_function(wrap_pyfunction!(rate_profile_solve, m)?)?;
    m.add_function(wrap_pyfunction!(af_rate_region, m)?)?;
    m.add_function(wrap_pyfunction!(dcm_rates, m)?)?;
    m.add_function(wrap_pyfunction!(cutset_region, m)?)?;
    m.add_function(wrap_pyfunction!(waterfill, m)?)?;
    m.add_function(wrap_pyfunction!(compression_noise_full, m)?)?;
    m.add_function(wrap_pyfunction!(cf_rates_full, m)?)?;
    m.add_function(wrap_pyfunction!(cf_rates_half, m)?)?;
    m.add_function(wrap_pyfunction!(dmt_upper_full, m)?)?;
    m.add_function(wrap_pyfunction!(outage_curve, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_selftest, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
