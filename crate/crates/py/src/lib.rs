//! Python bindings: `import rydgate`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use rydgate::evolve::LindbladConvention;
use rydgate::experiments::{self, DecoherenceInputs, GateSetup, QftConvention, QftTimingModel, SystematicAxis};
use rydgate::model::ModelMode;
use rydgate::pulses::{PerturbationSpec, Protocol};
use rydgate::units;

create_exception!(rydgate, RydgateError, PyValueError);

fn err(e: rydgate::Error) -> PyErr {
    RydgateError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| RydgateError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn parse<T: DeserializeOwned>(what: &str, s: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(s.to_owned()))
        .map_err(|_| RydgateError::new_err(format!("unknown {what} '{s}'")))
}

fn parse_protocol(s: &str) -> PyResult<Protocol> {
    s.parse().map_err(err)
}

fn parse_mode(s: &str) -> PyResult<ModelMode> {
    s.parse().map_err(err)
}

fn protocols(list: Option<Vec<String>>) -> PyResult<Vec<Protocol>> {
    match list {
        None => Ok(Protocol::ALL.to_vec()),
        Some(v) => v.iter().map(|s| parse_protocol(s)).collect(),
    }
}

/// Physical parameters in 2π×MHz and ns.
#[pyclass(name = "PhysicalParams", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyPhysicalParams {
    inner: rydgate::PhysicalParams,
}

#[pymethods]
impl PyPhysicalParams {
    #[new]
    #[pyo3(signature = (omega_mhz=4.0, delta_mhz=0.0, v_mhz=500.0, duration_ns=500.0))]
    fn new(omega_mhz: f64, delta_mhz: f64, v_mhz: f64, duration_ns: f64) -> PyResult<Self> {
        let inner = rydgate::PhysicalParams::from_mhz_2pi(omega_mhz, delta_mhz, v_mhz, duration_ns).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn omega_mhz(&self) -> f64 {
        units::to_mhz_2pi(self.inner.omega)
    }

    #[getter]
    fn delta_mhz(&self) -> f64 {
        units::to_mhz_2pi(self.inner.delta)
    }

    #[getter]
    fn v_mhz(&self) -> f64 {
        units::to_mhz_2pi(self.inner.v_blockade)
    }

    #[getter]
    fn duration_ns(&self) -> f64 {
        self.inner.duration
    }

    #[getter]
    fn blockade_ratio(&self) -> f64 {
        self.inner.blockade_ratio()
    }

    #[getter]
    fn soft_blockade(&self) -> bool {
        self.inner.soft_blockade()
    }

    fn __repr__(&self) -> String {
        format!(
            "PhysicalParams(omega_mhz={}, delta_mhz={}, v_mhz={}, duration_ns={})",
            self.omega_mhz(),
            self.delta_mhz(),
            self.v_mhz(),
            self.duration_ns()
        )
    }
}

fn params_or_default(p: Option<PyPhysicalParams>) -> rydgate::PhysicalParams {
    p.map_or_else(rydgate::PhysicalParams::reference, |p| p.inner)
}

/// `samples + 1` waveform points `(t_ns, omega, delta, phi)` in rad/ns and rad.
#[pyfunction]
#[pyo3(signature = (protocol="ncgc", params=None, samples=1000))]
fn waveform(protocol: &str, params: Option<PyPhysicalParams>, samples: usize) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let setup = GateSetup::new(parse_protocol(protocol)?, params_or_default(params), ModelMode::Reduced);
    let s = setup.schedule().map_err(err)?;
    Ok(s.samples(samples)
        .map_err(err)?
        .into_iter()
        .map(|x| (x.t, x.omega, x.delta, x.phi))
        .collect())
}

/// Simulate one gate; returns fidelity, phases, populations and the computational block.
#[pyfunction]
#[pyo3(signature = (protocol="ncgc", params=None, mode="reduced", kappa1=0.0, kappa2=0.0))]
fn run_gate(
    py: Python<'_>,
    protocol: &str,
    params: Option<PyPhysicalParams>,
    mode: &str,
    kappa1: f64,
    kappa2: f64,
) -> PyResult<Py<PyAny>> {
    let setup = GateSetup::new(parse_protocol(protocol)?, params_or_default(params), parse_mode(mode)?);
    let spec = PerturbationSpec::systematic(kappa1, kappa2);
    let run = py.detach(|| experiments::run_gate(&setup, &spec)).map_err(err)?;
    to_py(py, &run)
}

/// Fidelity against a systematic Rabi (`kappa1`) or detuning (`kappa2`) offset.
#[pyfunction]
#[pyo3(signature = (grid, axis="kappa1", protocols=None, params=None))]
fn systematic_sweep(
    py: Python<'_>,
    grid: Vec<f64>,
    axis: &str,
    protocols: Option<Vec<String>>,
    params: Option<PyPhysicalParams>,
) -> PyResult<Py<PyAny>> {
    let axis: SystematicAxis = parse("axis", axis)?;
    let list = self::protocols(protocols)?;
    let base = GateSetup::new(Protocol::Ncgc, params_or_default(params), ModelMode::Reduced);
    let report = py
        .detach(|| experiments::systematic_sweep(&list, axis, &grid, &base))
        .map_err(err)?;
    to_py(py, &report)
}

/// Random-noise Monte Carlo over an amplitude grid.
#[pyfunction]
#[pyo3(signature = (amp1_grid, amp2_grid, trials=50, seed=0, protocol="ncgc", params=None))]
fn noise_monte_carlo(
    py: Python<'_>,
    amp1_grid: Vec<f64>,
    amp2_grid: Vec<f64>,
    trials: usize,
    seed: u64,
    protocol: &str,
    params: Option<PyPhysicalParams>,
) -> PyResult<Py<PyAny>> {
    let p = parse_protocol(protocol)?;
    let base = GateSetup::new(p, params_or_default(params), ModelMode::Reduced);
    let spec = PerturbationSpec::default();
    let report = py
        .detach(|| experiments::noise_monte_carlo(p, &amp1_grid, &amp2_grid, trials, seed, &spec, &base))
        .map_err(err)?;
    to_py(py, &report)
}

/// Full-Hamiltonian fidelity against blockade strength `v_mhz` (2π×MHz).
#[pyfunction]
#[pyo3(signature = (v_mhz, durations_ns=vec![500.0], protocols=None, params=None))]
fn blockade_sweep(
    py: Python<'_>,
    v_mhz: Vec<f64>,
    durations_ns: Vec<f64>,
    protocols: Option<Vec<String>>,
    params: Option<PyPhysicalParams>,
) -> PyResult<Py<PyAny>> {
    let list = self::protocols(protocols)?;
    let v: Vec<f64> = v_mhz.into_iter().map(units::from_mhz_2pi).collect();
    let base = GateSetup::new(Protocol::Ncgc, params_or_default(params), ModelMode::Full);
    let report = py
        .detach(|| experiments::blockade_sweep(&list, &v, &durations_ns, &base))
        .map_err(err)?;
    to_py(py, &report)
}

/// Open-system NCGC fidelity against gate time; rates in kHz.
#[pyfunction]
#[pyo3(signature = (durations_ns, rates_khz=(1.0, 4.0, 30.0), convention="verbatim", inputs="superposition", params=None))]
fn decoherence_scan(
    py: Python<'_>,
    durations_ns: Vec<f64>,
    rates_khz: (f64, f64, f64),
    convention: &str,
    inputs: &str,
    params: Option<PyPhysicalParams>,
) -> PyResult<Py<PyAny>> {
    let convention: LindbladConvention = parse("convention", convention)?;
    let inputs: DecoherenceInputs = parse("inputs", inputs)?;
    let base = GateSetup::new(Protocol::Ncgc, params_or_default(params), ModelMode::Open);
    let rates = [rates_khz.0, rates_khz.1, rates_khz.2];
    let scan = py
        .detach(|| experiments::decoherence_scan(&durations_ns, rates, convention, inputs, &base))
        .map_err(err)?;
    to_py(py, &scan)
}

/// QFT circuit duration with cyclic and noncyclic controlled-phase gates.
#[pyfunction]
#[pyo3(signature = (n_qubits, convention="proportional_to_angle", t_gate_ns=250.0))]
fn qft_timing(py: Python<'_>, n_qubits: u32, convention: &str, t_gate_ns: f64) -> PyResult<Py<PyAny>> {
    let convention: QftConvention = parse("convention", convention)?;
    let model = QftTimingModel {
        t_gate_ns,
        ..QftTimingModel::new(n_qubits, convention)
    };
    to_py(py, &experiments::qft_timing(&model).map_err(err)?)
}

#[pymodule]
#[pyo3(name = "rydgate")]
fn rydgate_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RydgateError", m.py().get_type::<RydgateError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyPhysicalParams>()?;
    m.add_function(wrap_pyfunction!(waveform, m)?)?;
    m.add_function(wrap_pyfunction!(run_gate, m)?)?;
    m.add_function(wrap_pyfunction!(systematic_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(noise_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(blockade_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(decoherence_scan, m)?)?;
    m.add_function(wrap_pyfunction!(qft_timing, m)?)?;
    Ok(())
}
