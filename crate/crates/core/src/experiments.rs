//! Gate runs, robustness sweeps, decoherence scans and QFT timing.
//!
//! Sweep points and Monte Carlo trials run in parallel; results are collected
//! in grid order, so reports are identical for any thread count.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{self, make_collapse_set, CollapseSet, LindbladConvention, PropagatorOptions};
use crate::linalg::{self, DensityMatrix, StateVector, C64};
use crate::metrics::{self, GateResult};
use crate::model::{ModelMode, PhysicalParams, COMPUTATIONAL};
use crate::pulses::{
    perturb, perturb_trial, stream_key, NcgcParams, PerturbationSpec, PmParams, Protocol, PulseSchedule, RmParams,
};
use crate::units;

/// Protocol constants that are not part of [`PhysicalParams`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSettings {
    pub a: f64,
    /// `τ / T`
    pub tau_fraction: f64,
    pub phi_initial: f64,
    pub sta_enabled: bool,
    pub rm: RmParams,
    pub pm: PmParams,
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        Self {
            a: 1.0,
            tau_fraction: 0.5,
            phi_initial: 0.0,
            sta_enabled: true,
            rm: RmParams::default(),
            pm: PmParams::default(),
        }
    }
}

impl ProtocolSettings {
    pub fn ncgc(&self, duration: f64) -> NcgcParams {
        NcgcParams {
            a: self.a,
            tau: self.tau_fraction * duration,
            phi_initial: self.phi_initial,
            sta_enabled: self.sta_enabled,
        }
    }

    pub fn schedule(&self, protocol: Protocol, params: &PhysicalParams) -> Result<PulseSchedule> {
        match protocol {
            Protocol::Ncgc => PulseSchedule::ncgc(params, self.ncgc(params.duration)),
            Protocol::Rm => PulseSchedule::rm(params.duration, self.rm),
            Protocol::Pm => PulseSchedule::pm(params.duration, self.pm),
        }
    }
}

/// Everything a single gate evaluation depends on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateSetup {
    pub protocol: Protocol,
    pub params: PhysicalParams,
    pub mode: ModelMode,
    pub opts: PropagatorOptions,
    pub settings: ProtocolSettings,
}

impl GateSetup {
    pub fn new(protocol: Protocol, params: PhysicalParams, mode: ModelMode) -> Self {
        Self {
            protocol,
            params,
            mode,
            opts: PropagatorOptions::default(),
            settings: ProtocolSettings::default(),
        }
    }

    pub fn schedule(&self) -> Result<PulseSchedule> {
        self.settings.schedule(self.protocol, &self.params)
    }

    fn unitary(&self, schedule: &PulseSchedule) -> Result<linalg::Operator> {
        evolve::propagate_unitary(&self.params, schedule, self.mode, &self.opts)
    }

    /// The unperturbed computational block.
    pub fn ideal_block(&self) -> Result<linalg::Operator> {
        Ok(metrics::computational_block(&self.unitary(&self.schedule()?)?))
    }

    /// Reference gate for scoring.
    ///
    /// NCGC is scored against `cz_target(aπ)`. The cyclic protocols realise a
    /// controlled-Z only up to single-qubit phases, so their target keeps the
    /// local phases of the unperturbed run.
    pub fn target(&self) -> Result<linalg::Operator> {
        match self.protocol {
            Protocol::Ncgc => Ok(metrics::cz_target(self.settings.a * PI)),
            Protocol::Rm | Protocol::Pm => {
                let [phi_01, phi_10, _] = metrics::diagonal_phases(&self.ideal_block()?);
                Ok(metrics::cz_with_local_phases(phi_01, phi_10))
            }
        }
    }

    /// `K = Ω·T / (Δφ/2)` for NCGC.
    pub fn k_adiabatic(&self) -> Option<f64> {
        (self.protocol == Protocol::Ncgc)
            .then(|| self.params.omega * self.params.duration / (self.settings.a * PI / 2.0))
    }

    fn score(&self, schedule: &PulseSchedule, target: &linalg::Operator) -> Result<GateResult> {
        GateResult::from_propagator(&self.unitary(schedule)?, target)
    }
}

/// Outcome of [`run_gate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateRun {
    pub protocol: Protocol,
    pub mode: ModelMode,
    #[serde(flatten)]
    pub result: GateResult,
    pub k_adiabatic: Option<f64>,
    pub blockade_ratio: f64,
    pub soft_blockade: bool,
    pub warnings: Vec<String>,
}

/// Build, perturb, propagate and score one gate.
pub fn run_gate(setup: &GateSetup, perturbation: &PerturbationSpec) -> Result<GateRun> {
    let schedule = setup.schedule()?;
    let perturbed = perturb(&schedule, perturbation)?;
    let target = setup.target()?;
    let result = setup.score(&perturbed, &target)?;
    let mut warnings = perturbed.warnings.clone();
    if setup.params.soft_blockade() && setup.mode != ModelMode::Reduced {
        warnings.push(format!("soft blockade: V/Ω = {:.3}", setup.params.blockade_ratio()));
    }
    Ok(GateRun {
        protocol: setup.protocol,
        mode: setup.mode,
        result,
        k_adiabatic: setup.k_adiabatic(),
        blockade_ratio: setup.params.blockade_ratio(),
        soft_blockade: setup.params.soft_blockade(),
        warnings,
    })
}

/// Populations of every basis state along the evolution of each computational input.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DynamicsRow {
    pub input: String,
    pub t: f64,
    pub populations: Vec<f64>,
    /// `Arg⟨ψ(t)|ψ(0)⟩` when defined.
    pub phase: Option<f64>,
}

pub fn gate_dynamics(setup: &GateSetup, samples: usize) -> Result<Vec<DynamicsRow>> {
    let schedule = setup.schedule()?;
    let times: Vec<f64> = (0..=samples.max(1))
        .map(|k| setup.params.duration * k as f64 / samples.max(1) as f64)
        .collect();
    let dim = setup.mode.dim();
    let mut rows = Vec::new();
    for label in COMPUTATIONAL {
        let psi0 = linalg::basis_vector(dim, label.index());
        let traj = evolve::propagate_state(&setup.params, &schedule, setup.mode, &psi0, &setup.opts, &times)?;
        for (t, psi) in traj.times.iter().zip(&traj.states) {
            rows.push(DynamicsRow {
                input: label.name().to_string(),
                t: *t,
                populations: psi.iter().map(|z| z.norm_sqr()).collect(),
                phase: metrics::relative_phase(psi, &psi0).ok(),
            });
        }
    }
    Ok(rows)
}

/// One grid point of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub protocol: Option<Protocol>,
    /// Coordinates, one per axis name.
    pub coords: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub n_trials: usize,
    pub seeds: Vec<u64>,
    /// Additional per-point columns.
    pub extra: BTreeMap<String, f64>,
}

impl SweepPoint {
    fn single(protocol: Option<Protocol>, coords: Vec<f64>, value: f64) -> Self {
        Self {
            protocol,
            coords,
            mean: value,
            std: 0.0,
            n_trials: 1,
            seeds: Vec::new(),
            extra: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub experiment: String,
    pub axes: Vec<String>,
    pub points: Vec<SweepPoint>,
    pub metadata: serde_json::Value,
}

/// Fixed-width scientific notation carrying 17 significant digits.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

impl SweepReport {
    fn extra_columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = self.points.iter().flat_map(|p| p.extra.keys().cloned()).collect();
        cols.sort();
        cols.dedup();
        cols
    }

    pub fn to_csv(&self) -> String {
        let extras = self.extra_columns();
        let mut out = String::from("protocol");
        for axis in &self.axes {
            out.push(',');
            out.push_str(axis);
        }
        out.push_str(",fidelity_mean,fidelity_std,n_trials");
        for col in &extras {
            out.push(',');
            out.push_str(col);
        }
        out.push('\n');
        for p in &self.points {
            out.push_str(p.protocol.map_or("", Protocol::name));
            for c in &p.coords {
                let _ = write!(out, ",{}", format_number(*c));
            }
            let _ = write!(
                out,
                ",{},{},{}",
                format_number(p.mean),
                format_number(p.std),
                p.n_trials
            );
            for col in &extras {
                let _ = write!(
                    out,
                    ",{}",
                    p.extra.get(col).map_or(String::new(), |v| format_number(*v))
                );
            }
            out.push('\n');
        }
        out
    }

    /// Points of one protocol, in grid order.
    pub fn curve(&self, protocol: Protocol) -> Vec<&SweepPoint> {
        self.points.iter().filter(|p| p.protocol == Some(protocol)).collect()
    }

    pub fn point(&self, protocol: Option<Protocol>, coords: &[f64]) -> Option<&SweepPoint> {
        self.points
            .iter()
            .find(|p| p.protocol == protocol && p.coords == coords)
    }
}

fn check_grid(name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid(name, "grid is empty"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(name, "grid values must be finite"));
    }
    if grid
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::invalid(name, "grid must be strictly increasing"));
    }
    Ok(())
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.windows(2).all(|w| w[0] == w[1]) {
        return (values[0], 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystematicAxis {
    Kappa1,
    Kappa2,
}

impl SystematicAxis {
    pub fn name(self) -> &'static str {
        match self {
            SystematicAxis::Kappa1 => "kappa1",
            SystematicAxis::Kappa2 => "kappa2",
        }
    }
}

fn setup_metadata(setup: &GateSetup) -> serde_json::Value {
    serde_json::json!({
        "mode": setup.mode.name(),
        "omega_2pi_mhz": units::to_mhz_2pi(setup.params.omega),
        "delta_2pi_mhz": units::to_mhz_2pi(setup.params.delta),
        "v_blockade_2pi_mhz": units::to_mhz_2pi(setup.params.v_blockade),
        "duration_ns": setup.params.duration,
        "integrator": setup.opts,
        "settings": setup.settings,
    })
}

/// Fidelity under a static Rabi (`kappa1`) or detuning (`kappa2`) offset.
pub fn systematic_sweep(
    protocols: &[Protocol],
    axis: SystematicAxis,
    grid: &[f64],
    base: &GateSetup,
) -> Result<SweepReport> {
    check_grid(axis.name(), grid)?;
    let targets = protocols
        .par_iter()
        .map(|&protocol| GateSetup { protocol, ..*base }.target())
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, f64)> = (0..protocols.len())
        .flat_map(|i| grid.iter().map(move |&x| (i, x)))
        .collect();
    let points = jobs
        .par_iter()
        .map(|&(i, x)| {
            let setup = GateSetup {
                protocol: protocols[i],
                ..*base
            };
            let spec = match axis {
                SystematicAxis::Kappa1 => PerturbationSpec::systematic(x, 0.0),
                SystematicAxis::Kappa2 => PerturbationSpec::systematic(0.0, x),
            };
            let schedule = perturb(&setup.schedule()?, &spec)?;
            let r = setup.score(&schedule, &targets[i])?;
            let mut point = SweepPoint::single(Some(setup.protocol), vec![x], r.fidelity);
            point.extra.insert("leakage".into(), r.leakage);
            point.extra.insert("cz_condition".into(), r.cz_condition);
            Ok(point)
        })
        .collect::<Result<Vec<_>>>()?;
    let warnings: Vec<String> = grid
        .iter()
        .filter(|x| x.abs() > crate::pulses::SYSTEMATIC_RANGE)
        .map(|x| format!("{}={x} outside [-0.1, 0.1]", axis.name()))
        .collect();
    Ok(SweepReport {
        experiment: "sweep-systematic".into(),
        axes: vec![axis.name().into()],
        points,
        metadata: serde_json::json!({
            "setup": setup_metadata(base),
            "protocols": protocols,
            "warnings": warnings,
        }),
    })
}

/// Random-noise Monte Carlo over a grid of `(amp₁, amp₂)` noise amplitudes.
///
/// Trial `j` at grid point `i` draws from generator `stream_key(seed, [i])`,
/// stream `j`.
pub fn noise_monte_carlo(
    protocol: Protocol,
    amp1_grid: &[f64],
    amp2_grid: &[f64],
    trials: usize,
    seed: u64,
    noise: &PerturbationSpec,
    base: &GateSetup,
) -> Result<SweepReport> {
    check_grid("noise_amp1", amp1_grid)?;
    check_grid("noise_amp2", amp2_grid)?;
    if trials == 0 {
        return Err(Error::invalid("trials", "must be >= 1"));
    }
    let setup = GateSetup { protocol, ..*base };
    let schedule = setup.schedule()?;
    let target = setup.target()?;
    let grid: Vec<(f64, f64)> = amp1_grid
        .iter()
        .flat_map(|&a1| amp2_grid.iter().map(move |&a2| (a1, a2)))
        .collect();
    let jobs: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|i| (0..trials as u64).map(move |j| (i, j)))
        .collect();
    let values = jobs
        .par_iter()
        .map(|&(i, j)| {
            let (a1, a2) = grid[i];
            let spec = PerturbationSpec {
                noise_amp1: a1,
                noise_amp2: a2,
                seed,
                ..*noise
            };
            let key = stream_key(seed, &[i as u64]);
            let perturbed = perturb_trial(&schedule, &spec, key, j)?;
            Ok(setup.score(&perturbed, &target)?.fidelity)
        })
        .collect::<Result<Vec<f64>>>()?;
    let points = grid
        .iter()
        .enumerate()
        .map(|(i, &(a1, a2))| {
            let chunk = &values[i * trials..(i + 1) * trials];
            let (mean, std) = mean_std(chunk);
            let mut extra = BTreeMap::new();
            extra.insert(
                "fidelity_min".into(),
                chunk.iter().copied().fold(f64::INFINITY, f64::min),
            );
            SweepPoint {
                protocol: Some(protocol),
                coords: vec![a1, a2],
                mean,
                std,
                n_trials: trials,
                seeds: vec![stream_key(seed, &[i as u64])],
                extra,
            }
        })
        .collect();
    Ok(SweepReport {
        experiment: "sweep-noise".into(),
        axes: vec!["noise_amp1".into(), "noise_amp2".into()],
        points,
        metadata: serde_json::json!({
            "setup": setup_metadata(&setup),
            "seed": seed,
            "trials": trials,
            "noise_segment_ns": noise.noise_segment,
            "distribution": noise.distribution,
            "stream": "ChaCha8: key = stream_key(seed, [point]); stream = trial; word offset = 4 * segment",
        }),
    })
}

/// Fidelity against blockade strength with the full Hamiltonian.
///
/// `v_grid` is in rad/ns; `durations` in ns. NCGC keeps Ω at every duration;
/// RM and PM follow their own duration scaling.
pub fn blockade_sweep(
    protocols: &[Protocol],
    v_grid: &[f64],
    durations: &[f64],
    base: &GateSetup,
) -> Result<SweepReport> {
    check_grid("v_blockade", v_grid)?;
    if durations.is_empty() {
        return Err(Error::invalid("durations", "need at least one duration"));
    }
    let mut jobs = Vec::new();
    for &protocol in protocols {
        for &duration in durations {
            for &v in v_grid {
                jobs.push((protocol, duration, v));
            }
        }
    }
    let points = jobs
        .par_iter()
        .map(|&(protocol, duration, v)| {
            let params = base.params.with_duration(duration)?.with_blockade(v)?;
            let setup = GateSetup {
                protocol,
                params,
                mode: ModelMode::Full,
                ..*base
            };
            let target = setup.target()?;
            let r = setup.score(&setup.schedule()?, &target)?;
            let mut point = SweepPoint::single(Some(protocol), vec![duration, units::to_mhz_2pi(v)], r.fidelity);
            point.extra.insert("blockade_ratio".into(), params.blockade_ratio());
            point.extra.insert("leakage".into(), r.leakage);
            Ok(point)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        experiment: "sweep-blockade".into(),
        axes: vec!["duration_ns".into(), "v_blockade_2pi_mhz".into()],
        points,
        metadata: serde_json::json!({
            "setup": setup_metadata(base),
            "protocols": protocols,
            "mode": "full",
        }),
    })
}

/// Inputs averaged by the decoherence scan.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoherenceInputs {
    /// `(|00⟩+|01⟩+|10⟩+|11⟩)/2` only.
    #[default]
    Superposition,
    /// The four computational states and the uniform superposition, averaged.
    FiveInputs,
}

/// `count` log-spaced values on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| match k {
            0 => lo,
            k if k == count - 1 => hi,
            k => (a + (b - a) * k as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

/// First `x` where the piecewise-linear curve drops below `level`.
pub fn threshold_crossing(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    if ys.first().is_some_and(|&y| y < level) {
        return None;
    }
    xs.windows(2).zip(ys.windows(2)).find_map(|(x, y)| {
        (y[0] >= level && y[1] < level).then(|| x[0] + (x[1] - x[0]) * (y[0] - level) / (y[0] - y[1]))
    })
}

fn open_superposition() -> StateVector {
    let mut psi = linalg::zeros(ModelMode::Open.dim()).column(0).into_owned();
    for l in COMPUTATIONAL {
        psi[l.index()] = C64::new(0.5, 0.0);
    }
    psi
}

/// Ideal output: `cz_target(aπ)` applied within the computational states.
fn ideal_output(psi: &StateVector, dphi: f64) -> StateVector {
    let target = metrics::cz_target(dphi);
    let mut out = psi.clone();
    for (k, l) in COMPUTATIONAL.iter().enumerate() {
        out[l.index()] = target[(k, k)] * psi[l.index()];
    }
    out
}

/// State fidelity of NCGC under decay and dephasing, per input.
pub fn decoherence_fidelities(setup: &GateSetup, collapse: &CollapseSet) -> Result<Vec<f64>> {
    let schedule = setup.schedule()?;
    let dphi = setup.settings.a * PI;
    let dim = ModelMode::Open.dim();
    let mut inputs: Vec<StateVector> = COMPUTATIONAL
        .iter()
        .map(|l| linalg::basis_vector(dim, l.index()))
        .collect();
    inputs.push(open_superposition());
    inputs
        .par_iter()
        .map(|psi| {
            let rho0 = DensityMatrix::from_pure(psi)?;
            let rho = evolve::lindblad_evolve(&setup.params, &schedule, collapse, &rho0, &setup.opts)?;
            let ideal = DensityMatrix::from_pure(&ideal_output(psi, dphi))?;
            metrics::state_fidelity(&rho, &ideal)
        })
        .collect()
}

/// Result of [`decoherence_scan`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecoherenceScan {
    pub report: SweepReport,
    pub inputs: DecoherenceInputs,
    pub convention: LindbladConvention,
    /// `T` where the selected fidelity first drops below 0.99 / 0.999.
    pub crossing_099: Option<f64>,
    pub crossing_0999: Option<f64>,
    /// Same crossings for the other input set.
    pub alt_crossing_099: Option<f64>,
    pub alt_crossing_0999: Option<f64>,
}

/// NCGC state fidelity against gate time in the open model.
///
/// Rates are in kHz. Both input sets are evaluated at every point; `inputs`
/// selects the one reported as `fidelity_mean`.
pub fn decoherence_scan(
    t_grid: &[f64],
    rates_khz: [f64; 3],
    convention: LindbladConvention,
    inputs: DecoherenceInputs,
    base: &GateSetup,
) -> Result<DecoherenceScan> {
    check_grid("duration", t_grid)?;
    let collapse = if rates_khz.iter().all(|&g| g == 0.0) {
        CollapseSet::none()
    } else {
        make_collapse_set(rates_khz[0], rates_khz[1], rates_khz[2])?
    }
    .with_convention(convention);
    let per_t = t_grid
        .iter()
        .map(|&duration| {
            let setup = GateSetup {
                protocol: Protocol::Ncgc,
                params: base.params.with_duration(duration)?,
                mode: ModelMode::Open,
                ..*base
            };
            decoherence_fidelities(&setup, &collapse)
        })
        .collect::<Result<Vec<_>>>()?;
    let superposition: Vec<f64> = per_t.iter().map(|f| f[4]).collect();
    let average: Vec<f64> = per_t.iter().map(|f| f.iter().sum::<f64>() / f.len() as f64).collect();
    let (primary, alt) = match inputs {
        DecoherenceInputs::Superposition => (&superposition, &average),
        DecoherenceInputs::FiveInputs => (&average, &superposition),
    };
    let points = t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut point = SweepPoint::single(Some(Protocol::Ncgc), vec![t], primary[i]);
            point.extra.insert("fidelity_superposition".into(), superposition[i]);
            point.extra.insert("fidelity_five_input_mean".into(), average[i]);
            for (k, l) in COMPUTATIONAL.iter().enumerate() {
                point.extra.insert(format!("fidelity_{}", l.name()), per_t[i][k]);
            }
            point
        })
        .collect();
    let report = SweepReport {
        experiment: "sweep-decoherence".into(),
        axes: vec!["duration_ns".into()],
        points,
        metadata: serde_json::json!({
            "setup": setup_metadata(base),
            "rates_khz": rates_khz,
            "gamma_khz": collapse.gamma_khz,
            "convention": convention,
            "inputs": inputs,
            "threshold_interpolation": "linear",
        }),
    };
    Ok(DecoherenceScan {
        report,
        inputs,
        convention,
        crossing_099: threshold_crossing(t_grid, primary, 0.99),
        crossing_0999: threshold_crossing(t_grid, primary, 0.999),
        alt_crossing_099: threshold_crossing(t_grid, alt, 0.99),
        alt_crossing_0999: threshold_crossing(t_grid, alt, 0.999),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QftConvention {
    /// `T_L = T_N · Δφ_L / π`
    #[default]
    ProportionalToAngle,
    /// `T_L = T_N / 2^L`
    Halving,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QftTimingModel {
    pub n_qubits: u32,
    /// Duration of a full-angle gate in ns.
    pub t_gate_ns: f64,
    pub convention: QftConvention,
    /// Rabi frequency used for the diagnostic `K`, rad/ns.
    pub omega: f64,
}

impl QftTimingModel {
    pub fn new(n_qubits: u32, convention: QftConvention) -> Self {
        Self {
            n_qubits,
            t_gate_ns: 250.0,
            convention,
            omega: units::from_mhz_2pi(4.0),
        }
    }

    /// Duration of the controlled-phase gate with `Δφ_L = 2π/2^L`.
    pub fn level_duration(&self, level: u32) -> f64 {
        let scale = 0.5f64.powi(level as i32);
        match self.convention {
            QftConvention::ProportionalToAngle => self.t_gate_ns * 2.0 * scale,
            QftConvention::Halving => self.t_gate_ns * scale,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QftLevel {
    pub level: u32,
    pub delta_phi: f64,
    pub count: u32,
    pub t_ncgc_ns: f64,
    pub t_cyclic_ns: f64,
    pub k_adiabatic: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QftTiming {
    pub model: QftTimingModel,
    pub t_total_cyclic: f64,
    pub t_total_ncgc: f64,
    pub levels: Vec<QftLevel>,
}

/// Wall-time of an `N`-qubit QFT with cyclic and with noncyclic controlled phases.
pub fn qft_timing(model: &QftTimingModel) -> Result<QftTiming> {
    if model.n_qubits < 2 {
        return Err(Error::invalid("n_qubits", "QFT timing needs N >= 2"));
    }
    if !(model.t_gate_ns.is_finite() && model.t_gate_ns > 0.0) {
        return Err(Error::invalid("t_gate_ns", "must be finite and > 0"));
    }
    let n = model.n_qubits;
    let t = model.t_gate_ns;
    let levels: Vec<QftLevel> = (1..n)
        .map(|level| {
            let delta_phi = 2.0 * PI / f64::from(1u32 << level.min(31));
            let t_ncgc = model.level_duration(level);
            QftLevel {
                level,
                delta_phi,
                count: n - level,
                t_ncgc_ns: t_ncgc,
                t_cyclic_ns: 3.0 * t,
                k_adiabatic: model.omega * t_ncgc / (delta_phi / 2.0),
            }
        })
        .collect();
    let hadamards = f64::from(n) * t;
    let t_total_cyclic = hadamards + levels.iter().map(|l| f64::from(l.count) * l.t_cyclic_ns).sum::<f64>();
    let t_total_ncgc = hadamards + levels.iter().map(|l| f64::from(l.count) * l.t_ncgc_ns).sum::<f64>();
    Ok(QftTiming {
        model: *model,
        t_total_cyclic,
        t_total_ncgc,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qft_examples() {
        let two = qft_timing(&QftTimingModel::new(2, QftConvention::ProportionalToAngle)).unwrap();
        assert_eq!(two.t_total_cyclic, 1250.0);
        assert_eq!(two.t_total_ncgc, 750.0);
        let halving = qft_timing(&QftTimingModel::new(2, QftConvention::Halving)).unwrap();
        assert_eq!(halving.t_total_ncgc, 625.0);
        assert!(qft_timing(&QftTimingModel::new(1, QftConvention::Halving)).is_err());
        let eight = qft_timing(&QftTimingModel::new(8, QftConvention::ProportionalToAngle)).unwrap();
        assert_eq!(eight.levels.iter().map(|l| l.count).sum::<u32>(), 28);
        assert!(eight.t_total_ncgc < eight.t_total_cyclic);
    }

    #[test]
    fn crossings_interpolate_linearly() {
        let xs = [10.0, 20.0, 40.0];
        let ys = [0.9995, 0.995, 0.985];
        assert!((threshold_crossing(&xs, &ys, 0.999).unwrap() - (10.0 + 10.0 * 0.5 / 4.5)).abs() < 1e-12);
        assert!((threshold_crossing(&xs, &ys, 0.99).unwrap() - 30.0).abs() < 1e-9);
        assert_eq!(threshold_crossing(&xs, &ys, 0.9), None);
        assert_eq!(threshold_crossing(&xs, &ys, 0.9999), None);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(40.0, 1000.0, 20);
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 40.0);
        assert_eq!(g[19], 1000.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn csv_layout() {
        let mut p = SweepPoint::single(Some(Protocol::Pm), vec![0.1], 0.5);
        p.extra.insert("leakage".into(), 0.25);
        let r = SweepReport {
            experiment: "x".into(),
            axes: vec!["kappa1".into()],
            points: vec![p],
            metadata: serde_json::Value::Null,
        };
        let csv = r.to_csv();
        assert_eq!(
            csv,
            "protocol,kappa1,fidelity_mean,fidelity_std,n_trials,leakage\n\
             pm,1.0000000000000001e-1,5.0000000000000000e-1,0.0000000000000000e0,1,2.5000000000000000e-1\n"
        );
    }

    #[test]
    fn empty_or_unsorted_grids_rejected() {
        let base = GateSetup::new(Protocol::Ncgc, PhysicalParams::reference(), ModelMode::Reduced);
        assert!(systematic_sweep(&[Protocol::Ncgc], SystematicAxis::Kappa1, &[], &base).is_err());
        assert!(systematic_sweep(&[Protocol::Ncgc], SystematicAxis::Kappa1, &[0.1, 0.0], &base).is_err());
        assert!(noise_monte_carlo(
            Protocol::Ncgc,
            &[0.0],
            &[0.0],
            0,
            1,
            &PerturbationSpec::default(),
            &base
        )
        .is_err());
    }
}
