//! Config format and subcommand dispatch behind the `rydgate` binary.
//!
//! Configs are TOML or JSON. Every dimensional value is a string carrying its
//! unit (`"4 mhz_2pi"`, `"500 ns"`, `"0.7 rad"`, `"30 khz"`); bare numbers are
//! rejected for those keys, and unknown keys are errors.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolve::{IntegratorOrder, LindbladConvention, PropagatorOptions};
use crate::experiments::{
    self, DecoherenceInputs, GateSetup, ProtocolSettings, QftConvention, QftTimingModel, SweepReport, SystematicAxis,
};
use crate::model::{ModelMode, PhysicalParams};
use crate::pulses::{NoiseDistribution, PerturbationSpec, PmParams, Protocol, RmParams};
use crate::units;

/// A unit suffix accepted in config values.
pub trait Unit {
    const SUFFIX: &'static str;
    /// Factor from the written value to internal units.
    const SCALE: f64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MegahertzTwoPi;
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nanoseconds;
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Radians;
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kilohertz;

impl Unit for MegahertzTwoPi {
    const SUFFIX: &'static str = "mhz_2pi";
    const SCALE: f64 = units::MHZ_2PI;
}
impl Unit for Nanoseconds {
    const SUFFIX: &'static str = "ns";
    const SCALE: f64 = 1.0;
}
impl Unit for Radians {
    const SUFFIX: &'static str = "rad";
    const SCALE: f64 = 1.0;
}
impl Unit for Kilohertz {
    const SUFFIX: &'static str = "khz";
    const SCALE: f64 = 1.0;
}

/// A number with a mandatory unit suffix, kept as written.
pub struct Quantity<U> {
    pub value: f64,
    unit: PhantomData<U>,
}

impl<U> Quantity<U> {
    pub const fn new(value: f64) -> Self {
        Self {
            value,
            unit: PhantomData,
        }
    }
}

impl<U: Unit> Quantity<U> {
    /// Value in internal units (rad/ns, ns, rad, kHz).
    pub fn internal(&self) -> f64 {
        self.value * U::SCALE
    }
}

impl<U> Clone for Quantity<U> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<U> Copy for Quantity<U> {}
impl<U> PartialEq for Quantity<U> {
    fn eq(&self, other: &Self) -> bool {
        self.value.to_bits() == other.value.to_bits()
    }
}

impl<U: Unit> fmt::Debug for Quantity<U> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, U::SUFFIX)
    }
}

impl<U: Unit> fmt::Display for Quantity<U> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, U::SUFFIX)
    }
}

impl<U: Unit> std::str::FromStr for Quantity<U> {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let number = s
            .strip_suffix(U::SUFFIX)
            .ok_or_else(|| format!("'{s}' must end with the unit '{}'", U::SUFFIX))?
            .trim_end();
        let value: f64 = number
            .parse()
            .map_err(|_| format!("'{number}' is not a number (in '{s}')"))?;
        if !value.is_finite() {
            return Err(format!("'{s}' is not finite"));
        }
        Ok(Self::new(value))
    }
}

impl<U: Unit> Serialize for Quantity<U> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de, U: Unit> Deserialize<'de> for Quantity<U> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V<U>(PhantomData<U>);
        impl<U: Unit> Visitor<'_> for V<U> {
            type Value = Quantity<U>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a string like \"1.5 {}\"", U::SUFFIX)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
                Err(E::custom(format!(
                    "bare number {v} needs a unit: write \"{v} {}\"",
                    U::SUFFIX
                )))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }
        }
        d.deserialize_any(V(PhantomData))
    }
}

pub type Frequency = Quantity<MegahertzTwoPi>;
pub type Time = Quantity<Nanoseconds>;
pub type Angle = Quantity<Radians>;
pub type Rate = Quantity<Kilohertz>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalConfig {
    pub omega: Frequency,
    pub delta: Frequency,
    pub v_blockade: Frequency,
    pub duration: Time,
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        Self {
            omega: Frequency::new(4.0),
            delta: Frequency::new(0.0),
            v_blockade: Frequency::new(500.0),
            duration: Time::new(500.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NcgcConfig {
    pub a: f64,
    /// Defaults to `T/2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<Time>,
    pub phi_initial: Angle,
    pub sta_enabled: bool,
}

impl Default for NcgcConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            tau: None,
            phi_initial: Angle::new(0.0),
            sta_enabled: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RmConfig {
    pub beta: [Frequency; 4],
    pub delta1: Frequency,
    pub reference_duration: Time,
}

impl Default for RmConfig {
    fn default() -> Self {
        Self {
            beta: [1.419, 0.0, 5.076, 13.425].map(Frequency::new),
            delta1: Frequency::new(3.512),
            reference_duration: Time::new(1000.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PmConfig {
    /// Overrides the area rule `Ω₂ = area / T`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<Frequency>,
    pub delta: Frequency,
    pub amplitude: Angle,
    pub frequency_ratio: f64,
    pub phi0: Angle,
    pub area: Angle,
}

impl Default for PmConfig {
    fn default() -> Self {
        let p = PmParams::default();
        Self {
            omega: None,
            delta: Frequency::new(0.0),
            amplitude: Angle::new(p.amplitude),
            frequency_ratio: p.frequency_ratio,
            phi0: Angle::new(p.phi0),
            area: Angle::new(p.area),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub step: Time,
    pub order: IntegratorOrder,
    pub tolerance: f64,
    pub include_cd: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let o = PropagatorOptions::default();
        Self {
            step: Time::new(o.step_ns),
            order: o.order,
            tolerance: o.tolerance,
            include_cd: o.include_cd,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationConfig {
    pub kappa1: f64,
    pub kappa2: f64,
    pub noise_amp1: f64,
    pub noise_amp2: f64,
    pub noise_segment: Time,
    pub distribution: NoiseDistribution,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            kappa1: 0.0,
            kappa2: 0.0,
            noise_amp1: 0.0,
            noise_amp2: 0.0,
            noise_segment: Time::new(1.0),
            distribution: NoiseDistribution::OneSided,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QftConventionChoice {
    #[default]
    Both,
    ProportionalToAngle,
    Halving,
}

/// Grids and knobs of the individual experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub waveform_samples: usize,
    pub trajectory_samples: usize,
    pub protocols: Vec<Protocol>,
    pub axis: SystematicAxis,
    pub kappa_grid: Vec<f64>,
    pub noise_amp1_grid: Vec<f64>,
    pub noise_amp2_grid: Vec<f64>,
    pub trials: usize,
    pub v_grid: Vec<Frequency>,
    pub durations: Vec<Time>,
    /// Defaults to 20 log-spaced values in [40, 1000] ns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<Time>>,
    pub rates: [Rate; 3],
    pub lindblad: LindbladConvention,
    pub inputs: DecoherenceInputs,
    pub n_qubits: u32,
    pub t_gate: Time,
    pub qft_convention: QftConventionChoice,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            waveform_samples: 1000,
            trajectory_samples: 500,
            protocols: Protocol::ALL.to_vec(),
            axis: SystematicAxis::Kappa1,
            kappa_grid: (0..=20).map(|k| (f64::from(k) - 10.0) / 100.0).collect(),
            noise_amp1_grid: vec![0.0, 0.05, 0.1],
            noise_amp2_grid: vec![0.0, 0.05, 0.1],
            trials: 50,
            v_grid: [200.0, 400.0, 600.0, 800.0, 1000.0].map(Frequency::new).to_vec(),
            durations: vec![Time::new(500.0), Time::new(250.0)],
            t_grid: None,
            rates: [1.0, 4.0, 30.0].map(Rate::new),
            lindblad: LindbladConvention::Verbatim,
            inputs: DecoherenceInputs::Superposition,
            n_qubits: 8,
            t_gate: Time::new(250.0),
            qft_convention: QftConventionChoice::Both,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
}

/// Everything a run depends on. An empty config means the reference settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub mode: ModelMode,
    pub seed: u64,
    pub physical: PhysicalConfig,
    pub ncgc: NcgcConfig,
    pub rm: RmConfig,
    pub pm: PmConfig,
    pub integrator: IntegratorConfig,
    pub perturbation: PerturbationConfig,
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::Ncgc,
            mode: ModelMode::Reduced,
            seed: 0,
            physical: PhysicalConfig::default(),
            ncgc: NcgcConfig::default(),
            rm: RmConfig::default(),
            pm: PmConfig::default(),
            integrator: IntegratorConfig::default(),
            perturbation: PerturbationConfig::default(),
            experiment: ExperimentConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

fn config_error(path: &str, err: impl fmt::Display) -> Error {
    let path = if path.is_empty() || path == "." {
        String::new()
    } else {
        format!("at '{path}': ")
    };
    Error::Config(format!("{path}{err}"))
}

/// Parse TOML, or JSON when the text starts with `{`.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = if text.trim_start().starts_with('{') {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(|e| config_error(&e.path().to_string(), e.inner()))?
    } else {
        let de = toml::Deserializer::parse(text).map_err(|e| config_error("", e))?;
        serde_path_to_error::deserialize(de).map_err(|e| config_error(&e.path().to_string(), e.inner()))?
    };
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read config '{}': {e}", path.display())))?;
    parse_config(&text)
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.physical_params()?;
        self.protocol_settings()
            .ncgc(self.physical.duration.internal())
            .validate(self.physical.duration.internal())?;
        self.propagator_options().validate()?;
        self.perturbation_spec().validate()?;
        if self.experiment.trials == 0 {
            return Err(Error::invalid("experiment.trials", "must be >= 1"));
        }
        Ok(())
    }

    pub fn physical_params(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(
            self.physical.omega.internal(),
            self.physical.delta.internal(),
            self.physical.v_blockade.internal(),
            self.physical.duration.internal(),
        )
    }

    pub fn protocol_settings(&self) -> ProtocolSettings {
        let duration = self.physical.duration.internal();
        let tau = self.ncgc.tau.map_or(duration / 2.0, |t| t.internal());
        ProtocolSettings {
            a: self.ncgc.a,
            tau_fraction: tau / duration,
            phi_initial: self.ncgc.phi_initial.internal(),
            sta_enabled: self.ncgc.sta_enabled,
            rm: RmParams {
                beta: self.rm.beta.map(|b| b.internal()),
                delta1: self.rm.delta1.internal(),
                degree: 8,
                reference_duration: self.rm.reference_duration.internal(),
            },
            pm: PmParams {
                omega2: self.pm.omega.map(|w| w.internal()),
                delta2: self.pm.delta.internal(),
                amplitude: self.pm.amplitude.internal(),
                frequency_ratio: self.pm.frequency_ratio,
                phi0: self.pm.phi0.internal(),
                area: self.pm.area.internal(),
            },
        }
    }

    pub fn propagator_options(&self) -> PropagatorOptions {
        PropagatorOptions {
            step_ns: self.integrator.step.internal(),
            order: self.integrator.order,
            tolerance: self.integrator.tolerance,
            include_cd: self.integrator.include_cd,
        }
    }

    pub fn perturbation_spec(&self) -> PerturbationSpec {
        let p = &self.perturbation;
        PerturbationSpec {
            kappa1: p.kappa1,
            kappa2: p.kappa2,
            noise_amp1: p.noise_amp1,
            noise_amp2: p.noise_amp2,
            noise_segment: p.noise_segment.internal(),
            distribution: p.distribution,
            seed: self.seed,
        }
    }

    pub fn gate_setup(&self) -> Result<GateSetup> {
        Ok(GateSetup {
            protocol: self.protocol,
            params: self.physical_params()?,
            mode: self.mode,
            opts: self.propagator_options(),
            settings: self.protocol_settings(),
        })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rydgate",
    version,
    about = "Rydberg-blockade controlled-phase gate simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML or JSON run config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_protocol)]
    pub protocol: Option<Protocol>,
    /// Output file; a `.meta.json` sidecar is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<ModelMode>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump the control waveform as CSV.
    Waveform,
    /// Simulate one gate and print its fidelity and phases.
    Gate {
        /// Also write the population dynamics of each computational input.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Fidelity against a systematic Rabi or detuning offset.
    SweepSystematic,
    /// Random-noise Monte Carlo.
    SweepNoise,
    /// Fidelity against blockade strength (full Hamiltonian).
    SweepBlockade,
    /// Open-system fidelity against gate time.
    SweepDecoherence,
    /// QFT duration with cyclic and noncyclic gates.
    QftTiming {
        #[arg(long)]
        n: Option<u32>,
    },
}

fn parse_protocol(s: &str) -> std::result::Result<Protocol, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> std::result::Result<ModelMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Cli {
    /// Config file (or defaults) with command-line overrides applied.
    pub fn resolve_config(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(p) = self.protocol {
            config.protocol = p;
        }
        if let Some(m) = self.mode {
            config.mode = m;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(t) = self.trials {
            config.experiment.trials = t;
        }
        if let Some(out) = &self.out {
            config.output.path = Some(out.clone());
        }
        if let Some(f) = self.format {
            config.output.format = Some(f);
        }
        match &self.command {
            Command::Gate { trajectory: Some(t) } => config.output.trajectory = Some(t.clone()),
            Command::QftTiming { n: Some(n) } => config.experiment.n_qubits = *n,
            _ => {}
        }
        config.validate()?;
        Ok(config)
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Waveform => "waveform",
            Command::Gate { .. } => "gate",
            Command::SweepSystematic => "sweep-systematic",
            Command::SweepNoise => "sweep-noise",
            Command::SweepBlockade => "sweep-blockade",
            Command::SweepDecoherence => "sweep-decoherence",
            Command::QftTiming { .. } => "qft-timing",
        }
    }

    fn default_format(&self) -> OutputFormat {
        match self {
            Command::Gate { .. } | Command::QftTiming { .. } => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

/// Git-style content hash: SHA-256 of `"blob <len>\0" + bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    let digest = h.finalize();
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

/// Main artifact of a run plus summary fields for the sidecar.
pub struct Artifact {
    pub body: String,
    pub summary: serde_json::Value,
}

fn json_body(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result serialises");
    s.push('\n');
    s
}

fn report_body(report: &SweepReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => report.to_csv(),
        OutputFormat::Json => json_body(report),
    }
}

/// Run one subcommand on a resolved config; returns the rendered output.
pub fn execute(command: &Command, config: &RunConfig) -> Result<Artifact> {
    let format = config.output.format.unwrap_or(command.default_format());
    let setup = config.gate_setup()?;
    let exp = &config.experiment;
    match command {
        Command::Waveform => {
            let schedule = setup.schedule()?;
            let samples = schedule.samples(exp.waveform_samples)?;
            let body = match format {
                OutputFormat::Csv => {
                    let mut s = String::from("t_ns,omega_2pi_mhz,delta_2pi_mhz,phi_rad\n");
                    for x in &samples {
                        s.push_str(&format!(
                            "{},{},{},{}\n",
                            experiments::format_number(x.t),
                            experiments::format_number(units::to_mhz_2pi(x.omega)),
                            experiments::format_number(units::to_mhz_2pi(x.delta)),
                            experiments::format_number(x.phi),
                        ));
                    }
                    s
                }
                OutputFormat::Json => json_body(&serde_json::json!({
                    "meta": schedule.meta(),
                    "samples": samples.iter().map(|x| [x.t, units::to_mhz_2pi(x.omega), units::to_mhz_2pi(x.delta), x.phi]).collect::<Vec<_>>(),
                })),
            };
            Ok(Artifact {
                body,
                summary: schedule.meta(),
            })
        }
        Command::Gate { .. } => {
            let run = experiments::run_gate(&setup, &config.perturbation_spec())?;
            if let Some(path) = &config.output.trajectory {
                let rows = experiments::gate_dynamics(&setup, exp.trajectory_samples)?;
                let mut s = String::from("input,t_ns");
                for l in setup.mode.basis() {
                    s.push_str(&format!(",p_{}", l.name()));
                }
                s.push_str(",phase_rad\n");
                for r in rows {
                    s.push_str(&r.input);
                    s.push_str(&format!(",{}", experiments::format_number(r.t)));
                    for p in &r.populations {
                        s.push_str(&format!(",{}", experiments::format_number(*p)));
                    }
                    s.push_str(&format!(
                        ",{}\n",
                        r.phase.map_or(String::new(), experiments::format_number)
                    ));
                }
                write_file(path, s.as_bytes())?;
            }
            let summary = serde_json::json!({
                "fidelity": run.result.fidelity,
                "phi_01": run.result.phi_01,
                "phi_10": run.result.phi_10,
                "phi_11": run.result.phi_11,
                "leakage": run.result.leakage,
            });
            let body = match format {
                OutputFormat::Json => json_body(&run),
                OutputFormat::Csv => {
                    let r = &run.result;
                    let cells = [r.fidelity, r.fidelity_raw, r.phi_01, r.phi_10, r.phi_11, r.leakage];
                    let values: Vec<String> = cells.iter().map(|v| experiments::format_number(*v)).collect();
                    format!(
                        "protocol,mode,fidelity,fidelity_raw,phi_01,phi_10,phi_11,leakage\n{},{},{}\n",
                        run.protocol,
                        run.mode.name(),
                        values.join(",")
                    )
                }
            };
            Ok(Artifact { body, summary })
        }
        Command::SweepSystematic => {
            let report = experiments::systematic_sweep(&exp.protocols, exp.axis, &exp.kappa_grid, &setup)?;
            Ok(Artifact {
                body: report_body(&report, format),
                summary: serde_json::json!({ "points": report.points.len() }),
            })
        }
        Command::SweepNoise => {
            let report = experiments::noise_monte_carlo(
                config.protocol,
                &exp.noise_amp1_grid,
                &exp.noise_amp2_grid,
                exp.trials,
                config.seed,
                &config.perturbation_spec(),
                &setup,
            )?;
            let seeds: Vec<u64> = report.points.iter().flat_map(|p| p.seeds.clone()).collect();
            let min_mean = report.points.iter().map(|p| p.mean).fold(f64::INFINITY, f64::min);
            Ok(Artifact {
                body: report_body(&report, format),
                summary: serde_json::json!({ "seed": config.seed, "point_keys": seeds, "min_mean_fidelity": min_mean }),
            })
        }
        Command::SweepBlockade => {
            let protocols: Vec<Protocol> = exp.protocols.iter().copied().filter(|p| *p != Protocol::Rm).collect();
            let v: Vec<f64> = exp.v_grid.iter().map(|q| q.internal()).collect();
            let durations: Vec<f64> = exp.durations.iter().map(|q| q.internal()).collect();
            let report = experiments::blockade_sweep(&protocols, &v, &durations, &setup)?;
            Ok(Artifact {
                body: report_body(&report, format),
                summary: serde_json::json!({ "points": report.points.len() }),
            })
        }
        Command::SweepDecoherence => {
            let grid: Vec<f64> = match &exp.t_grid {
                Some(g) => g.iter().map(|q| q.internal()).collect(),
                None => experiments::log_grid(40.0, 1000.0, 20),
            };
            let rates = exp.rates.map(|r| r.internal());
            let scan = experiments::decoherence_scan(&grid, rates, exp.lindblad, exp.inputs, &setup)?;
            Ok(Artifact {
                body: report_body(&scan.report, format),
                summary: serde_json::json!({
                    "inputs": scan.inputs,
                    "convention": scan.convention,
                    "crossing_0p99_ns": scan.crossing_099,
                    "crossing_0p999_ns": scan.crossing_0999,
                    "other_inputs_crossing_0p99_ns": scan.alt_crossing_099,
                    "other_inputs_crossing_0p999_ns": scan.alt_crossing_0999,
                }),
            })
        }
        Command::QftTiming { .. } => {
            let conventions: Vec<QftConvention> = match exp.qft_convention {
                QftConventionChoice::Both => vec![QftConvention::ProportionalToAngle, QftConvention::Halving],
                QftConventionChoice::ProportionalToAngle => vec![QftConvention::ProportionalToAngle],
                QftConventionChoice::Halving => vec![QftConvention::Halving],
            };
            let model = |n, convention| QftTimingModel {
                n_qubits: n,
                t_gate_ns: exp.t_gate.internal(),
                convention,
                omega: setup.params.omega,
            };
            let timings = conventions
                .iter()
                .map(|&c| experiments::qft_timing(&model(exp.n_qubits, c)))
                .collect::<Result<Vec<_>>>()?;
            let body = match format {
                OutputFormat::Json => json_body(&timings),
                OutputFormat::Csv => {
                    let mut s = String::from("convention,n_qubits,t_total_cyclic_ns,t_total_ncgc_ns\n");
                    for &c in &conventions {
                        for n in 2..=exp.n_qubits {
                            let t = experiments::qft_timing(&model(n, c))?;
                            let name = serde_json::to_value(c).expect("enum serialises");
                            s.push_str(&format!(
                                "{},{n},{},{}\n",
                                name.as_str().unwrap_or_default(),
                                experiments::format_number(t.t_total_cyclic),
                                experiments::format_number(t.t_total_ncgc)
                            ));
                        }
                    }
                    s
                }
            };
            let summary = serde_json::json!(timings
                .iter()
                .map(|t| serde_json::json!({
                    "convention": t.model.convention,
                    "t_total_cyclic_ns": t.t_total_cyclic,
                    "t_total_ncgc_ns": t.t_total_ncgc,
                }))
                .collect::<Vec<_>>());
            Ok(Artifact { body, summary })
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Path of the JSON sidecar written next to `out`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Resolve, execute and emit. Output goes to `--out` plus sidecar, or stdout.
pub fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot configure {n} threads: {e}")))?;
    }
    let config = cli.resolve_config()?;
    let artifact = execute(&cli.command, &config)?;
    match &config.output.path {
        Some(path) => {
            write_file(path, artifact.body.as_bytes())?;
            let sidecar = serde_json::json!({
                "command": cli.command.name(),
                "output": path,
                "content_hash": content_hash(artifact.body.as_bytes()),
                "version": env!("CARGO_PKG_VERSION"),
                "summary": artifact.summary,
                "config": config,
            });
            write_file(&sidecar_path(path), json_body(&sidecar).as_bytes())?;
            println!(
                "{}",
                serde_json::to_string(&artifact.summary).expect("summary serialises")
            );
        }
        None => {
            std::io::stdout().write_all(artifact.body.as_bytes())?;
        }
    }
    Ok(())
}

/// Machine-readable error for stderr.
pub fn error_json(err: &Error) -> String {
    serde_json::json!({
        "error": err.kind(),
        "message": err.to_string(),
        "exit_code": err.exit_code(),
    })
    .to_string()
}
