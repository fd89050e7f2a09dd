//! Control waveforms for the three gate protocols and their perturbed variants.
//!
//! A [`PulseSchedule`] is an analytic description of `(Ω(t), Δ(t), φ(t))` on
//! `[0, T]`; it is evaluated wherever the integrator needs it, so sampling
//! introduces no interpolation error. Perturbations (systematic offsets and
//! piecewise-constant random noise) are folded into the schedule.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Controls, PhysicalParams};
use crate::units;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Ncgc,
    Rm,
    Pm,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Ncgc, Protocol::Rm, Protocol::Pm];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Ncgc => "ncgc",
            Protocol::Rm => "rm",
            Protocol::Pm => "pm",
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ncgc" => Ok(Protocol::Ncgc),
            "rm" => Ok(Protocol::Rm),
            "pm" => Ok(Protocol::Pm),
            other => Err(Error::invalid("protocol", format!("unknown protocol '{other}'"))),
        }
    }
}

/// Two-segment geometric phase sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NcgcParams {
    /// Rotation scale; the gate phase is `Δφ = aπ`.
    pub a: f64,
    /// Segment boundary in ns.
    pub tau: f64,
    pub phi_initial: f64,
    pub sta_enabled: bool,
}

impl NcgcParams {
    /// `a = 1`, `τ = T/2`, `φ⁽⁰⁾ = 0`, STA on.
    pub fn for_duration(duration: f64) -> Self {
        Self {
            a: 1.0,
            tau: duration / 2.0,
            phi_initial: 0.0,
            sta_enabled: true,
        }
    }

    pub fn validate(&self, duration: f64) -> Result<()> {
        if !(self.a > 0.0 && self.a <= 1.0) {
            return Err(Error::invalid("a", format!("must lie in (0, 1], got {}", self.a)));
        }
        if !(self.tau > 0.0 && self.tau < duration) {
            return Err(Error::invalid(
                "tau",
                format!("must lie in (0, T={duration}), got {}", self.tau),
            ));
        }
        if !self.phi_initial.is_finite() {
            return Err(Error::invalid("phi_initial", "must be finite"));
        }
        Ok(())
    }

    /// Target controlled phase `Δφ = aπ`.
    pub fn delta_phi(&self) -> f64 {
        self.a * PI
    }
}

fn check_time(t: f64, duration: f64) -> Result<()> {
    if !(t >= 0.0 && t <= duration) {
        return Err(Error::invalid("t", format!("{t} ns outside [0, {duration}] ns")));
    }
    Ok(())
}

/// Control phase of the NCGC sweep, left-continuous at `τ` where it jumps by π.
pub fn ncgc_phase(t: f64, p: &NcgcParams, duration: f64) -> Result<f64> {
    check_time(t, duration)?;
    let half = 0.5 * p.a * PI;
    let phase = if t <= p.tau {
        half * (1.0 - (PI * t / p.tau).cos())
    } else {
        PI + half * (3.0 - (PI * (t - p.tau) / p.tau).cos())
    };
    Ok(p.phi_initial + phase)
}

/// `dφ/dt` of [`ncgc_phase`] within each segment; the π flip contributes nothing.
pub fn sta_detuning(t: f64, p: &NcgcParams, duration: f64) -> Result<f64> {
    check_time(t, duration)?;
    let rate = 0.5 * p.a * PI * PI / p.tau;
    let local = if t <= p.tau { t } else { t - p.tau };
    Ok(rate * (PI * local / p.tau).sin())
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Bernstein basis polynomial `C(n,v)·xᵛ·(1−x)ⁿ⁻ᵛ`.
pub fn bernstein(v: u32, n: u32, x: f64) -> Result<f64> {
    if v > n {
        return Err(Error::invalid("v", format!("{v} exceeds degree {n}")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid("x", format!("{x} outside [0, 1]")));
    }
    Ok(binomial(n, v) * x.powi(v as i32) * (1.0 - x).powi((n - v) as i32))
}

/// Bernstein-envelope Rabi modulation with a constant detuning.
///
/// The coefficients are quoted for a reference duration; at any other `T`
/// the waveform is time-rescaled so that `Ω·T` and `Δ·T` are preserved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmParams {
    /// β₁..β₄ in rad/ns at the reference duration.
    pub beta: [f64; 4],
    pub delta1: f64,
    pub degree: u32,
    pub reference_duration: f64,
}

impl Default for RmParams {
    fn default() -> Self {
        Self {
            beta: [1.419, 0.0, 5.076, 13.425].map(units::from_mhz_2pi),
            delta1: units::from_mhz_2pi(3.512),
            degree: 8,
            reference_duration: 1000.0,
        }
    }
}

impl RmParams {
    fn scale(&self, duration: f64) -> f64 {
        self.reference_duration / duration
    }
}

/// `Ω₁(t) = Σ_{ν=1}^{4} β_ν [b_{ν,8}(t/T) + b_{8−ν,8}(t/T)]`, `Δ = Δ₁`, `φ = 0`.
pub fn rm_waveform(t: f64, duration: f64, p: &RmParams) -> Result<Controls> {
    check_time(t, duration)?;
    let x = (t / duration).clamp(0.0, 1.0);
    let n = p.degree;
    let mut omega = 0.0;
    for (i, beta) in p.beta.iter().enumerate() {
        let v = i as u32 + 1;
        omega += beta * (bernstein(v, n, x)? + bernstein(n - v, n, x)?);
    }
    let s = p.scale(duration);
    Ok(Controls::new(s * omega, s * p.delta1, 0.0))
}

/// Cosine phase modulation at constant Rabi frequency.
///
/// With `omega2 = None` the Rabi frequency follows the fixed pulse area:
/// `Ω₂ = area / T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PmParams {
    pub omega2: Option<f64>,
    pub delta2: f64,
    pub amplitude: f64,
    /// `ω / Ω₂`
    pub frequency_ratio: f64,
    pub phi0: f64,
    pub area: f64,
}

impl Default for PmParams {
    fn default() -> Self {
        Self {
            omega2: None,
            delta2: 0.0,
            amplitude: 2.0 * PI * 0.1122,
            frequency_ratio: 1.0431,
            phi0: -0.7318,
            area: 7.636,
        }
    }
}

impl PmParams {
    pub fn rabi(&self, duration: f64) -> f64 {
        self.omega2.unwrap_or(self.area / duration)
    }
}

/// `φ₂(t) = A·cos(ωt − φ₂⁽⁰⁾)` with constant `Ω₂`, `Δ₂`.
pub fn pm_waveform(t: f64, duration: f64, p: &PmParams) -> Result<Controls> {
    check_time(t, duration)?;
    let omega = p.rabi(duration);
    let w = p.frequency_ratio * omega;
    Ok(Controls::new(omega, p.delta2, p.amplitude * (w * t - p.phi0).cos()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistribution {
    /// Uniform on `[0, amp]`.
    #[default]
    OneSided,
    /// Uniform on `[−amp, amp]`.
    Symmetric,
}

/// Systematic offsets `κ₁`, `κ₂` and random piecewise-constant noise `κ′₁(t)`, `κ′₂(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub kappa1: f64,
    pub kappa2: f64,
    pub noise_amp1: f64,
    pub noise_amp2: f64,
    /// Resampling interval in ns.
    pub noise_segment: f64,
    pub distribution: NoiseDistribution,
    pub seed: u64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            kappa1: 0.0,
            kappa2: 0.0,
            noise_amp1: 0.0,
            noise_amp2: 0.0,
            noise_segment: 1.0,
            distribution: NoiseDistribution::OneSided,
            seed: 0,
        }
    }
}

pub const SYSTEMATIC_RANGE: f64 = 0.1;

impl PerturbationSpec {
    pub fn systematic(kappa1: f64, kappa2: f64) -> Self {
        Self {
            kappa1,
            kappa2,
            ..Self::default()
        }
    }

    pub fn noise(amp1: f64, amp2: f64, seed: u64) -> Self {
        Self {
            noise_amp1: amp1,
            noise_amp2: amp2,
            seed,
            ..Self::default()
        }
    }

    pub fn has_noise(&self) -> bool {
        self.noise_amp1 != 0.0 || self.noise_amp2 != 0.0
    }

    pub fn is_identity(&self) -> bool {
        self.kappa1 == 0.0 && self.kappa2 == 0.0 && !self.has_noise()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("noise_amp1", self.noise_amp1),
            ("noise_amp2", self.noise_amp2),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if self.noise_amp1 < 0.0 || self.noise_amp2 < 0.0 {
            return Err(Error::invalid("noise_amp", "must be >= 0"));
        }
        if !(self.noise_segment.is_finite() && self.noise_segment > 0.0) {
            return Err(Error::invalid("noise_segment", "must be finite and > 0"));
        }
        Ok(())
    }

    fn warnings(&self) -> Vec<String> {
        [("kappa1", self.kappa1), ("kappa2", self.kappa2)]
            .into_iter()
            .filter(|(_, v)| v.abs() > SYSTEMATIC_RANGE)
            .map(|(name, v)| format!("{name}={v} outside the calibrated range [-0.1, 0.1]"))
            .collect()
    }
}

/// Fold any number of integers into a 64-bit key (splitmix64 finaliser).
pub fn stream_key(seed: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    parts.iter().fold(mix(seed), |acc, &p| mix(acc ^ mix(p)))
}

/// One draw of the piecewise-constant noise `κ′₁(t)`, `κ′₂(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    pub segment: f64,
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
}

impl NoiseRealization {
    /// Segment `k` of trial `trial` always reads the same generator words, so
    /// a realization does not depend on evaluation order.
    pub fn draw(spec: &PerturbationSpec, duration: f64, key: u64, trial: u64) -> Self {
        let count = ((duration / spec.noise_segment).ceil() as usize).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(trial);
        let sample = |u: f64, amp: f64| match spec.distribution {
            NoiseDistribution::OneSided => amp * u,
            NoiseDistribution::Symmetric => amp * (2.0 * u - 1.0),
        };
        let (mut kappa1, mut kappa2) = (Vec::with_capacity(count), Vec::with_capacity(count));
        for k in 0..count {
            rng.set_word_pos(4 * k as u128);
            let (u1, u2): (f64, f64) = (rng.random(), rng.random());
            kappa1.push(sample(u1, spec.noise_amp1));
            kappa2.push(sample(u2, spec.noise_amp2));
        }
        Self {
            segment: spec.noise_segment,
            kappa1,
            kappa2,
        }
    }

    fn index(&self, t: f64) -> usize {
        ((t / self.segment).floor() as usize).min(self.kappa1.len() - 1)
    }

    pub fn at(&self, t: f64) -> (f64, f64) {
        let k = self.index(t);
        (self.kappa1[k], self.kappa2[k])
    }

    fn edges(&self, duration: f64) -> impl Iterator<Item = f64> + '_ {
        (1..self.kappa1.len())
            .map(|k| k as f64 * self.segment)
            .filter(move |&t| t < duration)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Waveform {
    Ncgc {
        omega: f64,
        params: NcgcParams,
    },
    Rm(RmParams),
    Pm(PmParams),
    Constant(Controls),
    /// `controls[k]` holds on `[edges[k], edges[k+1])`; `edges` spans `[0, T]`.
    Piecewise {
        edges: Vec<f64>,
        controls: Vec<Controls>,
    },
}

/// One row of a sampled schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub omega: f64,
    pub delta: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub protocol: Option<Protocol>,
    pub duration: f64,
    pub waveform: Waveform,
    pub kappa1: f64,
    pub kappa2: f64,
    pub noise: Option<NoiseRealization>,
    pub warnings: Vec<String>,
}

impl PulseSchedule {
    fn from_waveform(protocol: Option<Protocol>, duration: f64, waveform: Waveform) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::invalid("duration", "must be finite and > 0"));
        }
        Ok(Self {
            protocol,
            duration,
            waveform,
            kappa1: 0.0,
            kappa2: 0.0,
            noise: None,
            warnings: Vec::new(),
        })
    }

    /// NCGC at the Rabi frequency and duration in `params`.
    pub fn ncgc(params: &PhysicalParams, ncgc: NcgcParams) -> Result<Self> {
        ncgc.validate(params.duration)?;
        let waveform = Waveform::Ncgc {
            omega: params.omega,
            params: ncgc,
        };
        Self::from_waveform(Some(Protocol::Ncgc), params.duration, waveform)
    }

    pub fn rm(duration: f64, rm: RmParams) -> Result<Self> {
        Self::from_waveform(Some(Protocol::Rm), duration, Waveform::Rm(rm))
    }

    pub fn pm(duration: f64, pm: PmParams) -> Result<Self> {
        Self::from_waveform(Some(Protocol::Pm), duration, Waveform::Pm(pm))
    }

    /// Default-parameter schedule of `protocol` over `params.duration`.
    pub fn for_protocol(protocol: Protocol, params: &PhysicalParams) -> Result<Self> {
        match protocol {
            Protocol::Ncgc => Self::ncgc(params, NcgcParams::for_duration(params.duration)),
            Protocol::Rm => Self::rm(params.duration, RmParams::default()),
            Protocol::Pm => Self::pm(params.duration, PmParams::default()),
        }
    }

    pub fn constant(duration: f64, controls: Controls) -> Result<Self> {
        if !controls.is_finite() {
            return Err(Error::invalid("controls", "non-finite control value"));
        }
        Self::from_waveform(None, duration, Waveform::Constant(controls))
    }

    pub fn piecewise(edges: Vec<f64>, controls: Vec<Controls>) -> Result<Self> {
        if edges.len() < 2 || edges.len() != controls.len() + 1 {
            return Err(Error::invalid("edges", "need one more edge than control segments"));
        }
        if edges[0] != 0.0
            || edges
                .windows(2)
                .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::invalid("edges", "must start at 0 and increase strictly"));
        }
        if controls.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("controls", "non-finite control value"));
        }
        let duration = *edges.last().expect("checked length");
        Self::from_waveform(None, duration, Waveform::Piecewise { edges, controls })
    }

    pub fn ncgc_params(&self) -> Option<&NcgcParams> {
        match &self.waveform {
            Waveform::Ncgc { params, .. } => Some(params),
            _ => None,
        }
    }

    fn base_controls(&self, t: f64) -> Result<Controls> {
        check_time(t, self.duration)?;
        match &self.waveform {
            Waveform::Ncgc { omega, params } => {
                let delta = if params.sta_enabled {
                    sta_detuning(t, params, self.duration)?
                } else {
                    0.0
                };
                Ok(Controls::new(*omega, delta, ncgc_phase(t, params, self.duration)?))
            }
            Waveform::Rm(p) => rm_waveform(t, self.duration, p),
            Waveform::Pm(p) => pm_waveform(t, self.duration, p),
            Waveform::Constant(c) => Ok(*c),
            Waveform::Piecewise { edges, controls } => {
                let k = edges.partition_point(|&e| e <= t).saturating_sub(1);
                Ok(controls[k.min(controls.len() - 1)])
            }
        }
    }

    /// Perturbed controls at `t`: `Ω′ = (1+κ₁+κ′₁)Ω`, `Δ′ = Δ + (κ₂+κ′₂)Ω`.
    pub fn controls_at(&self, t: f64) -> Result<Controls> {
        let base = self.base_controls(t)?;
        let (n1, n2) = self.noise.as_ref().map_or((0.0, 0.0), |n| n.at(t));
        let c = Controls::new(
            (1.0 + self.kappa1 + n1) * base.omega,
            base.delta + (self.kappa2 + n2) * base.omega,
            base.phi,
        );
        if !c.is_finite() {
            return Err(Error::NonFinite { t });
        }
        Ok(c)
    }

    /// The shortcut detuning `Δ_a(t)` contained in [`controls_at`](Self::controls_at); zero unless NCGC with STA.
    pub fn sta_detuning_at(&self, t: f64) -> Result<f64> {
        match &self.waveform {
            Waveform::Ncgc { params, .. } if params.sta_enabled => sta_detuning(t, params, self.duration),
            _ => Ok(0.0),
        }
    }

    /// Interior times where the controls are discontinuous, ascending.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut points = Vec::new();
        match &self.waveform {
            Waveform::Ncgc { params, .. } => points.push(params.tau),
            Waveform::Piecewise { edges, .. } => points.extend(&edges[1..edges.len() - 1]),
            _ => {}
        }
        if let Some(noise) = &self.noise {
            points.extend(noise.edges(self.duration));
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        points
    }

    /// `count + 1` equally spaced samples covering `[0, T]`.
    pub fn samples(&self, count: usize) -> Result<Vec<Sample>> {
        let count = count.max(1);
        (0..=count)
            .map(|k| {
                let t = if k == count {
                    self.duration
                } else {
                    self.duration * k as f64 / count as f64
                };
                let c = self.controls_at(t)?;
                Ok(Sample {
                    t,
                    omega: c.omega,
                    delta: c.delta,
                    phi: c.phi,
                })
            })
            .collect()
    }

    /// Protocol constants, in the units used at the I/O boundary.
    pub fn meta(&self) -> serde_json::Value {
        use serde_json::json;
        let mhz = units::to_mhz_2pi;
        let wave = match &self.waveform {
            Waveform::Ncgc { omega, params } => json!({
                "omega_2pi_mhz": mhz(*omega),
                "a": params.a,
                "tau_ns": params.tau,
                "phi_initial_rad": params.phi_initial,
                "sta_enabled": params.sta_enabled,
            }),
            Waveform::Rm(p) => json!({
                "beta_2pi_mhz": p.beta.map(mhz),
                "delta1_2pi_mhz": mhz(p.delta1),
                "degree": p.degree,
                "reference_duration_ns": p.reference_duration,
                "time_scale": p.scale(self.duration),
            }),
            Waveform::Pm(p) => json!({
                "omega2_2pi_mhz": mhz(p.rabi(self.duration)),
                "delta2_2pi_mhz": mhz(p.delta2),
                "amplitude_rad": p.amplitude,
                "frequency_ratio": p.frequency_ratio,
                "phi0_rad": p.phi0,
            }),
            Waveform::Constant(c) => json!({
                "omega_2pi_mhz": mhz(c.omega),
                "delta_2pi_mhz": mhz(c.delta),
                "phi_rad": c.phi,
            }),
            Waveform::Piecewise { edges, .. } => json!({ "segments": edges.len() - 1 }),
        };
        json!({
            "protocol": self.protocol.map(Protocol::name),
            "duration_ns": self.duration,
            "waveform": wave,
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "noisy": self.noise.is_some(),
        })
    }
}

/// Apply `spec` to `schedule`, drawing noise from `spec.seed` alone.
pub fn perturb(schedule: &PulseSchedule, spec: &PerturbationSpec) -> Result<PulseSchedule> {
    perturb_trial(schedule, spec, stream_key(spec.seed, &[]), 0)
}

/// Apply `spec` with noise drawn from generator `key`, stream `trial`.
pub fn perturb_trial(schedule: &PulseSchedule, spec: &PerturbationSpec, key: u64, trial: u64) -> Result<PulseSchedule> {
    spec.validate()?;
    let mut out = schedule.clone();
    out.kappa1 += spec.kappa1;
    out.kappa2 += spec.kappa2;
    if spec.has_noise() {
        out.noise = Some(NoiseRealization::draw(spec, schedule.duration, key, trial));
    }
    out.warnings.extend(spec.warnings());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: f64 = 500.0;

    fn ncgc() -> NcgcParams {
        NcgcParams::for_duration(T)
    }

    #[test]
    fn ncgc_phase_landmarks() {
        let p = ncgc();
        assert_eq!(ncgc_phase(0.0, &p, T).unwrap(), 0.0);
        assert!((ncgc_phase(250.0, &p, T).unwrap() - PI).abs() < 1e-15);
        let after = ncgc_phase(250.0 + 1e-9, &p, T).unwrap();
        assert!((after - 2.0 * PI).abs() < 1e-9);
        assert!((ncgc_phase(T, &p, T).unwrap() - 3.0 * PI).abs() < 1e-14);
        assert!(ncgc_phase(T + 1.0, &p, T).is_err());
        assert!(ncgc_phase(-1e-9, &p, T).is_err());
    }

    #[test]
    fn sta_detuning_landmarks() {
        let p = ncgc();
        assert_eq!(sta_detuning(0.0, &p, T).unwrap(), 0.0);
        assert!(sta_detuning(250.0, &p, T).unwrap().abs() < 1e-15);
        let peak = sta_detuning(125.0, &p, T).unwrap();
        assert!((peak - PI * PI / 500.0).abs() < 1e-15);
        assert!((units::to_mhz_2pi(peak) - PI).abs() < 1e-12);
    }

    #[test]
    fn sta_detuning_is_phase_derivative() {
        let p = NcgcParams {
            a: 0.7,
            tau: 200.0,
            phi_initial: 0.3,
            sta_enabled: true,
        };
        let h = 1e-3;
        for t in [10.0, 77.7, 150.0, 199.0, 201.0, 300.0, 390.0] {
            let numeric = (ncgc_phase(t + h, &p, 400.0).unwrap() - ncgc_phase(t - h, &p, 400.0).unwrap()) / (2.0 * h);
            assert!((numeric - sta_detuning(t, &p, 400.0).unwrap()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn sta_detuning_integrates_to_total_sweep() {
        let p = ncgc();
        let n = 20_000;
        let h = T / n as f64;
        let integral: f64 = (0..n)
            .map(|k| sta_detuning((k as f64 + 0.5) * h, &p, T).unwrap() * h)
            .sum();
        assert!((integral - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn ncgc_params_validation() {
        let mut p = ncgc();
        p.a = 0.0;
        assert!(p.validate(T).is_err());
        p.a = 1.2;
        assert!(p.validate(T).is_err());
        let mut p = ncgc();
        p.tau = T;
        assert!(p.validate(T).is_err());
    }

    #[test]
    fn bernstein_values() {
        assert_eq!(bernstein(0, 8, 0.0).unwrap(), 1.0);
        assert!((bernstein(4, 8, 0.5).unwrap() - 0.2734375).abs() < 1e-16);
        assert!(bernstein(9, 8, 0.5).is_err());
        assert!(bernstein(2, 8, 1.5).is_err());
    }

    #[test]
    fn rm_waveform_shape() {
        let p = RmParams::default();
        assert_eq!(rm_waveform(0.0, 1000.0, &p).unwrap().omega, 0.0);
        assert!(rm_waveform(1000.0, 1000.0, &p).unwrap().omega.abs() < 1e-15);
        for t in [13.0, 240.0, 500.0, 777.0] {
            let a = rm_waveform(t, 1000.0, &p).unwrap();
            let b = rm_waveform(1000.0 - t, 1000.0, &p).unwrap();
            assert!((a.omega - b.omega).abs() < 1e-14);
            assert!(a.omega >= 0.0);
            assert_eq!(a.phi, 0.0);
            assert!((units::to_mhz_2pi(a.delta) - 3.512).abs() < 1e-12);
        }
        assert!(rm_waveform(1001.0, 1000.0, &p).is_err());
    }

    #[test]
    fn rm_rescaling_keeps_area() {
        let p = RmParams::default();
        let at_ref = rm_waveform(300.0, 1000.0, &p).unwrap();
        let half = rm_waveform(150.0, 500.0, &p).unwrap();
        assert!((half.omega - 2.0 * at_ref.omega).abs() < 1e-14);
        assert!((half.delta - 2.0 * at_ref.delta).abs() < 1e-14);
    }

    #[test]
    fn pm_waveform_values() {
        let p = PmParams::default();
        let c = pm_waveform(0.0, T, &p).unwrap();
        assert!((c.phi - p.amplitude * 0.7318f64.cos()).abs() < 1e-15);
        assert_eq!(c.delta, 0.0);
        assert!((units::to_mhz_2pi(c.omega) - 7.636 / T / units::MHZ_2PI).abs() < 1e-12);
        let short = pm_waveform(0.0, 250.0, &p).unwrap();
        assert!((short.omega - 2.0 * c.omega).abs() < 1e-15);
        let fixed = PmParams {
            omega2: Some(units::from_mhz_2pi(4.6)),
            ..p
        };
        assert!((pm_waveform(10.0, T, &fixed).unwrap().omega - units::from_mhz_2pi(4.6)).abs() < 1e-15);
    }

    #[test]
    fn schedule_jump_and_breakpoints() {
        let params = PhysicalParams::reference();
        let s = PulseSchedule::ncgc(&params, ncgc()).unwrap();
        assert_eq!(s.breakpoints(), vec![250.0]);
        let left = s.controls_at(250.0).unwrap().phi;
        let right = s.controls_at(250.0 + 1e-12).unwrap().phi;
        assert!((right - left - PI).abs() < 1e-9);
        let samples = s.samples(1000).unwrap();
        assert_eq!(samples.first().unwrap().t, 0.0);
        assert_eq!(samples.last().unwrap().t, T);
        assert!(samples.windows(2).all(|w| w[1].t > w[0].t));
        assert!(samples.iter().all(|x| x.omega == params.omega));
    }

    #[test]
    fn sta_off_clears_detuning() {
        let params = PhysicalParams::reference();
        let mut p = ncgc();
        p.sta_enabled = false;
        let s = PulseSchedule::ncgc(&params, p).unwrap();
        assert_eq!(s.controls_at(100.0).unwrap().delta, 0.0);
        assert_eq!(s.sta_detuning_at(100.0).unwrap(), 0.0);
    }

    #[test]
    fn systematic_perturbation() {
        let params = PhysicalParams::reference();
        let s = PulseSchedule::for_protocol(Protocol::Ncgc, &params).unwrap();
        let same = perturb(&s, &PerturbationSpec::default()).unwrap();
        assert_eq!(same, s);
        let p = perturb(&s, &PerturbationSpec::systematic(0.1, 0.0)).unwrap();
        let c = p.controls_at(42.0).unwrap();
        assert!((units::to_mhz_2pi(c.omega) - 4.4).abs() < 1e-12);
        let d = perturb(&s, &PerturbationSpec::systematic(0.0, 0.05)).unwrap();
        let shift = d.controls_at(42.0).unwrap().delta - s.controls_at(42.0).unwrap().delta;
        assert!((shift - 0.05 * params.omega).abs() < 1e-15);
        assert!(
            perturb(&s, &PerturbationSpec::systematic(0.2, 0.0))
                .unwrap()
                .warnings
                .len()
                == 1
        );
    }

    #[test]
    fn noise_is_seeded_and_segmented() {
        let params = PhysicalParams::reference();
        let s = PulseSchedule::for_protocol(Protocol::Pm, &params).unwrap();
        let spec = PerturbationSpec::noise(0.1, 0.05, 7);
        let a = perturb(&s, &spec).unwrap();
        let b = perturb(&s, &spec).unwrap();
        assert_eq!(a, b);
        let n = a.noise.as_ref().unwrap();
        assert_eq!(n.kappa1.len(), 500);
        assert!(n.kappa1.iter().all(|&k| (0.0..=0.1).contains(&k)));
        assert!(n.kappa2.iter().all(|&k| (0.0..=0.05).contains(&k)));
        assert_eq!(a.breakpoints().len(), 499);
        let other = perturb(&s, &PerturbationSpec::noise(0.1, 0.05, 8)).unwrap();
        assert_ne!(a.noise, other.noise);
        let trial = perturb_trial(&s, &spec, stream_key(7, &[]), 1).unwrap();
        assert_ne!(a.noise, trial.noise);
    }

    #[test]
    fn bad_noise_segment_rejected() {
        let s = PulseSchedule::constant(10.0, Controls::new(0.1, 0.0, 0.0)).unwrap();
        let spec = PerturbationSpec {
            noise_segment: 0.0,
            ..PerturbationSpec::noise(0.1, 0.0, 1)
        };
        assert!(perturb(&s, &spec).is_err());
    }

    #[test]
    fn piecewise_lookup() {
        let c = |x| Controls::new(x, 0.0, 0.0);
        let s = PulseSchedule::piecewise(vec![0.0, 1.0, 3.0], vec![c(1.0), c(2.0)]).unwrap();
        assert_eq!(s.controls_at(0.5).unwrap().omega, 1.0);
        assert_eq!(s.controls_at(1.0).unwrap().omega, 2.0);
        assert_eq!(s.controls_at(3.0).unwrap().omega, 2.0);
        assert_eq!(s.breakpoints(), vec![1.0]);
        assert!(PulseSchedule::piecewise(vec![0.0, 1.0, 1.0], vec![c(1.0), c(2.0)]).is_err());
    }
}
