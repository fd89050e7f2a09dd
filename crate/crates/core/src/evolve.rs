//! Time-ordered propagation of pulse schedules, closed and open.
//!
//! Each interval between schedule breakpoints is cut into equal steps. A step
//! uses the two-point Gauss–Legendre Magnus expansion
//! `Ω₄ = h/2·(H₁+H₂) − i·√3/12·h²·[H₂, H₁]` followed by an exact matrix
//! exponential, so every step is exactly unitary. The counter-diabatic
//! correction of NCGC replaces the schedule's shortcut detuning when
//! `include_cd` is set.
//!
//! The master equation is advanced by Strang splitting: half a dissipator step
//! (an exactly exponentiated superoperator), the unitary step, then the other
//! half.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DensityMatrix, Operator, StateVector, C64};
use crate::model::{self, BasisLabel, Controls, ModelMode, PhysicalParams, SubspaceId};
use crate::pulses::PulseSchedule;
use crate::units;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorOrder {
    /// Exponential of the midpoint Hamiltonian.
    Midpoint2,
    /// Fourth-order two-point Magnus.
    #[default]
    Magnus4,
}

impl IntegratorOrder {
    pub fn order(self) -> u32 {
        match self {
            IntegratorOrder::Midpoint2 => 2,
            IntegratorOrder::Magnus4 => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorOptions {
    pub step_ns: f64,
    pub order: IntegratorOrder,
    /// Target global error for [`convergence_check`].
    pub tolerance: f64,
    /// Swap the NCGC shortcut detuning for the exact counter-diabatic term.
    pub include_cd: bool,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        Self {
            step_ns: 0.1,
            order: IntegratorOrder::Magnus4,
            tolerance: 1e-9,
            include_cd: true,
        }
    }
}

impl PropagatorOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_ns.is_finite() && self.step_ns > 0.0) {
            return Err(Error::invalid("step_ns", "must be finite and > 0"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn with_step(self, step_ns: f64) -> Self {
        Self { step_ns, ..self }
    }
}

/// Full Hamiltonian seen by the integrator at time `t`.
pub fn hamiltonian_at(
    params: &PhysicalParams,
    schedule: &PulseSchedule,
    mode: ModelMode,
    t: f64,
    include_cd: bool,
) -> Result<Operator> {
    let c = schedule.controls_at(t)?;
    let shortcut = schedule.sta_detuning_at(t)?;
    let bare = Controls::new(c.omega, c.delta - shortcut, c.phi);
    let mut h = model::hamiltonian(params, &bare, mode)?;
    if include_cd && shortcut != 0.0 {
        h += model::counterdiabatic_operator(shortcut, mode);
    }
    Ok(h)
}

/// Equal-step subdivision of `[0, T]` respecting every breakpoint and stop time.
fn step_plan(duration: f64, breaks: &[f64], step: f64) -> Vec<(f64, f64, usize)> {
    let mut edges: Vec<f64> = std::iter::once(0.0)
        .chain(breaks.iter().copied().filter(|&t| t > 0.0 && t < duration))
        .chain(std::iter::once(duration))
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    edges
        .windows(2)
        .map(|w| {
            let n = ((w[1] - w[0]) / step).ceil().max(1.0) as usize;
            (w[0], w[1], n)
        })
        .collect()
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6

struct Stepper<'a> {
    params: &'a PhysicalParams,
    schedule: &'a PulseSchedule,
    mode: ModelMode,
    opts: PropagatorOptions,
}

impl Stepper<'_> {
    fn h(&self, t: f64) -> Result<Operator> {
        hamiltonian_at(self.params, self.schedule, self.mode, t, self.opts.include_cd)
    }

    /// Propagator for `[t0, t0 + h]`.
    fn step(&self, t0: f64, h: f64) -> Result<Operator> {
        let m = match self.opts.order {
            IntegratorOrder::Midpoint2 => self.h(t0 + 0.5 * h)? * C64::new(h, 0.0),
            IntegratorOrder::Magnus4 => {
                let h1 = self.h(t0 + (0.5 - GAUSS_OFFSET) * h)?;
                let h2 = self.h(t0 + (0.5 + GAUSS_OFFSET) * h)?;
                let comm = linalg::commutator(&h2, &h1);
                (&h1 + &h2) * C64::new(h / 2.0, 0.0) - comm * C64::new(0.0, 3f64.sqrt() / 12.0 * h * h)
            }
        };
        let u = linalg::expm_neg_i(&m);
        if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { t: t0 });
        }
        Ok(u)
    }

    /// Visit every step in order; `stop` is called at each extra stop time.
    fn run(
        &self,
        stops: &[f64],
        mut on_step: impl FnMut(&Operator, f64, f64) -> Result<()>,
        mut on_stop: impl FnMut(f64) -> Result<()>,
    ) -> Result<()> {
        self.opts.validate()?;
        let duration = self.schedule.duration;
        let mut breaks = self.schedule.breakpoints();
        breaks.extend_from_slice(stops);
        let mut pending = stops.iter().copied().filter(|&t| t <= 0.0).peekable();
        while pending.next().is_some() {
            on_stop(0.0)?;
        }
        let mut stop_iter = stops.iter().copied().filter(|&t| t > 0.0).peekable();
        for (a, b, n) in step_plan(duration, &breaks, self.opts.step_ns) {
            let h = (b - a) / n as f64;
            for k in 0..n {
                let t0 = a + k as f64 * h;
                let u = self.step(t0, h)?;
                on_step(&u, t0, h)?;
            }
            while stop_iter.peek().is_some_and(|&t| t <= b) {
                stop_iter.next();
                on_stop(b)?;
            }
        }
        Ok(())
    }
}

fn check_closed(mode: ModelMode) -> Result<()> {
    if mode == ModelMode::Open {
        return Err(Error::invalid(
            "mode",
            "closed-system propagation needs the reduced or full basis; use lindblad_evolve for open",
        ));
    }
    Ok(())
}

/// `U(T, 0)` over the basis of `mode`.
pub fn propagate_unitary(
    params: &PhysicalParams,
    schedule: &PulseSchedule,
    mode: ModelMode,
    opts: &PropagatorOptions,
) -> Result<Operator> {
    check_closed(mode)?;
    let stepper = Stepper {
        params,
        schedule,
        mode,
        opts: *opts,
    };
    let mut u = linalg::identity(mode.dim());
    stepper.run(
        &[],
        |step, _, _| {
            u = step * &u;
            Ok(())
        },
        |_| Ok(()),
    )?;
    Ok(u)
}

/// States sampled on an output grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory always holds the final state")
    }
}

fn output_grid(times: &[f64], duration: f64) -> Result<Vec<f64>> {
    if let Some(&bad) = times.iter().find(|&&t| !(t >= 0.0 && t <= duration)) {
        return Err(Error::invalid(
            "output_times",
            format!("{bad} ns outside [0, {duration}] ns"),
        ));
    }
    let mut grid = times.to_vec();
    grid.push(duration);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// Evolve `psi0`, recording the state at each time in `output_times` and at `T`.
pub fn propagate_state(
    params: &PhysicalParams,
    schedule: &PulseSchedule,
    mode: ModelMode,
    psi0: &StateVector,
    opts: &PropagatorOptions,
    output_times: &[f64],
) -> Result<Trajectory> {
    check_closed(mode)?;
    if psi0.len() != mode.dim() {
        return Err(Error::DimensionMismatch {
            expected: mode.dim(),
            actual: psi0.len(),
        });
    }
    let grid = output_grid(output_times, schedule.duration)?;
    let stepper = Stepper {
        params,
        schedule,
        mode,
        opts: *opts,
    };
    let mut psi = psi0.clone();
    let mut states = Vec::with_capacity(grid.len());
    let psi_ref = std::cell::RefCell::new(&mut psi);
    stepper.run(
        &grid,
        |u, _, _| {
            let mut p = psi_ref.borrow_mut();
            **p = u * &**p;
            Ok(())
        },
        |_| {
            states.push((**psi_ref.borrow()).clone());
            Ok(())
        },
    )?;
    Ok(Trajectory { times: grid, states })
}

/// Step-halving self-check of the unitary integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub step_ns: f64,
    /// `‖U_h − U_{h/2}‖_max`
    pub diff_coarse: f64,
    /// `‖U_{h/2} − U_{h/4}‖_max`
    pub diff_fine: f64,
    /// `diff_coarse / diff_fine`, ideally `2^order`.
    pub ratio: f64,
    /// Richardson estimate of the error remaining at step `h`.
    pub error_estimate: f64,
    pub converged: bool,
}

pub fn convergence_check(
    params: &PhysicalParams,
    schedule: &PulseSchedule,
    mode: ModelMode,
    opts: &PropagatorOptions,
) -> Result<ConvergenceReport> {
    let h = opts.step_ns;
    let u1 = propagate_unitary(params, schedule, mode, opts)?;
    let u2 = propagate_unitary(params, schedule, mode, &opts.with_step(h / 2.0))?;
    let u4 = propagate_unitary(params, schedule, mode, &opts.with_step(h / 4.0))?;
    let diff_coarse = linalg::max_abs(&(&u1 - &u2));
    let diff_fine = linalg::max_abs(&(&u2 - &u4));
    let factor = f64::from(1u32 << opts.order.order());
    let error_estimate = diff_coarse * factor / (factor - 1.0);
    Ok(ConvergenceReport {
        step_ns: h,
        diff_coarse,
        diff_fine,
        ratio: diff_coarse / diff_fine,
        error_estimate,
        converged: error_estimate <= opts.tolerance,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LindbladConvention {
    /// `Σ 2LρL† − L†Lρ − ρL†L`
    #[default]
    Verbatim,
    /// `Σ LρL† − ½(L†Lρ + ρL†L)`
    Standard,
}

impl LindbladConvention {
    fn scale(self) -> f64 {
        match self {
            LindbladConvention::Verbatim => 1.0,
            LindbladConvention::Standard => 0.5,
        }
    }
}

/// Decay, loss and dephasing operators over the open basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapseSet {
    /// Input rates `Γ₁, Γ₂, Γ₃` in kHz.
    pub rates_khz: [f64; 3],
    /// `γ_n = Γ_n² / √ΣΓ²`, in kHz.
    pub gamma_khz: [f64; 3],
    /// `L₁` (upper → lower), `L₂` (upper → W), `L₃` (dephasing).
    pub operators: [Operator; 3],
    pub convention: LindbladConvention,
}

impl CollapseSet {
    /// No dissipation.
    pub fn none() -> Self {
        let z = linalg::zeros(ModelMode::Open.dim());
        Self {
            rates_khz: [0.0; 3],
            gamma_khz: [0.0; 3],
            operators: [z.clone(), z.clone(), z],
            convention: LindbladConvention::Verbatim,
        }
    }

    pub fn with_convention(mut self, convention: LindbladConvention) -> Self {
        self.convention = convention;
        self
    }

    /// Generator of the dissipator as a column-stacked superoperator.
    pub fn dissipator(&self) -> Operator {
        let n = ModelMode::Open.dim();
        let id = linalg::identity(n);
        let mut d = linalg::zeros(n * n);
        for l in &self.operators {
            let ldl = l.adjoint() * l;
            d += l.map(|z| z.conj()).kronecker(l) * C64::new(2.0, 0.0);
            d -= id.kronecker(&ldl);
            d -= ldl.transpose().kronecker(&id);
        }
        d * C64::new(self.convention.scale(), 0.0)
    }
}

/// Build `L₁`, `L₂`, `L₃` with `γ_n = Γ_n²/√(Γ₁²+Γ₂²+Γ₃²)`; rates in kHz.
pub fn make_collapse_set(gamma1: f64, gamma2: f64, gamma3: f64) -> Result<CollapseSet> {
    let rates = [gamma1, gamma2, gamma3];
    if rates.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::invalid("gamma", "rates must be finite and >= 0"));
    }
    let norm = rates.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::invalid("gamma", "at least one rate must be nonzero"));
    }
    let gamma = rates.map(|g| g * g / norm);
    let n = ModelMode::Open.dim();
    let one = C64::new(1.0, 0.0);
    let (mut l1, mut l2, mut l3) = (linalg::zeros(n), linalg::zeros(n), linalg::zeros(n));
    let w = BasisLabel::W.index();
    for eta in SubspaceId::ALL {
        let (lo, up) = (eta.lower().index(), eta.upper().index());
        l1[(lo, up)] = one;
        l2[(w, up)] = one;
        l3[(up, up)] = one;
        l3[(lo, lo)] = -one;
    }
    let scaled = |m: Operator, g: f64| m * C64::new(units::from_khz(g).sqrt(), 0.0);
    Ok(CollapseSet {
        rates_khz: rates,
        gamma_khz: gamma,
        operators: [scaled(l1, gamma[0]), scaled(l2, gamma[1]), scaled(l3, gamma[2])],
        convention: LindbladConvention::Verbatim,
    })
}

/// Integrate the master equation over the schedule in the open basis.
pub fn lindblad_evolve(
    params: &PhysicalParams,
    schedule: &PulseSchedule,
    collapse: &CollapseSet,
    rho0: &DensityMatrix,
    opts: &PropagatorOptions,
) -> Result<DensityMatrix> {
    let mode = ModelMode::Open;
    let n = mode.dim();
    if rho0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: rho0.dim(),
        });
    }
    let generator = collapse.dissipator();
    let dissipative = linalg::max_abs(&generator) > 0.0;
    let mut half_steps: HashMap<u64, Operator> = HashMap::new();
    let mut half_step = |h: f64| -> Operator {
        half_steps
            .entry(h.to_bits())
            .or_insert_with(|| (&generator * C64::new(h / 2.0, 0.0)).exp())
            .clone()
    };
    let stepper = Stepper {
        params,
        schedule,
        mode,
        opts: *opts,
    };
    let mut rho = rho0.matrix().clone();
    stepper.run(
        &[],
        |u, _, h| {
            if dissipative {
                let e = half_step(h);
                let mut v = &e * linalg::vectorize(&rho);
                rho = linalg::unvectorize(&v, n);
                rho = u * &rho * u.adjoint();
                v = &e * linalg::vectorize(&rho);
                rho = linalg::unvectorize(&v, n);
            } else {
                rho = u * &rho * u.adjoint();
            }
            rho = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
            Ok(())
        },
        |_| Ok(()),
    )?;
    Ok(DensityMatrix::from_unchecked(rho))
}
