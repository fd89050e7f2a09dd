//! Gate and state fidelities, acquired phases and the analytic phase budget.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, DensityMatrix, Operator, StateVector, C64};
use crate::model::{ModelMode, PhysicalParams, SubspaceId, COMPUTATIONAL};
use crate::pulses::NcgcParams;

/// Map an angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Distance between two angles on the circle.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// `diag(1, e^{−i·dphi}, e^{−i·dphi}, e^{−i·dphi})`
pub fn cz_target(dphi: f64) -> Operator {
    let z = C64::from_polar(1.0, -dphi);
    Operator::from_diagonal(&StateVector::from_vec(vec![C64::new(1.0, 0.0), z, z, z]))
}

/// Controlled-Z dressed by single-qubit phases:
/// `diag(1, e^{−iφ₀₁}, e^{−iφ₁₀}, e^{−i(φ₀₁+φ₁₀+π)})`.
pub fn cz_with_local_phases(phi_01: f64, phi_10: f64) -> Operator {
    Operator::from_diagonal(&StateVector::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::from_polar(1.0, -phi_01),
        C64::from_polar(1.0, -phi_10),
        C64::from_polar(1.0, -(phi_01 + phi_10 + PI)),
    ]))
}

fn check_four(m: &Operator) -> Result<()> {
    if m.nrows() != 4 || m.ncols() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: m.nrows().max(m.ncols()),
        });
    }
    Ok(())
}

/// `|tr(U Uz†)| / 16`, the normalisation as literally written; at most 0.25.
pub fn gate_fidelity_raw(u_actual: &Operator, u_target: &Operator) -> Result<f64> {
    check_four(u_actual)?;
    check_four(u_target)?;
    Ok(linalg::trace(&(u_actual * u_target.adjoint())).norm() / 16.0)
}

/// `|tr(U Uz†)|² / 16`, clipped to 1 against rounding.
pub fn gate_fidelity(u_actual: &Operator, u_target: &Operator) -> Result<f64> {
    check_four(u_actual)?;
    check_four(u_target)?;
    Ok((linalg::trace(&(u_actual * u_target.adjoint())).norm_sqr() / 16.0).min(1.0))
}

/// `√tr(ρ_ideal ρ)`
pub fn state_fidelity(rho: &DensityMatrix, rho_ideal: &DensityMatrix) -> Result<f64> {
    if rho.dim() != rho_ideal.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho_ideal.dim(),
            actual: rho.dim(),
        });
    }
    let overlap = linalg::trace(&(rho_ideal.matrix() * rho.matrix())).re;
    Ok(overlap.clamp(0.0, 1.0).sqrt())
}

/// `Arg⟨ψ_f|ψ_0⟩` in `(−π, π]`.
pub fn relative_phase(psi_final: &StateVector, psi_initial: &StateVector) -> Result<f64> {
    if psi_final.len() != psi_initial.len() {
        return Err(Error::DimensionMismatch {
            expected: psi_initial.len(),
            actual: psi_final.len(),
        });
    }
    let overlap = psi_final.dotc(psi_initial);
    if overlap.norm() < 1e-6 {
        return Err(Error::Numerical(format!(
            "overlap {:.3e} too small for a defined phase",
            overlap.norm()
        )));
    }
    Ok(wrap_phase(overlap.arg()))
}

/// Basis indices of `|00⟩, |01⟩, |10⟩, |11⟩`.
pub fn computational_indices() -> [usize; 4] {
    COMPUTATIONAL.map(|l| l.index())
}

/// The 4×4 block of `u` on the computational states, without re-unitarisation.
pub fn computational_block(u: &Operator) -> Operator {
    let idx = computational_indices();
    Operator::from_fn(4, 4, |i, j| u[(idx[i], idx[j])])
}

fn serialize_operator<S: Serializer>(m: &Operator, s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut rows = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<[f64; 2]> = (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect();
        rows.serialize_element(&row)?;
    }
    rows.end()
}

/// Scored computational-subspace propagator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateResult {
    pub fidelity: f64,
    pub fidelity_raw: f64,
    pub phi_01: f64,
    pub phi_10: f64,
    pub phi_11: f64,
    /// `φ₁₁ − φ₁₀ − φ₀₁`, wrapped.
    pub cz_condition: f64,
    pub leakage: f64,
    /// `|⟨k|U|k⟩|²` per computational input.
    pub populations: BTreeMap<String, f64>,
    #[serde(serialize_with = "serialize_operator")]
    pub u_comp: Operator,
    #[serde(serialize_with = "serialize_operator")]
    pub target: Operator,
}

impl GateResult {
    /// Score the full propagator `u` against `target`.
    pub fn from_propagator(u: &Operator, target: &Operator) -> Result<Self> {
        Self::from_block(computational_block(u), target)
    }

    pub fn from_block(u_comp: Operator, target: &Operator) -> Result<Self> {
        let fidelity = gate_fidelity(&u_comp, target)?;
        let fidelity_raw = gate_fidelity_raw(&u_comp, target)?;
        let [phi_01, phi_10, phi_11] = diagonal_phases(&u_comp);
        let leakage = (0..4)
            .map(|j| 1.0 - u_comp.column(j).norm_squared())
            .fold(0.0_f64, f64::max)
            .max(0.0);
        let populations = COMPUTATIONAL
            .iter()
            .enumerate()
            .map(|(k, l)| (l.name().to_string(), u_comp[(k, k)].norm_sqr()))
            .collect();
        Ok(Self {
            fidelity,
            fidelity_raw,
            phi_01,
            phi_10,
            phi_11,
            cz_condition: wrap_phase(phi_11 - phi_10 - phi_01),
            leakage,
            populations,
            u_comp,
            target: target.clone(),
        })
    }

    pub fn phases(&self) -> [f64; 3] {
        [self.phi_01, self.phi_10, self.phi_11]
    }
}

/// `φ_k = −arg(U_kk / U_00)` for `k = 01, 10, 11`, wrapped.
pub fn diagonal_phases(u_comp: &Operator) -> [f64; 3] {
    let u00 = u_comp[(0, 0)];
    [1, 2, 3].map(|k| wrap_phase(-(u_comp[(k, k)] / u00).arg()))
}

/// Geometric and dynamical phases of one block over the two NCGC segments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseDecomposition {
    pub eta: u8,
    /// Per segment.
    pub delta_plus: [f64; 2],
    pub delta_minus: [f64; 2],
    pub beta_plus: [f64; 2],
    pub beta_minus: [f64; 2],
}

impl PhaseDecomposition {
    /// Geometric phase along the `|λ₊⟩` path: `δ₊(1) + δ₊(2) = Δφ`.
    pub fn geometric_total(&self) -> f64 {
        self.delta_plus[0] + self.delta_plus[1]
    }

    /// Dynamical phase of a path that rides `|λ₊⟩` then, after the flip, `|λ₋⟩`.
    pub fn dynamical_total(&self) -> f64 {
        self.beta_plus[0] + self.beta_minus[1]
    }
}

/// Analytic phase budget for a resonant NCGC run.
pub fn phase_decomposition(params: &PhysicalParams, p: &NcgcParams, eta: SubspaceId) -> Result<PhaseDecomposition> {
    p.validate(params.duration)?;
    if params.delta != 0.0 {
        return Err(Error::invalid("delta", "phase decomposition needs a resonant drive"));
    }
    let half = p.delta_phi() / 2.0;
    let energy = eta.effective_rabi_factor() * params.omega / 2.0;
    let lengths = [p.tau, params.duration - p.tau];
    let beta_plus = lengths.map(|l| -energy * l);
    Ok(PhaseDecomposition {
        eta: eta.eta(),
        delta_plus: [half, half],
        delta_minus: [-half, -half],
        beta_plus,
        beta_minus: beta_plus.map(|b| -b),
    })
}

/// Final populations of every basis state of `mode` for initial state `psi`.
pub fn populations(psi: &StateVector, mode: ModelMode) -> BTreeMap<String, f64> {
    mode.basis()
        .iter()
        .map(|l| (l.name().to_string(), psi[l.index()].norm_sqr()))
        .collect()
}
