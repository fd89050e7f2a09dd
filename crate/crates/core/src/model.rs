//! Labelled two-atom bases and the Hamiltonians built over them.
//!
//! Every basis is a prefix of the fixed ordering
//! `[00, 01, 0r, 10, r0, 11, R, rr, W]`, so a state keeps the same index in
//! all three model modes and `|00⟩` is always index 0. `|R⟩` is the
//! symmetric single excitation `(|1r⟩ + |r1⟩)/√2`; the antisymmetric partner is
//! never driven and is left out. `|W⟩` is the loss sink of the open model.
//!
//! The drive couples each lower state `|μ₋⟩` to its upper partner `|μ₊⟩` with
//! `⟨μ₊|H|μ₋⟩ = f·Ω/2·e^{iφ}`, `f = 1, 1, √2` for the three two-level blocks.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Operator, StateVector, C64};
use crate::units;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtomLevel {
    Zero,
    One,
    Rydberg,
}

impl AtomLevel {
    pub const ALL: [AtomLevel; 3] = [AtomLevel::Zero, AtomLevel::One, AtomLevel::Rydberg];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisLabel {
    S00,
    S01,
    S0R,
    S10,
    SR0,
    S11,
    /// (|1r⟩ + |r1⟩)/√2
    R,
    RR,
    /// External sink for decay out of the gate manifold.
    W,
}

impl BasisLabel {
    pub const ORDER: [BasisLabel; 9] = [
        BasisLabel::S00,
        BasisLabel::S01,
        BasisLabel::S0R,
        BasisLabel::S10,
        BasisLabel::SR0,
        BasisLabel::S11,
        BasisLabel::R,
        BasisLabel::RR,
        BasisLabel::W,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BasisLabel::S00 => "00",
            BasisLabel::S01 => "01",
            BasisLabel::S0R => "0r",
            BasisLabel::S10 => "10",
            BasisLabel::SR0 => "r0",
            BasisLabel::S11 => "11",
            BasisLabel::R => "R",
            BasisLabel::RR => "rr",
            BasisLabel::W => "W",
        }
    }

    /// Position in the fixed ordering; identical in every mode containing the state.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Number of atoms in the Rydberg level.
    pub fn rydberg_count(self) -> u8 {
        match self {
            BasisLabel::S0R | BasisLabel::SR0 | BasisLabel::R => 1,
            BasisLabel::RR => 2,
            _ => 0,
        }
    }
}

/// The computational states in `U_comp` order.
pub const COMPUTATIONAL: [BasisLabel; 4] = [BasisLabel::S00, BasisLabel::S01, BasisLabel::S10, BasisLabel::S11];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelMode {
    /// Blockade-eliminated: 7 states, no |rr⟩.
    Reduced,
    /// Finite blockade: 8 states including |rr⟩.
    Full,
    /// Full plus the sink |W⟩, for master-equation runs.
    Open,
}

impl ModelMode {
    pub fn dim(self) -> usize {
        match self {
            ModelMode::Reduced => 7,
            ModelMode::Full => 8,
            ModelMode::Open => 9,
        }
    }

    pub fn basis(self) -> &'static [BasisLabel] {
        &BasisLabel::ORDER[..self.dim()]
    }

    pub fn index_of(self, label: BasisLabel) -> Option<usize> {
        (label.index() < self.dim()).then_some(label.index())
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelMode::Reduced => "reduced",
            ModelMode::Full => "full",
            ModelMode::Open => "open",
        }
    }
}

impl std::str::FromStr for ModelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "reduced" => Ok(ModelMode::Reduced),
            "full" => Ok(ModelMode::Full),
            "open" => Ok(ModelMode::Open),
            other => Err(Error::invalid("mode", format!("unknown mode '{other}'"))),
        }
    }
}

/// The three driven two-level blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubspaceId {
    /// {|10⟩, |r0⟩}
    One,
    /// {|01⟩, |0r⟩}
    Two,
    /// {|11⟩, |R⟩}, √2-enhanced coupling
    Three,
}

impl SubspaceId {
    pub const ALL: [SubspaceId; 3] = [SubspaceId::One, SubspaceId::Two, SubspaceId::Three];

    pub fn eta(self) -> u8 {
        match self {
            SubspaceId::One => 1,
            SubspaceId::Two => 2,
            SubspaceId::Three => 3,
        }
    }

    pub fn effective_rabi_factor(self) -> f64 {
        match self {
            SubspaceId::Three => SQRT_2,
            _ => 1.0,
        }
    }

    /// |μ₋⟩
    pub fn lower(self) -> BasisLabel {
        match self {
            SubspaceId::One => BasisLabel::S10,
            SubspaceId::Two => BasisLabel::S01,
            SubspaceId::Three => BasisLabel::S11,
        }
    }

    /// |μ₊⟩
    pub fn upper(self) -> BasisLabel {
        match self {
            SubspaceId::One => BasisLabel::SR0,
            SubspaceId::Two => BasisLabel::S0R,
            SubspaceId::Three => BasisLabel::R,
        }
    }

    /// θ = arctan(f·Ω/Δ), taken as π/2 at Δ = 0.
    pub fn mixing_angle(self, controls: &Controls) -> f64 {
        (self.effective_rabi_factor() * controls.omega).atan2(controls.delta)
    }
}

/// Static system constants. Frequencies in rad/ns, duration in ns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub omega: f64,
    pub delta: f64,
    pub v_blockade: f64,
    pub duration: f64,
}

/// Below this V/Ω the blockade is reported as soft.
pub const SOFT_BLOCKADE_RATIO: f64 = 10.0;

impl PhysicalParams {
    pub fn new(omega: f64, delta: f64, v_blockade: f64, duration: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::invalid("omega", "must be finite and > 0"));
        }
        if !delta.is_finite() {
            return Err(Error::invalid("delta", "must be finite"));
        }
        if !(v_blockade.is_finite() && v_blockade >= 0.0) {
            return Err(Error::invalid("v_blockade", "must be finite and >= 0"));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::invalid("duration", "must be finite and > 0"));
        }
        Ok(Self {
            omega,
            delta,
            v_blockade,
            duration,
        })
    }

    /// Arguments in 2π×MHz and ns.
    pub fn from_mhz_2pi(omega: f64, delta: f64, v_blockade: f64, duration_ns: f64) -> Result<Self> {
        Self::new(
            units::from_mhz_2pi(omega),
            units::from_mhz_2pi(delta),
            units::from_mhz_2pi(v_blockade),
            duration_ns,
        )
    }

    /// Ω = 2π·4 MHz, Δ = 0, V = 2π·500 MHz, T = 500 ns.
    pub fn reference() -> Self {
        Self::from_mhz_2pi(4.0, 0.0, 500.0, 500.0).expect("defaults are valid")
    }

    pub fn blockade_ratio(&self) -> f64 {
        self.v_blockade / self.omega
    }

    pub fn soft_blockade(&self) -> bool {
        self.blockade_ratio() < SOFT_BLOCKADE_RATIO
    }

    pub fn with_duration(self, duration: f64) -> Result<Self> {
        Self::new(self.omega, self.delta, self.v_blockade, duration)
    }

    pub fn with_blockade(self, v_blockade: f64) -> Result<Self> {
        Self::new(self.omega, self.delta, v_blockade, self.duration)
    }
}

/// Instantaneous drive: Rabi frequency and detuning in rad/ns, phase in rad.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub omega: f64,
    pub delta: f64,
    pub phi: f64,
}

impl Controls {
    pub fn new(omega: f64, delta: f64, phi: f64) -> Self {
        Self { omega, delta, phi }
    }

    pub fn is_finite(&self) -> bool {
        self.omega.is_finite() && self.delta.is_finite() && self.phi.is_finite()
    }
}

/// Assemble `H₁ + H₂ + H₃′` (Reduced) or `H₁ + H₂ + H₃` (Full, Open).
pub fn hamiltonian(params: &PhysicalParams, controls: &Controls, mode: ModelMode) -> Result<Operator> {
    if !controls.is_finite() {
        return Err(Error::invalid("controls", "non-finite control value"));
    }
    let n = mode.dim();
    let mut h = linalg::zeros(n);
    let drive = C64::from_polar(controls.omega / 2.0, controls.phi);
    for eta in SubspaceId::ALL {
        let (g, e) = (eta.lower().index(), eta.upper().index());
        let coupling = drive * eta.effective_rabi_factor();
        h[(e, g)] = coupling;
        h[(g, e)] = coupling.conj();
        h[(e, e)] = C64::new(controls.delta, 0.0);
    }
    if mode != ModelMode::Reduced {
        let (r, rr) = (BasisLabel::R.index(), BasisLabel::RR.index());
        let coupling = drive * SQRT_2;
        h[(rr, r)] = coupling;
        h[(r, rr)] = coupling.conj();
        h[(rr, rr)] = C64::new(params.v_blockade + 2.0 * controls.delta, 0.0);
    }
    Ok(h)
}

/// Index of a two-atom product state `|a b⟩` in the 9-dim product ordering
/// `00, 01, 0r, 10, 11, 1r, r0, r1, rr`.
pub fn product_index(first: AtomLevel, second: AtomLevel) -> usize {
    3 * first.index() + second.index()
}

/// Two-atom Hamiltonian written directly in the product basis, before any
/// symmetrisation: single-atom drives on each atom plus `V |rr⟩⟨rr|`.
pub fn product_hamiltonian(params: &PhysicalParams, controls: &Controls) -> Operator {
    let mut single = linalg::zeros(3);
    let (one, ryd) = (AtomLevel::One.index(), AtomLevel::Rydberg.index());
    let drive = C64::from_polar(controls.omega / 2.0, controls.phi);
    single[(ryd, one)] = drive;
    single[(one, ryd)] = drive.conj();
    single[(ryd, ryd)] = C64::new(controls.delta, 0.0);

    let id = linalg::identity(3);
    let mut h = single.kronecker(&id) + id.kronecker(&single);
    let rr = product_index(AtomLevel::Rydberg, AtomLevel::Rydberg);
    h[(rr, rr)] += C64::new(params.v_blockade, 0.0);
    h
}

/// Unitary taking product-basis amplitudes to the symmetrised ordering
/// `[00, 01, 0r, 10, r0, 11, R, rr, A]`, where `A = (|1r⟩ − |r1⟩)/√2`.
pub fn symmetrizing_unitary() -> Operator {
    use AtomLevel::*;
    let mut s = linalg::zeros(9);
    let direct = [
        (Zero, Zero),
        (Zero, One),
        (Zero, Rydberg),
        (One, Zero),
        (Rydberg, Zero),
        (One, One),
    ];
    for (row, (a, b)) in direct.into_iter().enumerate() {
        s[(row, product_index(a, b))] = C64::new(1.0, 0.0);
    }
    let (one_ryd, ryd_one) = (product_index(One, Rydberg), product_index(Rydberg, One));
    s[(6, one_ryd)] = C64::new(FRAC_1_SQRT_2, 0.0);
    s[(6, ryd_one)] = C64::new(FRAC_1_SQRT_2, 0.0);
    s[(7, product_index(Rydberg, Rydberg))] = C64::new(1.0, 0.0);
    s[(8, one_ryd)] = C64::new(FRAC_1_SQRT_2, 0.0);
    s[(8, ryd_one)] = C64::new(-FRAC_1_SQRT_2, 0.0);
    s
}

/// 2×2 block Hamiltonian on `(|μ₊⟩, |μ₋⟩)`.
pub fn subspace_hamiltonian(controls: &Controls, eta: SubspaceId) -> Operator {
    let c = C64::from_polar(eta.effective_rabi_factor() * controls.omega / 2.0, controls.phi);
    Operator::from_row_slice(2, 2, &[C64::new(controls.delta, 0.0), c, c.conj(), C64::new(0.0, 0.0)])
}

/// Dressed states of one block, as 2-vectors on `(|μ₊⟩, |μ₋⟩)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DressedFrame {
    pub eta: SubspaceId,
    pub theta: f64,
    pub lambda_plus: StateVector,
    pub lambda_minus: StateVector,
    pub energy_plus: f64,
    pub energy_minus: f64,
}

/// `|λ₊⟩ = sin(θ/2)e^{iφ}|μ₊⟩ + cos(θ/2)|μ₋⟩`, `|λ₋⟩ = cos(θ/2)|μ₊⟩ − sin(θ/2)e^{−iφ}|μ₋⟩`.
///
/// The energies are the exact eigenvalues of [`subspace_hamiltonian`], each
/// assigned to the dressed state it overlaps most. At Δ = 0 the pair is an
/// exact eigenbasis with energies ±f·Ω/2.
pub fn dressed_frame(controls: &Controls, eta: SubspaceId) -> Result<DressedFrame> {
    if !controls.is_finite() {
        return Err(Error::invalid("controls", "non-finite control value"));
    }
    let coupling = eta.effective_rabi_factor() * controls.omega;
    if coupling == 0.0 && controls.delta == 0.0 {
        return Err(Error::invalid(
            "controls",
            "zero drive and zero detuning: dressed frame is degenerate",
        ));
    }
    let theta = eta.mixing_angle(controls);
    let (s, c) = ((theta / 2.0).sin(), (theta / 2.0).cos());
    let lambda_plus = StateVector::from_vec(vec![C64::from_polar(s, controls.phi), C64::new(c, 0.0)]);
    let lambda_minus = StateVector::from_vec(vec![C64::new(c, 0.0), -C64::from_polar(s, -controls.phi)]);

    let h = subspace_hamiltonian(controls, eta);
    let split = (controls.delta * controls.delta + coupling * coupling).sqrt() / 2.0;
    let (upper, lower) = (controls.delta / 2.0 + split, controls.delta / 2.0 - split);
    let rayleigh = (lambda_plus.adjoint() * &h * &lambda_plus)[(0, 0)].re;
    let (energy_plus, energy_minus) = if (rayleigh - upper).abs() <= (rayleigh - lower).abs() {
        (upper, lower)
    } else {
        (lower, upper)
    };
    Ok(DressedFrame {
        eta,
        theta,
        lambda_plus,
        lambda_minus,
        energy_plus,
        energy_minus,
    })
}

/// Sign of the counter-diabatic entry on |μ₊⟩; the |μ₋⟩ entry carries the
/// opposite sign. Fixed by the adiabatic-tracking test in `evolve`.
pub const CD_UPPER_SIGN: f64 = -1.0;

/// Counter-diabatic correction for pure phase motion at θ = π/2, on `(|μ₊⟩, |μ₋⟩)`.
///
/// `i Σ_k (|∂λ_k⟩⟨λ_k| − ⟨λ_k|∂λ_k⟩|λ_k⟩⟨λ_k|)` evaluates to a matrix that is
/// diagonal in the bare basis and the same for every block.
pub fn counterdiabatic_term(phi_dot: f64, _eta: SubspaceId, controls: &Controls) -> Result<Operator> {
    if !phi_dot.is_finite() {
        return Err(Error::invalid("phi_dot", "must be finite"));
    }
    if controls.delta != 0.0 {
        return Err(Error::invalid(
            "delta",
            "counter-diabatic term is only available on resonance (Δ = 0)",
        ));
    }
    let half = CD_UPPER_SIGN * phi_dot / 2.0;
    Ok(Operator::from_diagonal(&StateVector::from_vec(vec![
        C64::new(half, 0.0),
        C64::new(-half, 0.0),
    ])))
}

/// The per-block counter-diabatic term embedded in a full model basis.
///
/// Each lower state gets `−s·φ̇/2` and each upper state `+s·φ̇/2`
/// (`s = CD_UPPER_SIGN`); `|rr⟩` gets `+3s·φ̇/2`, which keeps the
/// `11–R–rr` ladder static in the frame co-moving with φ. `|00⟩` and `|W⟩` are untouched.
pub fn counterdiabatic_operator(phi_dot: f64, mode: ModelMode) -> Operator {
    let half = CD_UPPER_SIGN * phi_dot / 2.0;
    let diag = mode.basis().iter().map(|label| {
        let value = match label {
            BasisLabel::S00 | BasisLabel::W => 0.0,
            other => half * (2.0 * f64::from(other.rydberg_count()) - 1.0),
        };
        C64::new(value, 0.0)
    });
    Operator::from_diagonal(&StateVector::from_iterator(mode.dim(), diag))
}

/// Mixing angle used by the protocol (resonant drive).
pub const RESONANT_THETA: f64 = PI / 2.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermiticity_defect, max_abs};

    fn params() -> PhysicalParams {
        PhysicalParams::reference()
    }

    fn at(label: BasisLabel) -> usize {
        label.index()
    }

    #[test]
    fn resonant_couplings_match_closed_form() {
        let p = params();
        let h = hamiltonian(&p, &Controls::new(p.omega, 0.0, 0.0), ModelMode::Reduced).unwrap();
        let two_mhz = units::from_mhz_2pi(2.0);
        assert!((h[(at(BasisLabel::SR0), at(BasisLabel::S10))].re - two_mhz).abs() < 1e-15);
        let expected = units::from_mhz_2pi(2.0 * SQRT_2);
        assert!((h[(at(BasisLabel::R), at(BasisLabel::S11))].re - expected).abs() < 1e-15);
        // 2π·2.828 MHz to the printed precision
        assert!((units::to_mhz_2pi(expected) - 2.828).abs() < 1e-3);
    }

    #[test]
    fn undriven_full_mode_only_has_blockade_shift() {
        let p = params();
        let h = hamiltonian(&p, &Controls::new(0.0, 0.0, 1.234), ModelMode::Full).unwrap();
        let rr = at(BasisLabel::RR);
        assert_eq!(h[(rr, rr)].re, p.v_blockade);
        let mut rest = h.clone();
        rest[(rr, rr)] = C64::new(0.0, 0.0);
        assert_eq!(max_abs(&rest), 0.0);
    }

    #[test]
    fn full_mode_ladder_entries() {
        let p = params();
        let c = Controls::new(p.omega, units::from_mhz_2pi(0.3), 0.7);
        let h = hamiltonian(&p, &c, ModelMode::Full).unwrap();
        let (r, rr) = (at(BasisLabel::R), at(BasisLabel::RR));
        assert!((h[(rr, rr)].re - (p.v_blockade + 2.0 * c.delta)).abs() < 1e-15);
        let expected = C64::from_polar(SQRT_2 / 2.0 * p.omega, 0.7);
        assert!((h[(rr, r)] - expected).norm() < 1e-15);
    }

    #[test]
    fn hermitian_with_decoupled_ground_and_sink() {
        let p = params();
        let c = Controls::new(0.031, -0.02, 2.1);
        for mode in [ModelMode::Reduced, ModelMode::Full, ModelMode::Open] {
            let h = hamiltonian(&p, &c, mode).unwrap();
            assert_eq!(h.nrows(), mode.dim());
            assert_eq!(hermiticity_defect(&h), 0.0);
            for j in 0..mode.dim() {
                assert_eq!(h[(0, j)].norm(), 0.0);
                assert_eq!(h[(j, 0)].norm(), 0.0);
            }
            if mode == ModelMode::Open {
                let w = at(BasisLabel::W);
                for j in 0..mode.dim() {
                    assert_eq!(h[(w, j)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn non_finite_controls_rejected() {
        let p = params();
        assert!(hamiltonian(&p, &Controls::new(f64::NAN, 0.0, 0.0), ModelMode::Reduced).is_err());
        assert!(hamiltonian(&p, &Controls::new(0.1, 0.0, f64::INFINITY), ModelMode::Full).is_err());
    }

    #[test]
    fn reduced_mode_blocks_are_invariant() {
        let p = params();
        let h = hamiltonian(&p, &Controls::new(0.05, 0.01, 0.4), ModelMode::Reduced).unwrap();
        let block = |i: usize| match BasisLabel::ORDER[i] {
            BasisLabel::S00 => 0,
            BasisLabel::S01 | BasisLabel::S0R => 2,
            BasisLabel::S10 | BasisLabel::SR0 => 1,
            _ => 3,
        };
        for i in 0..7 {
            for j in 0..7 {
                if block(i) != block(j) {
                    assert_eq!(h[(i, j)].norm(), 0.0, "({i},{j})");
                }
            }
        }
    }

    #[test]
    fn blocks_one_and_two_are_mirror_images() {
        let p = params();
        let h = hamiltonian(&p, &Controls::new(0.05, 0.01, 0.4), ModelMode::Full).unwrap();
        let swap = |l: BasisLabel| match l {
            BasisLabel::S10 => BasisLabel::S01,
            BasisLabel::S01 => BasisLabel::S10,
            BasisLabel::SR0 => BasisLabel::S0R,
            BasisLabel::S0R => BasisLabel::SR0,
            other => other,
        };
        for a in ModelMode::Full.basis() {
            for b in ModelMode::Full.basis() {
                assert_eq!(h[(a.index(), b.index())], h[(swap(*a).index(), swap(*b).index())]);
            }
        }
    }

    #[test]
    fn symmetrised_product_hamiltonian_equals_full_mode() {
        let p = params();
        let c = Controls::new(0.07, 0.013, -0.9);
        let s = symmetrizing_unitary();
        assert!(crate::linalg::unitarity_defect(&s) < 1e-15);
        let transformed = &s * product_hamiltonian(&p, &c) * s.adjoint();
        let full = hamiltonian(&p, &c, ModelMode::Full).unwrap();
        let block = transformed.view((0, 0), (8, 8)).into_owned();
        assert!(max_abs(&(block - full)) < 1e-15);
        // The antisymmetric state only sees its own detuning.
        for j in 0..8 {
            assert!(transformed[(8, j)].norm() < 1e-15);
        }
        assert!((transformed[(8, 8)].re - c.delta).abs() < 1e-15);
    }

    #[test]
    fn dressed_states_on_resonance() {
        let c = Controls::new(units::from_mhz_2pi(4.0), 0.0, 0.0);
        let frame = dressed_frame(&c, SubspaceId::One).unwrap();
        let r = FRAC_1_SQRT_2;
        assert!((frame.lambda_plus[0] - C64::new(r, 0.0)).norm() < 1e-15);
        assert!((frame.lambda_plus[1] - C64::new(r, 0.0)).norm() < 1e-15);
        assert!((frame.energy_plus - c.omega / 2.0).abs() < 1e-15);
        assert!((frame.energy_minus + c.omega / 2.0).abs() < 1e-15);

        let three = dressed_frame(&c, SubspaceId::Three).unwrap();
        assert!((three.energy_plus / frame.energy_plus - SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn dressed_states_are_eigenvectors_on_resonance_for_any_phase() {
        for phi in [0.0, 0.3, 2.0, -1.1] {
            for eta in SubspaceId::ALL {
                let c = Controls::new(0.025, 0.0, phi);
                let f = dressed_frame(&c, eta).unwrap();
                let h = subspace_hamiltonian(&c, eta);
                let lhs = &h * &f.lambda_plus;
                let rhs = &f.lambda_plus * C64::new(f.energy_plus, 0.0);
                assert!((lhs - rhs).norm() < 1e-15);
                let lhs = &h * &f.lambda_minus;
                let rhs = &f.lambda_minus * C64::new(f.energy_minus, 0.0);
                assert!((lhs - rhs).norm() < 1e-15);
                let overlap = (f.lambda_plus.adjoint() * &f.lambda_minus)[(0, 0)];
                assert!(overlap.norm() < 1e-15);
            }
        }
    }

    #[test]
    fn weak_drive_limit() {
        let c = Controls::new(1e-9, 0.03, 0.4);
        let f = dressed_frame(&c, SubspaceId::One).unwrap();
        assert!(f.theta < 1e-6);
        assert!((f.lambda_plus[1].norm() - 1.0).abs() < 1e-12);
        assert!((f.lambda_minus[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_dressed_frame_rejected() {
        assert!(dressed_frame(&Controls::new(0.0, 0.0, 0.3), SubspaceId::Two).is_err());
    }

    #[test]
    fn counterdiabatic_term_values() {
        let c = Controls::new(0.025, 0.0, 0.2);
        let zero = counterdiabatic_term(0.0, SubspaceId::One, &c).unwrap();
        assert_eq!(max_abs(&zero), 0.0);
        let x = 0.0197;
        for eta in SubspaceId::ALL {
            let m = counterdiabatic_term(x, eta, &c).unwrap();
            assert!((m[(0, 0)].re + x / 2.0).abs() < 1e-18);
            assert!((m[(1, 1)].re - x / 2.0).abs() < 1e-18);
            assert_eq!(m[(0, 1)].norm(), 0.0);
        }
        assert!(counterdiabatic_term(x, SubspaceId::One, &Controls::new(0.025, 0.01, 0.0)).is_err());
    }

    #[test]
    fn embedded_counterdiabatic_operator_matches_blocks() {
        let x = 0.3;
        let op = counterdiabatic_operator(x, ModelMode::Full);
        let c = Controls::new(0.1, 0.0, 0.0);
        for eta in SubspaceId::ALL {
            let block = counterdiabatic_term(x, eta, &c).unwrap();
            assert_eq!(op[(eta.upper().index(), eta.upper().index())], block[(0, 0)]);
            assert_eq!(op[(eta.lower().index(), eta.lower().index())], block[(1, 1)]);
        }
        assert_eq!(op[(0, 0)].re, 0.0);
        assert!((op[(7, 7)].re - 3.0 * CD_UPPER_SIGN * x / 2.0).abs() < 1e-15);
        assert_eq!(counterdiabatic_operator(x, ModelMode::Open)[(8, 8)].re, 0.0);
    }

    #[test]
    fn params_validation_and_ratio() {
        assert!(PhysicalParams::new(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 0.0, -1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 0.0, 1.0, 0.0).is_err());
        let p = params();
        assert!((p.blockade_ratio() - 125.0).abs() < 1e-12);
        assert!(!p.soft_blockade());
        assert!(PhysicalParams::from_mhz_2pi(4.0, 0.0, 30.0, 500.0)
            .unwrap()
            .soft_blockade());
    }

    #[test]
    fn basis_prefixes() {
        assert_eq!(ModelMode::Reduced.basis().len(), 7);
        assert_eq!(ModelMode::Open.basis()[8], BasisLabel::W);
        assert_eq!(ModelMode::Reduced.index_of(BasisLabel::RR), None);
        for mode in [ModelMode::Reduced, ModelMode::Full, ModelMode::Open] {
            assert_eq!(mode.index_of(BasisLabel::S00), Some(0));
        }
    }
}
