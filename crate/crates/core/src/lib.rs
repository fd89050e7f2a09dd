//! Pulse-level simulation of two-atom Rydberg-blockade controlled-phase gates.
//!
//! The crate builds the two-atom Hamiltonians in a fixed labelled basis
//! ([`model`]), generates the control waveforms of three gate protocols
//! ([`pulses`]), propagates them in closed and open systems ([`evolve`]),
//! scores the results ([`metrics`]) and runs the robustness, decoherence and
//! timing studies ([`experiments`]). The [`cli`] module holds the config
//! format and dispatcher behind the `rydgate` binary.
//!
//! Internally every angular frequency is in rad/ns and every time in ns;
//! [`units`] converts from the 2π×MHz values used at the I/O boundary.

pub mod cli;
pub mod error;
pub mod evolve;
pub mod experiments;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod pulses;
pub mod units;

pub use error::{Error, Result};
pub use evolve::{
    lindblad_evolve, make_collapse_set, propagate_state, propagate_unitary, CollapseSet, IntegratorOrder,
    LindbladConvention, PropagatorOptions,
};
pub use linalg::{DensityMatrix, Operator, StateVector, C64};
pub use metrics::{cz_target, gate_fidelity, relative_phase, state_fidelity, GateResult};
pub use model::{hamiltonian, BasisLabel, Controls, ModelMode, PhysicalParams, SubspaceId};
pub use pulses::{NcgcParams, PerturbationSpec, Protocol, PulseSchedule};
