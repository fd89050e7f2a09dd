use std::f64::consts::PI;

use proptest::prelude::*;

use rydgate::evolve::{self, make_collapse_set, IntegratorOrder, PropagatorOptions};
use rydgate::linalg::{self, DensityMatrix, C64};
use rydgate::metrics::{cz_target, gate_fidelity, phase_distance, wrap_phase};
use rydgate::model::{self, Controls, ModelMode, PhysicalParams};
use rydgate::pulses::{self, PerturbationSpec, Protocol, PulseSchedule};

fn params() -> PhysicalParams {
    PhysicalParams::reference()
}

fn controls() -> impl Strategy<Value = Controls> {
    (0.0..0.08f64, -0.04..0.04f64, -PI..PI).prop_map(|(o, d, p)| Controls::new(o, d, p))
}

fn piecewise() -> impl Strategy<Value = (Vec<f64>, Vec<Controls>)> {
    prop::collection::vec((0.5..40.0f64, controls()), 1..5).prop_map(|segs| {
        let mut edges = vec![0.0];
        let mut ctrl = Vec::new();
        for (len, c) in segs {
            edges.push(edges.last().unwrap() + len);
            ctrl.push(c);
        }
        (edges, ctrl)
    })
}

fn mode() -> impl Strategy<Value = ModelMode> {
    prop_oneof![Just(ModelMode::Reduced), Just(ModelMode::Full)]
}

fn product_oracle(edges: &[f64], ctrl: &[Controls], mode: ModelMode) -> linalg::Operator {
    let p = params();
    let mut u = linalg::identity(mode.dim());
    for (k, c) in ctrl.iter().enumerate() {
        let h = model::hamiltonian(&p, c, mode).unwrap();
        u = linalg::expm_neg_i(&(h * C64::new(edges[k + 1] - edges[k], 0.0))) * u;
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hamiltonian_is_hermitian(c in controls(), m in prop_oneof![Just(ModelMode::Reduced), Just(ModelMode::Full), Just(ModelMode::Open)]) {
        let h = model::hamiltonian(&params(), &c, m).unwrap();
        prop_assert!(linalg::hermiticity_defect(&h) <= 1e-14);
    }

    #[test]
    fn piecewise_propagator_is_unitary_and_matches_exponential_product((edges, ctrl) in piecewise(), m in mode()) {
        let s = PulseSchedule::piecewise(edges.clone(), ctrl.clone()).unwrap();
        let u = evolve::propagate_unitary(&params(), &s, m, &PropagatorOptions::default()).unwrap();
        prop_assert!(linalg::unitarity_defect(&u) <= 1e-8);
        prop_assert!(linalg::max_abs(&(u - product_oracle(&edges, &ctrl, m))) <= 1e-8);
    }

    #[test]
    fn midpoint_also_exact_for_constant_segments((edges, ctrl) in piecewise()) {
        let s = PulseSchedule::piecewise(edges.clone(), ctrl.clone()).unwrap();
        let opts = PropagatorOptions { order: IntegratorOrder::Midpoint2, ..PropagatorOptions::default() };
        let u = evolve::propagate_unitary(&params(), &s, ModelMode::Reduced, &opts).unwrap();
        prop_assert!(linalg::max_abs(&(u - product_oracle(&edges, &ctrl, ModelMode::Reduced))) <= 1e-8);
    }

    #[test]
    fn bernstein_partition_of_unity(n in 0u32..30, x in 0.0..=1.0f64) {
        let sum: f64 = (0..=n).map(|v| pulses::bernstein(v, n, x).unwrap()).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn bernstein_nonnegative(n in 0u32..30, v in 0u32..30, x in 0.0..=1.0f64) {
        prop_assume!(v <= n);
        prop_assert!(pulses::bernstein(v, n, x).unwrap() >= 0.0);
    }

    #[test]
    fn wrap_phase_range_and_congruence(x in -100.0..100.0f64) {
        let w = wrap_phase(x);
        prop_assert!(w > -PI && w <= PI);
        let turns = (x - w) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() <= 1e-9);
    }

    #[test]
    fn fidelity_ignores_global_phase(a in -PI..PI, g in -PI..PI) {
        let u = cz_target(a) * C64::from_polar(1.0, g);
        let f = gate_fidelity(&u, &cz_target(a)).unwrap();
        prop_assert!((f - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn perturbation_is_deterministic_per_seed_and_trial(seed in any::<u64>(), trial in 0u64..100, t in 0.0..500.0f64) {
        let s = PulseSchedule::for_protocol(Protocol::Ncgc, &params()).unwrap();
        let spec = PerturbationSpec::noise(0.1, 0.1, seed);
        let key = pulses::stream_key(seed, &[0]);
        let a = pulses::perturb_trial(&s, &spec, key, trial).unwrap();
        let b = pulses::perturb_trial(&s, &spec, key, trial).unwrap();
        let (ca, cb) = (a.controls_at(t).unwrap(), b.controls_at(t).unwrap());
        prop_assert_eq!(ca.omega.to_bits(), cb.omega.to_bits());
        prop_assert_eq!(ca.delta.to_bits(), cb.delta.to_bits());
        let base = s.controls_at(t).unwrap();
        prop_assert!(ca.omega >= base.omega && ca.omega <= 1.1 * base.omega + 1e-15);
    }

    #[test]
    fn systematic_rabi_error_leaves_ncgc_phases(k in -0.1..0.1f64) {
        let p = params();
        let s = pulses::perturb(&PulseSchedule::for_protocol(Protocol::Ncgc, &p).unwrap(), &PerturbationSpec::systematic(k, 0.0)).unwrap();
        let u = evolve::propagate_unitary(&p, &s, ModelMode::Reduced, &PropagatorOptions::default()).unwrap();
        let r = rydgate::metrics::GateResult::from_propagator(&u, &cz_target(PI)).unwrap();
        for phase in r.phases() {
            prop_assert!(phase_distance(phase, PI) <= 1e-3);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn lindblad_stays_physical(g1 in 0.0..50.0f64, g2 in 0.0..50.0f64, g3 in 0.0..50.0f64, (edges, ctrl) in piecewise()) {
        let s = PulseSchedule::piecewise(edges, ctrl).unwrap();
        let c = make_collapse_set(g1, g2, g3).unwrap();
        let mut psi = linalg::zeros(9).column(0).into_owned();
        for i in rydgate::metrics::computational_indices() {
            psi[i] = C64::new(0.5, 0.0);
        }
        let rho0 = DensityMatrix::from_pure(&psi).unwrap();
        let rho = evolve::lindblad_evolve(&params(), &s, &c, &rho0, &PropagatorOptions::default()).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() <= 1e-6);
        prop_assert!(rho.min_eigenvalue() >= -1e-8);
        prop_assert!(linalg::hermiticity_defect(rho.matrix()) <= 1e-12);
    }
}
