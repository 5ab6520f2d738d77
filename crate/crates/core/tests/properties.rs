use nalgebra::DVector;
use proptest::prelude::*;

use tfd_core::bogoliubov::{boson_overlap, sudden_coeffs, ReferenceMode};
use tfd_core::mode_solver::{
    solve_boson_mode, solve_fermion_modes, solve_oscillator_mode, FermionChannel, IntegratorConfig,
};
use tfd_core::oracle::{
    self, build_thermal_state_doubled, doubled_operator, evolve_doubled_boson, expectation, linalg,
    number_operator, position_operator, thermal_density, BasisDescriptor, DensityMatrix, OracleConfig, Scheme,
    StateVector,
};
use tfd_core::protocols::{Profile, Protocol, Side};
use tfd_core::thermal::{equilibrium_occupation, evolved_occupation_boson, theta, Statistics};
use tfd_core::{BosonProtocol, ComplexProfile, FermionProtocol, OscillatorProtocol, C64};

fn boson_quench(w0: f64, w1: f64, wp: f64, phase: f64, width: f64) -> BosonProtocol {
    BosonProtocol::new(
        Profile::tanh_pinned(w0, w1, 3.0, width, 0.0, 6.0).unwrap(),
        ComplexProfile::with_phase(Profile::tanh_pinned(0.0, wp, 3.0, width, 0.0, 6.0).unwrap(), phase),
        0.0,
        6.0,
    )
    .unwrap()
}

fn frequency_quench(w0: f64, w1: f64, width: f64, t_f: f64) -> OscillatorProtocol {
    OscillatorProtocol::new(
        Profile::Constant(1.0),
        Profile::tanh_pinned(w0, w1, 0.5 * t_f, width, 0.0, t_f).unwrap(),
        0.0,
        t_f,
    )
    .unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn evaluate_is_pure_and_pinned(start in 0.2f64..3.0, end in 0.2f64..3.0, width in 0.05f64..4.0, t in 0.0f64..6.0) {
        let families = [
            Profile::tanh_pinned(start, end, 2.5, width, 0.0, 6.0).unwrap(),
            Profile::linear(start, end, 1.0, 4.0).unwrap(),
            Profile::sudden(start, end, 3.0),
        ];
        for omega in families {
            let p = OscillatorProtocol::new(Profile::Constant(1.0), omega, 0.0, 6.0).unwrap();
            let a = p.evaluate(t).unwrap();
            let b = p.evaluate(t).unwrap();
            prop_assert_eq!(a.omega.to_bits(), b.omega.to_bits());
            prop_assert!((p.evaluate(0.0).unwrap().omega - start).abs() <= 1e-12);
            prop_assert!((p.evaluate(6.0).unwrap().omega - end).abs() <= 1e-12);
        }
    }

    #[test]
    fn boson_commutator_is_conserved(w0 in 0.5f64..2.0, w1 in 0.5f64..2.0, wp in 0.0f64..0.4, phase in -3.0f64..3.0, width in 0.2f64..2.0) {
        let traj = solve_boson_mode(&boson_quench(w0, w1, wp, phase, width), &IntegratorConfig::default()).unwrap();
        for s in &traj.samples {
            prop_assert!((s.commutator() - 1.0).abs() <= 1e-9);
        }
        prop_assert!(traj.drift.get("commutator").unwrap() <= 1e-9);
    }

    #[test]
    fn wronskian_and_overlap_constraint(w0 in 0.5f64..2.0, w1 in 0.5f64..3.0, width in 0.1f64..2.0) {
        let p = frequency_quench(w0, w1, width, 8.0);
        let traj = solve_oscillator_mode(&p, &IntegratorConfig::default()).unwrap();
        let tol = traj.drift.get("wronskian").unwrap();
        prop_assert!(tol <= 1e-9);
        let start = boson_overlap(traj.first(), &ReferenceMode::new(1.0, w0, 0.0).unwrap()).unwrap();
        prop_assert!((start.mu - C64::from(1.0)).norm() < 1e-14 && start.nu.norm() < 1e-14);
        let end = boson_overlap(traj.last(), &ReferenceMode::new(1.0, w1, 8.0).unwrap()).unwrap();
        prop_assert!(end.constraint_defect() <= tol.max(1e-14) * 4.0);
    }

    #[test]
    fn fermion_bilinears_are_conserved(w0 in 0.5f64..2.0, wp in 0.0f64..0.6, wm in 0.0f64..0.6, phase in -3.0f64..3.0) {
        let p = FermionProtocol::new(
            Profile::tanh_pinned(w0, 1.0, 3.0, 0.5, 0.0, 6.0).unwrap(),
            ComplexProfile::with_phase(Profile::tanh_pinned(0.0, wp, 3.0, 0.5, 0.0, 6.0).unwrap(), phase),
            ComplexProfile::with_phase(Profile::Constant(wm), -phase),
            0.0,
            6.0,
        ).unwrap();
        let traj = solve_fermion_modes(&p, &IntegratorConfig::default()).unwrap();
        for s in &traj.samples {
            prop_assert!((s.norm(FermionChannel::A) - 1.0).abs() <= 1e-9);
            prop_assert!((s.norm(FermionChannel::B) - 1.0).abs() <= 1e-9);
            prop_assert!(s.anticommutator_ab().norm() <= 1e-9);
            prop_assert!(s.overlap_ab().norm() <= 1e-9);
        }
    }

    #[test]
    fn overlap_with_reference_itself(m in 0.2f64..5.0, w in 0.2f64..5.0, t in -3.0f64..3.0, phase_time in -3.0f64..3.0) {
        let reference = ReferenceMode::new(m, w, phase_time).unwrap();
        let c = boson_overlap(&reference.as_mode(t), &reference).unwrap();
        prop_assert!((c.mu - C64::from(1.0)).norm() < 1e-13);
        prop_assert!(c.nu.norm() < 1e-13);
    }

    #[test]
    fn sudden_is_symmetric(a in 0.05f64..20.0, b in 0.05f64..20.0) {
        let ab = sudden_coeffs(a, b).unwrap();
        let ba = sudden_coeffs(b, a).unwrap();
        prop_assert!(close(ab.nu.norm_sqr(), ba.nu.norm_sqr(), 1e-13));
        prop_assert!(ab.constraint_defect() < 1e-12);
    }

    #[test]
    fn theta_identities(x in 1e-3f64..50.0) {
        let tb = theta(x, 1.0, 1.0, Statistics::Boson).unwrap();
        let nb = equilibrium_occupation(x, 1.0, 1.0, Statistics::Boson).unwrap();
        prop_assert!(close(tb.sinh().powi(2), nb, 1e-12));
        prop_assert!(close(tb.cosh().powi(2), 1.0 + nb, 1e-12));
        prop_assert!(close(tb.tanh(), (-0.5 * x).exp(), 1e-12));
        let tf = theta(x, 1.0, 1.0, Statistics::Fermion).unwrap();
        let nf = equilibrium_occupation(x, 1.0, 1.0, Statistics::Fermion).unwrap();
        prop_assert!(close(tf.sin().powi(2), nf, 1e-12));
        prop_assert!(close(tf.cos().powi(2), 1.0 - nf, 1e-12));
        prop_assert!(close(tf.tan(), (-0.5 * x).exp(), 1e-12));
        prop_assert!((0.0..0.5).contains(&nf));
    }

    #[test]
    fn occupation_decreases_with_beta(omega in 0.1f64..5.0, beta in 0.01f64..20.0, step in 1e-3f64..1.0) {
        for s in [Statistics::Boson, Statistics::Fermion] {
            let lo = equilibrium_occupation(beta, omega, 1.0, s).unwrap();
            let hi = equilibrium_occupation(beta + step, omega, 1.0, s).unwrap();
            prop_assert!(hi < lo || (hi == 0.0 && lo == 0.0));
        }
    }

    #[test]
    fn evolution_never_lowers_boson_occupation(re in -2.0f64..2.0, im in -2.0f64..2.0, beta in 0.05f64..10.0) {
        let nu = C64::new(re, im);
        let eq = equilibrium_occupation(beta, 1.0, 1.0, Statistics::Boson).unwrap();
        let ev = evolved_occupation_boson(nu, beta, 1.0, 1.0).unwrap();
        prop_assert!(ev >= eq);
        prop_assert_eq!(ev == eq, nu.norm_sqr() == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn halving_rel_tol_does_not_inflate_drift(w1 in 0.5f64..3.0, width in 0.1f64..2.0, rel in 1e-9f64..1e-6) {
        let p = frequency_quench(1.0, w1, width, 8.0);
        let coarse = solve_oscillator_mode(&p, &IntegratorConfig::with_tolerances(rel, rel * 1e-2)).unwrap();
        let fine = solve_oscillator_mode(&p, &IntegratorConfig::with_tolerances(0.5 * rel, 0.5e-2 * rel)).unwrap();
        let final_drift = |t: &tfd_core::Trajectory<tfd_core::OscillatorMode>| (t.last().wronskian() - tfd_core::I).norm();
        // Round-off floor: both drifts sit at machine precision for easy quenches.
        let floor = 64.0 * f64::EPSILON;
        prop_assert!(final_drift(&fine) <= 2.0 * final_drift(&coarse).max(floor));
    }

    #[test]
    fn thermal_constructions_agree(x in 0.5f64..12.0) {
        let pair = build_thermal_state_doubled(x, 1.0, 1.0, BasisDescriptor::boson_doubled(60).unwrap()).unwrap();
        prop_assert!(pair.truncation.unwrap().tail_weight <= 1e-8);
        prop_assert!(pair.distance <= 1e-8);
        let f = build_thermal_state_doubled(x, 1.0, 1.0, BasisDescriptor::FermionDoubled).unwrap();
        prop_assert!(f.distance < 1e-12);
    }

    #[test]
    fn doubled_density_reproduces_single_traces(x in 0.3f64..5.0, m in 0.5f64..2.0) {
        let levels = 8;
        let rho = thermal_density(x, 1.0, 1.0, BasisDescriptor::boson_single(levels).unwrap()).unwrap();
        let rho_tilde = rho.matrix.map(|z| z.conj());
        let rho_hat = DensityMatrix::new(
            linalg::kron(&rho.matrix, &(&rho_tilde / rho_tilde.trace())),
            BasisDescriptor::boson_doubled(levels).unwrap(),
        ).unwrap();
        let q = position_operator(levels, m, 1.0, 1.0).unwrap();
        for op in [number_operator(levels).unwrap(), q.product(&q).unwrap(), q] {
            let single = expectation(&rho, &op).unwrap();
            let doubled = expectation(&rho_hat, &doubled_operator(&op, false).unwrap()).unwrap();
            prop_assert!((single - doubled).norm() <= 1e-12);
        }
    }

    #[test]
    fn doubled_evolution_conserves_norm_and_energy(wp in 0.05f64..0.3, phase in -3.0f64..3.0, seed in 0u64..1000) {
        let levels = 24;
        let p = BosonProtocol::new(
            Profile::Constant(1.0),
            ComplexProfile::with_phase(Profile::sudden(0.0, wp, 1.0), phase),
            0.0,
            2.0,
        ).unwrap();
        let basis = BasisDescriptor::boson_doubled(levels).unwrap();
        let mut data = DVector::zeros(levels * levels);
        for n in 0..3 {
            for k in 0..3 {
                let s = (seed as f64 + 1.0) * (1.0 + n as f64) * (2.0 + k as f64);
                data[n * levels + k] = C64::new(s.sin(), (0.7 * s).cos());
            }
        }
        let psi0 = StateVector::normalized(data, basis).unwrap();
        let cfg = OracleConfig { truncation: levels, substeps_per_unit: 400, scheme: Scheme::Magnus4 };
        let run = evolve_doubled_boson(&p, &psi0, &[1.0, 1.5, 2.0], &cfg).unwrap();
        prop_assert!(run.norm_drift < 1e-9);
        let s = p.sample(1.0, Side::Right);
        let h = oracle::build_boson_hamiltonian(s.omega0, s.omega_plus, levels, 1.0).unwrap();
        let ht = oracle::build_boson_tilde_hamiltonian(s.omega0, s.omega_plus, levels, 1.0).unwrap();
        let h_hat = oracle::OperatorMatrix::new(
            doubled_operator(&h, false).unwrap().matrix - doubled_operator(&ht, true).unwrap().matrix,
            basis,
            "H_hat",
        ).unwrap();
        let energies: Vec<f64> = run.states.iter().map(|psi| oracle::expectation_state(psi, &h_hat).unwrap().re).collect();
        for e in &energies {
            prop_assert!((e - energies[0]).abs() < 1e-9);
        }
    }
}

#[test]
fn narrow_ramps_converge_to_sudden_matching() {
    let want = sudden_coeffs(1.0, 4.0).unwrap().nu.norm_sqr();
    let mut last = f64::INFINITY;
    for width in [0.1 / 4.0, 1e-2, 3e-3, 1e-3, 1e-4] {
        let p = OscillatorProtocol::new(
            Profile::Constant(1.0),
            Profile::tanh_pinned(1.0, 4.0, 1.0, width, 0.0, 2.0).unwrap(),
            0.0,
            2.0,
        )
        .unwrap();
        let traj = solve_oscillator_mode(&p, &IntegratorConfig::default()).unwrap();
        let nu = boson_overlap(traj.last(), &ReferenceMode::new(1.0, 4.0, 2.0).unwrap()).unwrap().nu;
        let err = (nu.norm_sqr() - want).abs();
        assert!(err < last, "width {width}: {err} after {last}");
        last = err;
    }
    assert!(last < 1e-3);
}

#[test]
fn slower_ramps_produce_fewer_particles() {
    let mut last = f64::INFINITY;
    for width in [1.0, 2.0, 4.0, 8.0] {
        let p = frequency_quench(1.0, 2.0, width, 32.0 * width);
        let traj = solve_oscillator_mode(&p, &IntegratorConfig::default()).unwrap();
        let nu = boson_overlap(traj.last(), &ReferenceMode::new(1.0, 2.0, 32.0 * width).unwrap()).unwrap().nu;
        assert!(nu.norm_sqr() < last);
        last = nu.norm_sqr();
    }
}
