use num_complex::Complex64;
use proptest::prelude::*;

use spinnet::cli::output::fmt_num;
use spinnet::dynamics::{Method, Propagator};
use spinnet::hilbert::{assemble_hamiltonian, SectorBasis, StateVector};
use spinnet::network::build_chain;
use spinnet::protocol::{
    optimal_ghz_splitters, p_ghz_formula, p_w_formula, run_closed_form, ProtocolConfig, SplitterParams,
    TwoQubitDensity,
};
use spinnet::splitter::y_node_matrix;

fn splitters(theta: f64, theta_out: f64) -> SplitterParams {
    SplitterParams { alpha: theta.cos(), beta: theta.sin(), alpha_out: theta_out.cos(), beta_out: theta_out.sin() }
}

fn t_from(r: f64, phi: f64) -> Complex64 {
    Complex64::from_polar(r, phi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ghz_ledger_is_complete(
        r in 0.05f64..=1.0, phi in -3.1f64..3.1, n in 1usize..7,
        th in 0.01f64..1.56, th_out in 0.01f64..1.56,
    ) {
        let t = t_from(r, phi);
        let s = splitters(th, th_out);
        let out = run_closed_form(&ProtocolConfig::ghz(n).with_t(t).with_splitters(s)).unwrap();
        prop_assert!(out.ledger.iter().all(|b| b.probability >= -1e-15));
        prop_assert!((out.ledger_total - 1.0).abs() < 1e-12);
        // independent evaluation of the surviving amplitudes
        let direct = (s.alpha * s.alpha_out * t.powi(n as i32)).norm_sqr() + (s.beta * s.beta_out).powi(2);
        prop_assert!((out.success_probability - direct).abs() < 1e-12);
    }

    #[test]
    fn w_ledger_is_complete(r in 0.05f64..=1.0, phi in -3.1f64..3.1, n in 2usize..10) {
        let t = t_from(r, phi);
        let out = run_closed_form(&ProtocolConfig::w(n).with_t(t)).unwrap();
        prop_assert!((out.ledger_total - 1.0).abs() < 1e-12);
        prop_assert!((out.success_probability - r * r / n as f64).abs() < 1e-12);
        prop_assert!((out.fidelity_to_target - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_splitters_reach_formula(t in 0.05f64..=1.0, n in 1usize..8) {
        let s = optimal_ghz_splitters(t, n).unwrap();
        let tc = Complex64::new(t, 0.0);
        let out = run_closed_form(&ProtocolConfig::ghz(n).with_t(tc).with_splitters(s)).unwrap();
        prop_assert!((out.success_probability - p_ghz_formula(tc, n)).abs() < 1e-12);
        prop_assert!((out.fidelity_to_target - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_ghz_splitters_never_beat_optimum(t in 0.05f64..=1.0, n in 1usize..8, th in 0.01f64..1.56) {
        let tn = t.powi(n as i32);
        let th_out = (th.cos() * tn).atan2(th.sin());
        let tc = Complex64::new(t, 0.0);
        let out = run_closed_form(&ProtocolConfig::ghz(n).with_t(tc).with_splitters(splitters(th, th_out))).unwrap();
        prop_assert!((out.fidelity_to_target - 1.0).abs() < 1e-10);
        prop_assert!(out.success_probability <= p_ghz_formula(tc, n) + 1e-12);
    }

    #[test]
    fn probabilities_fall_with_register_size(t in 0.05f64..=1.0, n in 2usize..12) {
        let tc = Complex64::new(t, 0.0);
        prop_assert!(p_ghz_formula(tc, n + 1) <= p_ghz_formula(tc, n) + 1e-15);
        prop_assert!(p_w_formula(tc, n + 1) < p_w_formula(tc, n));
    }

    #[test]
    fn one_excitation_concurrence(th in 0.0f64..std::f64::consts::FRAC_PI_2) {
        let (a, b) = (th.cos(), th.sin());
        let c = TwoQubitDensity::one_excitation(a, b).unwrap().concurrence();
        prop_assert!((c - 2.0 * (a * b).abs()).abs() < 1e-10);
    }

    #[test]
    fn pure_state_concurrence(v in proptest::array::uniform8(-1.0f64..1.0)) {
        let amps = [0, 2, 4, 6].map(|i| Complex64::new(v[i], v[i + 1]));
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 0.1);
        let amps = amps.map(|a| a / norm);
        let expected = 2.0 * (amps[0] * amps[3] - amps[1] * amps[2]).norm();
        let c = TwoQubitDensity::pure(amps).unwrap().concurrence();
        prop_assert!((c - expected).abs() < 1e-8, "{c} vs {expected}");
    }

    #[test]
    fn y_node_is_unitary(th in 0.0f64..std::f64::consts::FRAC_PI_2) {
        let m = y_node_matrix(th.cos(), th.sin()).unwrap();
        prop_assert!(m.unitarity_residue() < 1e-12);
    }

    #[test]
    fn fmt_num_round_trips(x in proptest::num::f64::NORMAL) {
        prop_assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hamiltonian_is_hermitian_and_evolution_unitary(
        len in 6usize..12, k in 1usize..3, pos in 1usize..4,
        jz in 0.0f64..12.0, h in 0.0f64..12.0, t in 0.1f64..8.0, seed in 0u64..1000,
    ) {
        let net = build_chain(len, 1.0).unwrap().embed_dd_qubit(pos, jz, h).unwrap();
        let basis = SectorBasis::for_network(&net, k).unwrap();
        let ham = assemble_hamiltonian(&net, &basis).unwrap();
        prop_assert!(ham.hermiticity_residue() < 1e-14);
        let amps: Vec<Complex64> = (0..basis.len())
            .map(|j| {
                let x = (seed as f64 + 1.0) * (j as f64 + 0.5);
                Complex64::new(x.sin(), (1.7 * x).cos())
            })
            .collect();
        let start = StateVector::normalized(amps).unwrap();
        let out = Propagator::new(&ham, Method::Chebyshev).unwrap().evolve(&start, t).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-10);
    }
}
