//! Property tests for the distribution engine and heralding statistics.

use proptest::prelude::*;
use spdc_herald::*;

fn vacuum_prob_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.02f64..=1.0, 1..=6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn phase_type_matches_brute_force_convolution(qs in vacuum_prob_vec()) {
        let n_max = 20usize;
        let pmf = phase_type_pmf(&qs, n_max).unwrap();
        // independent nested-loop convolution
        let mut acc = vec![0.0; n_max + 1];
        acc[0] = 1.0;
        for &q in &qs {
            let mut next = vec![0.0; n_max + 1];
            for i in 0..=n_max {
                let mut geo = q;
                for j in 0..=(n_max - i) {
                    next[i + j] += acc[i] * geo;
                    geo *= 1.0 - q;
                }
            }
            acc = next;
        }
        for n in 0..=n_max {
            prop_assert!((pmf.get(n) - acc[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_type_is_normalized(qs in vacuum_prob_vec()) {
        let pmf = phase_type_pmf(&qs, 80).unwrap();
        pmf.validate(1e-10).unwrap();
    }

    #[test]
    fn equal_q_phase_type_is_negative_binomial(q in 0.05f64..=1.0, k in 1usize..=6, n in 0usize..=25) {
        let pmf = phase_type_pmf(&vec![q; k], n).unwrap();
        let nb = negative_binomial_pmf(q, k, n).unwrap();
        prop_assert!((pmf.get(n) - nb).abs() < 1e-12);
    }

    #[test]
    fn thinned_geometric_is_geometric_with_transformed_vacuum_prob(
        q in 0.05f64..=1.0,
        eta in 0.0f64..=1.0,
    ) {
        let n = geometric_n_trunc(q, 1e-18).unwrap();
        let thinned = apply_binomial_loss(&geometric_pmf(q, n).unwrap(), eta).unwrap();
        let q_lossy = lossy_thermal_vacuum_prob(q, eta).unwrap();
        let expected = geometric_pmf(q_lossy, n).unwrap();
        for m in 0..=n {
            prop_assert!((thinned.get(m) - expected.get(m)).abs() < 1e-12);
        }
    }

    #[test]
    fn herald_probability_ignores_signal_loss(
        gain in 0.0f64..=2.0,
        mode_decay in 0.0f64..=0.8,
        eta_idler in 0.05f64..=1.0,
        eta_signal in 0.0f64..=1.0,
        n in 0usize..=5,
    ) {
        let spec = ModeSpectrum::new(gain, mode_decay, 20).unwrap();
        let a = herald_probability(&spec, &LossModel::new(1.0, eta_idler).unwrap(), n).unwrap();
        let b = herald_probability(&spec, &LossModel::new(eta_signal, eta_idler).unwrap(), n).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn herald_pmf_is_normalized(
        gain in 0.0f64..=2.0,
        mode_decay in 0.0f64..=0.8,
        eta_idler in 0.0f64..=1.0,
    ) {
        let spec = ModeSpectrum::new(gain, mode_decay, 25).unwrap();
        let loss = LossModel::new(1.0, eta_idler).unwrap();
        let n_max = 40 + (6.0 * mean_detected_photons(&spec, eta_idler).unwrap()) as usize;
        let pmf = herald_pmf(&spec, &loss, n_max).unwrap();
        pmf.validate(1e-10).unwrap();
    }
}

proptest! {
    // the composite fidelity checks are heavier per case
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn photon_number_fidelity_dominates_single_mode_fidelity(
        gain in 0.15f64..=1.8,
        mode_decay in 0.0f64..=0.7,
        eta_signal in 0.2f64..=1.0,
        eta_idler in 0.2f64..=1.0,
        n in 1usize..=3,
    ) {
        let spec = ModeSpectrum::new(gain, mode_decay, 12).unwrap();
        let loss = LossModel::new(eta_signal, eta_idler).unwrap();
        let f_single = fidelity_single_mode(&spec, &loss, n).unwrap();
        let f_total = fidelity_photon_number(&spec, &loss, n).unwrap();
        prop_assert!((0.0..=1.0).contains(&f_single));
        prop_assert!((0.0..=1.0).contains(&f_total));
        prop_assert!(f_total >= f_single - 1e-12);
    }

    #[test]
    fn fidelity_degrades_with_gain_without_signal_loss(
        mode_decay in 0.0f64..=0.7,
        eta_idler in 0.3f64..=1.0,
        n in 1usize..=3,
    ) {
        let loss = LossModel::new(1.0, eta_idler).unwrap();
        let mut last = f64::INFINITY;
        for gain in [0.2, 0.6, 1.0, 1.4, 1.8] {
            let spec = ModeSpectrum::new(gain, mode_decay, 12).unwrap();
            let f = fidelity_single_mode(&spec, &loss, n).unwrap();
            prop_assert!(f <= last + 1e-12, "gain {gain}: {f} rose above {last}");
            last = f;
        }
    }

    #[test]
    fn joint_table_masses_are_consistent(
        tanh_param in 0.0f64..=0.85,
        eta_signal in 0.0f64..=1.0,
        eta_idler in 0.0f64..=1.0,
    ) {
        let loss = LossModel::new(eta_signal, eta_idler).unwrap();
        let n_trunc = if tanh_param > 0.0 {
            geometric_n_trunc(1.0 - tanh_param * tanh_param, 1e-13).unwrap() + 2
        } else {
            4
        };
        let joint = joint_lossy_pmf(tanh_param, &loss, n_trunc).unwrap();
        prop_assert!((joint.total() + joint.tail_mass() - 1.0).abs() < 1e-10);
        let sig = joint.signal_marginal();
        let idl = joint.idler_marginal();
        prop_assert!((sig.total() - joint.total()).abs() < 1e-12);
        prop_assert!((idl.total() - joint.total()).abs() < 1e-12);
    }
}
