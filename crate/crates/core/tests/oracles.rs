//! Cross-checks of the distribution engine and heralding statistics against
//! independently coded oracles: brute-force convolutions, closed forms, and
//! numerically refit loss transforms.

use spdc_herald::*;

/// Brute-force convolution of geometric distributions, written with plain
/// nested loops and no shared code with the phase-type engine.
fn brute_force_convolution(vacuum_probs: &[f64], n_max: usize) -> Vec<f64> {
    let mut acc = vec![0.0; n_max + 1];
    acc[0] = 1.0;
    for &q in vacuum_probs {
        let mut geo = Vec::with_capacity(n_max + 1);
        let mut p = q;
        for _ in 0..=n_max {
            geo.push(p);
            p *= 1.0 - q;
        }
        let mut next = vec![0.0; n_max + 1];
        for i in 0..=n_max {
            for j in 0..=(n_max - i) {
                next[i + j] += acc[i] * geo[j];
            }
        }
        acc = next;
    }
    acc
}

#[test]
fn phase_type_agrees_with_brute_force() {
    let cases: Vec<Vec<f64>> = vec![
        vec![0.3],
        vec![0.9, 0.4],
        vec![0.85, 0.6, 0.35],
        vec![0.95, 0.8, 0.65, 0.5, 0.35, 0.2],
        vec![0.5, 0.5, 0.5, 0.5],
        vec![1.0, 0.7, 0.7],
    ];
    for qs in cases {
        let pmf = phase_type_pmf(&qs, 20).unwrap();
        let brute = brute_force_convolution(&qs, 20);
        for n in 0..=20 {
            assert!(
                (pmf.get(n) - brute[n]).abs() < 1e-12,
                "qs = {qs:?}, n = {n}: {} vs {}",
                pmf.get(n),
                brute[n]
            );
        }
    }
}

#[test]
fn distinct_q_agrees_with_phase_type_on_separated_inputs() {
    let cases: Vec<Vec<f64>> = vec![
        vec![0.9, 0.5],
        vec![0.8, 0.6, 0.4],
        vec![0.95, 0.75, 0.55, 0.35, 0.15],
    ];
    for qs in cases {
        let pmf = phase_type_pmf(&qs, 12).unwrap();
        for n in 0..=12 {
            let d = distinct_q_pmf(&qs, n).unwrap();
            assert!(
                (d - pmf.get(n)).abs() < 1e-9,
                "qs = {qs:?}, n = {n}: {d} vs {}",
                pmf.get(n)
            );
        }
    }
}

#[test]
fn negative_binomial_poisson_limit_is_monotone() {
    // fix the mean at n and let the mode count grow; the pmf value at n
    // approaches the Poisson point mass from below, monotonically
    for n in 1..=3usize {
        let poisson = poisson_max_herald_prob(n);
        let mut last_gap = f64::INFINITY;
        for k in [1usize, 2, 5, 20, 100] {
            let q = k as f64 / (n + k) as f64;
            let p = negative_binomial_pmf(q, k, n).unwrap();
            let gap = (p - poisson).abs();
            assert!(gap < last_gap, "n = {n}, K = {k}: gap {gap} vs {last_gap}");
            last_gap = gap;
        }
    }
}

#[test]
fn schmidt_number_closed_form_over_mu_range() {
    // K = (1 + mu^2)/(1 - mu^2), with k_max scaled so truncation is moot
    let mut mu: f64 = 0.0;
    while mu <= 0.95 {
        let k_max = if mu < 0.05 {
            4
        } else {
            // keep the truncated weight below 1e-10 so normalization holds
            ((1e-10_f64.ln() / (2.0 * mu.ln())).ceil() as usize).max(35)
        };
        let lambdas = schmidt_coefficients(mu, k_max).unwrap();
        let k = schmidt_number(&lambdas).unwrap();
        let closed = (1.0 + mu * mu) / (1.0 - mu * mu);
        assert!((k - closed).abs() < 1e-9, "mu = {mu}: {k} vs {closed}");
        mu += 0.05;
    }
}

#[test]
fn lossy_vacuum_prob_matches_numerical_refit() {
    // thin a geometric distribution numerically, then read the vacuum
    // probability back off the thinned distribution
    let (q, eta) = (0.5, 0.5);
    let n = geometric_n_trunc(q, 1e-16).unwrap();
    let thinned = apply_binomial_loss(&geometric_pmf(q, n).unwrap(), eta).unwrap();
    let refit_q = thinned.get(0);
    assert!((refit_q - 2.0 / 3.0).abs() < 1e-12);
    assert!((lossy_thermal_vacuum_prob(q, eta).unwrap() - refit_q).abs() < 1e-12);
    // and the decay ratio matches 1 - q' wherever entries carry real mass
    let q_lossy = lossy_thermal_vacuum_prob(q, eta).unwrap();
    let mut m = 0;
    while thinned.get(m + 1) > 1e-8 {
        let ratio = thinned.get(m + 1) / thinned.get(m);
        assert!((ratio - (1.0 - q_lossy)).abs() < 1e-10, "m = {m}");
        m += 1;
    }
    assert!(m > 5, "ratio check covered too few entries");
}

#[test]
fn lossy_squeezing_linear_regions() {
    // small squeezing: slope sqrt(eta); large squeezing: slope 1
    let eta = 0.81;
    let r_small = lossy_squeezing(0.01, eta).unwrap();
    assert!((r_small - 0.009).abs() < 0.009 * 0.01, "{r_small}");
    let slope_large = (lossy_squeezing(6.0, eta).unwrap() - lossy_squeezing(5.0, eta).unwrap())
        / (6.0 - 5.0);
    assert!((slope_large - 1.0).abs() < 0.01, "{slope_large}");
}

#[test]
fn single_mode_herald_maximum_at_matched_vacuum_prob() {
    // with 1 - q = n/(n+1) the single-mode heralding probability reaches
    // n^n/(1+n)^(1+n); n = 2 gives 4/27
    let n = 2usize;
    let tanh_param = (2.0_f64 / 3.0).sqrt();
    let gain = tanh_param.atanh();
    let spec = ModeSpectrum::single_mode(gain).unwrap();
    let p = herald_probability(&spec, &LossModel::lossless(), n).unwrap();
    assert!((p - 4.0 / 27.0).abs() < 1e-12);
    assert!((p - single_mode_max_herald_prob(n)).abs() < 1e-12);
}

#[test]
fn herald_pmf_matches_joint_marginal_under_loss() {
    // an independent route: full joint table, idler column sums
    let spec = ModeSpectrum::new(0.9, 0.4834, 35).unwrap();
    let loss = LossModel::new(0.64, 0.59).unwrap();
    let joint = multimode_joint(&spec, &loss, 36).unwrap();
    let pmf = herald_pmf(&spec, &loss, 8).unwrap();
    for n in 0..=8 {
        let col: f64 = (0..=36).map(|s| joint.get(s, n)).sum();
        assert!(
            (col - pmf.get(n)).abs() < 1e-10,
            "n = {n}: {col} vs {}",
            pmf.get(n)
        );
    }
}

#[test]
fn equal_mode_fidelity_independent_of_gain_without_loss() {
    // for equal lossless modes the closed-form ceiling holds at any gain
    let loss = LossModel::lossless();
    for k in [2usize, 3] {
        for n in 1..=3usize {
            let expected = (1..k).map(|j| j as f64).product::<f64>()
                * (1..=n).map(|j| j as f64).product::<f64>()
                / (1..k + n).map(|j| j as f64).product::<f64>();
            for gain in [1e-3, 0.4, 1.1] {
                let spec = SpectrumTemplate::equal_modes(k)
                    .unwrap()
                    .at_gain(gain)
                    .unwrap();
                let f = fidelity_single_mode(&spec, &loss, n).unwrap();
                assert!(
                    (f - expected).abs() < 1e-9,
                    "K = {k}, n = {n}, B = {gain}: {f} vs {expected}"
                );
            }
        }
    }
}

#[test]
fn mean_detected_photons_matches_pmf_mean() {
    let spec = ModeSpectrum::new(1.3, 0.6, 60).unwrap();
    for eta in [0.3, 0.7, 1.0] {
        let loss = LossModel::new(1.0, eta).unwrap();
        let pmf = herald_pmf(&spec, &loss, 220).unwrap();
        let direct = mean_detected_photons(&spec, eta).unwrap();
        assert!(
            (pmf.mean() - direct).abs() < 1e-9,
            "eta = {eta}: {} vs {direct}",
            pmf.mean()
        );
    }
}

#[test]
fn poisson_limit_of_gain_maximization() {
    // many equal modes at the optimal gain approach e^-1 for one photon
    let template = SpectrumTemplate::equal_modes(100).unwrap();
    let (_, p) = max_herald_probability(&template, &LossModel::lossless(), 1).unwrap();
    let poisson = poisson_max_herald_prob(1);
    assert!((p - poisson).abs() / poisson < 0.01, "{p} vs {poisson}");
}
