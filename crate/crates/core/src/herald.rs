//! Joint signal/idler photon-number statistics under loss, heralding
//! probabilities, and heralded-state fidelities.
//!
//! Heralding means projecting the idler arm onto a detected photon number
//! `n`; the signal arm is then left in a photon-number-diagonal state whose
//! overlap with the target Fock state reduces to a probability ratio. Two
//! fidelity notions are provided: to `|n>` in the dominant Schmidt mode
//! ([`fidelity_single_mode`]) and to `n` photons irrespective of spectral
//! mode ([`fidelity_photon_number`]).

use serde::Serialize;

use crate::error::{check_range, Error, Result};
use crate::loss::{binomial_row, lossy_thermal_vacuum_prob, LossModel};
use crate::pmf::{phase_type_pmf, Pmf, TRUNCATION_EPS};
use crate::spectrum::ModeSpectrum;

/// Heralding probabilities below this floor leave conditional quantities
/// undefined.
pub const MIN_HERALD_PROB: f64 = 1e-300;

/// Per-mode weight below which a mode is treated as an exact vacuum
/// contributor (its generation probability is under f64 resolution).
const VACUUM_MODE_EPS: f64 = 1e-14;

/// Relative weight kept when truncating the generated-pair-number sum.
const GENERATION_TAIL_EPS: f64 = 1e-16;

/// Truncated joint photon-number table of one mode (or a convolved set of
/// modes) after loss, indexed `(n_signal, n_idler)`.
#[derive(Debug, Clone, Serialize)]
pub struct JointPmf {
    table: Vec<f64>,
    n_trunc: usize,
    tail_mass: f64,
}

impl JointPmf {
    pub fn n_trunc(&self) -> usize {
        self.n_trunc
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `P(n_signal = ns, n_idler = ni)`; zero beyond the truncation.
    pub fn get(&self, n_signal: usize, n_idler: usize) -> f64 {
        if n_signal > self.n_trunc || n_idler > self.n_trunc {
            0.0
        } else {
            self.table[n_signal * (self.n_trunc + 1) + n_idler]
        }
    }

    pub fn total(&self) -> f64 {
        self.table.iter().sum()
    }

    /// Marginal distribution of the detected signal photon number.
    pub fn signal_marginal(&self) -> Pmf {
        let w = self.n_trunc + 1;
        let probs: Vec<f64> = (0..w)
            .map(|s| self.table[s * w..(s + 1) * w].iter().sum())
            .collect();
        let tail = (1.0 - probs.iter().sum::<f64>()).max(0.0);
        Pmf::new(probs, tail)
    }

    /// Marginal distribution of the detected idler photon number.
    pub fn idler_marginal(&self) -> Pmf {
        let w = self.n_trunc + 1;
        let probs: Vec<f64> = (0..w)
            .map(|i| (0..w).map(|s| self.table[s * w + i]).sum())
            .collect();
        let tail = (1.0 - probs.iter().sum::<f64>()).max(0.0);
        Pmf::new(probs, tail)
    }
}

/// Number of generated-pair terms needed so the neglected geometric weight
/// stays below `GENERATION_TAIL_EPS`.
fn generation_m_max(tanh_param: f64, at_least: usize) -> usize {
    let t = tanh_param * tanh_param;
    if t <= 0.0 {
        return at_least;
    }
    let m = (GENERATION_TAIL_EPS.ln() / t.ln()).ceil() as usize;
    m.max(at_least)
}

/// Rectangular prefix of one mode's lossy joint table: rows are detected
/// signal numbers `0..=s_max`, columns detected idler numbers `0..=i_max`.
/// Entries are exact up to the neglected generation tail.
fn joint_prefix(tanh_param: f64, loss: &LossModel, s_max: usize, i_max: usize) -> Vec<f64> {
    let rows = s_max + 1;
    let cols = i_max + 1;
    let mut table = vec![0.0; rows * cols];
    let t = tanh_param * tanh_param;
    if t <= 0.0 {
        table[0] = 1.0;
        return table;
    }
    let m_max = generation_m_max(tanh_param, s_max.max(i_max));
    let mut weight = 1.0 - t;
    for m in 0..=m_max {
        let row_s = binomial_row(m, loss.eta_signal(), s_max);
        let row_i = binomial_row(m, loss.eta_idler(), i_max);
        for (s, &bs) in row_s.iter().enumerate() {
            if bs == 0.0 {
                continue;
            }
            let base = s * cols;
            let ws = weight * bs;
            for (i, &bi) in row_i.iter().enumerate() {
                table[base + i] += ws * bi;
            }
        }
        weight *= t;
    }
    table
}

/// Prefix-exact 2-D convolution of two joint tables truncated to
/// `(s_max, i_max)`.
fn convolve2d(
    a: &[f64],
    b: &[f64],
    s_max: usize,
    i_max: usize,
) -> Vec<f64> {
    let cols = i_max + 1;
    let mut out = vec![0.0; (s_max + 1) * cols];
    for sa in 0..=s_max {
        for ia in 0..=i_max {
            let av = a[sa * cols + ia];
            if av == 0.0 {
                continue;
            }
            for sb in 0..=(s_max - sa) {
                let base = (sa + sb) * cols + ia;
                let brow = sb * cols;
                for ib in 0..=(i_max - ia) {
                    out[base + ib] += av * b[brow + ib];
                }
            }
        }
    }
    out
}

/// Lossy joint photon-number table of a single two-mode squeezer with
/// `tanh` parameter `tanh_param`, truncated at `n_trunc` in both arms.
///
/// `p(n_s, n_i) = sum_m (1-L^2) L^(2m) Bin(n_s | m, eta_s) Bin(n_i | m, eta_i)`.
///
/// Errors if the truncation leaves a tail of `TRUNCATION_EPS` or more,
/// suggesting a sufficient `n_trunc`.
pub fn joint_lossy_pmf(tanh_param: f64, loss: &LossModel, n_trunc: usize) -> Result<JointPmf> {
    if !tanh_param.is_finite() || !(0.0..1.0).contains(&tanh_param) {
        return Err(Error::Domain {
            name: "tanh_param",
            value: tanh_param,
            constraint: "in [0, 1)",
        });
    }
    let table = joint_prefix(tanh_param, loss, n_trunc, n_trunc);
    let total: f64 = table.iter().sum();
    let tail = (1.0 - total).max(0.0);
    if tail >= TRUNCATION_EPS {
        let t = tanh_param * tanh_param;
        let suggested = if t > 0.0 {
            ((TRUNCATION_EPS / 2.0).ln() / t.ln()).ceil() as usize
        } else {
            n_trunc
        };
        return Err(Error::Truncation {
            n_trunc,
            tail,
            budget: TRUNCATION_EPS,
            suggested: suggested.max(n_trunc + 1),
        });
    }
    Ok(JointPmf {
        table,
        n_trunc,
        tail_mass: tail,
    })
}

/// Modes that actually contribute at f64 resolution.
fn active_modes(spec: &ModeSpectrum) -> impl Iterator<Item = f64> + '_ {
    spec.tanh_params()
        .iter()
        .copied()
        .filter(|t| t * t >= VACUUM_MODE_EPS)
}

/// Joint table of the full multimode state after loss: the 2-D convolution
/// of all per-mode tables, truncated at `n_trunc` per arm (entries exact up
/// to the generation tail).
pub fn multimode_joint(spec: &ModeSpectrum, loss: &LossModel, n_trunc: usize) -> Result<JointPmf> {
    let cols = n_trunc + 1;
    let mut acc = vec![0.0; cols * cols];
    acc[0] = 1.0;
    for tanh_param in active_modes(spec) {
        let mode = joint_prefix(tanh_param, loss, n_trunc, n_trunc);
        acc = convolve2d(&acc, &mode, n_trunc, n_trunc);
    }
    let total: f64 = acc.iter().sum();
    Ok(JointPmf {
        table: acc,
        n_trunc,
        tail_mass: (1.0 - total).max(0.0),
    })
}

/// Vacuum probabilities of the detected idler marginal, per mode.
fn detected_idler_vacuum_probs(spec: &ModeSpectrum, loss: &LossModel) -> Result<Vec<f64>> {
    spec.vacuum_probs()
        .iter()
        .map(|&q| lossy_thermal_vacuum_prob(q, loss.eta_idler()))
        .collect()
}

/// Distribution of the total detected idler photon number. The idler
/// marginal of each mode is thermal and stays thermal under loss, so this
/// is the phase-type convolution over the lossy vacuum probabilities;
/// signal-arm loss plays no role.
pub fn herald_pmf(spec: &ModeSpectrum, loss: &LossModel, n_max: usize) -> Result<Pmf> {
    let q = detected_idler_vacuum_probs(spec, loss)?;
    phase_type_pmf(&q, n_max)
}

/// Probability of heralding on `n` detected idler photons.
pub fn herald_probability(spec: &ModeSpectrum, loss: &LossModel, n: usize) -> Result<f64> {
    Ok(herald_pmf(spec, loss, n)?.get(n))
}

/// Convolved `signal = 0` row over all modes above the first: entry `i` is
/// the probability that modes `k >= 2` contribute zero detected signal
/// photons and `i` detected idler photons in total.
fn secondary_modes_vacuum_signal_row(
    spec: &ModeSpectrum,
    loss: &LossModel,
    i_max: usize,
) -> Vec<f64> {
    let mut acc = vec![0.0; i_max + 1];
    acc[0] = 1.0;
    for tanh_param in spec.tanh_params().iter().copied().skip(1) {
        if tanh_param * tanh_param < VACUUM_MODE_EPS {
            continue;
        }
        let row = joint_prefix(tanh_param, loss, 0, i_max);
        acc = crate::pmf::convolve(&acc, &row, i_max);
    }
    acc
}

/// Fidelity of the heralded state to the Fock state `|n>` in the dominant
/// Schmidt mode:
///
/// `F = (1/p_n) sum_{i=0..n} p_{k=1}(n, n-i) p_{k>1}(0, i)`,
///
/// with all probabilities taken after loss. Undefined (error) when the
/// heralding probability is below [`MIN_HERALD_PROB`].
pub fn fidelity_single_mode(spec: &ModeSpectrum, loss: &LossModel, n: usize) -> Result<f64> {
    let p_n = herald_probability(spec, loss, n)?;
    if p_n < MIN_HERALD_PROB {
        return Err(Error::UndefinedFidelity {
            herald_prob: p_n,
            floor: MIN_HERALD_PROB,
        });
    }
    let dominant = joint_prefix(spec.tanh_params()[0], loss, n, n);
    let rest = secondary_modes_vacuum_signal_row(spec, loss, n);
    let cols = n + 1;
    let mut numerator = 0.0;
    for i in 0..=n {
        numerator += dominant[n * cols + (n - i)] * rest[i];
    }
    Ok((numerator / p_n).min(1.0))
}

/// Mode-blind fidelity: the probability that the total detected signal
/// photon number equals `n`, conditioned on heralding `n`. Never below
/// [`fidelity_single_mode`].
pub fn fidelity_photon_number(spec: &ModeSpectrum, loss: &LossModel, n: usize) -> Result<f64> {
    let p_n = herald_probability(spec, loss, n)?;
    if p_n < MIN_HERALD_PROB {
        return Err(Error::UndefinedFidelity {
            herald_prob: p_n,
            floor: MIN_HERALD_PROB,
        });
    }
    let cols = n + 1;
    let mut acc = vec![0.0; cols * cols];
    acc[0] = 1.0;
    for tanh_param in active_modes(spec) {
        let mode = joint_prefix(tanh_param, loss, n, n);
        acc = convolve2d(&acc, &mode, n, n);
    }
    Ok((acc[n * cols + n] / p_n).min(1.0))
}

/// Both fidelities for every target `n = 0..=n_max`, sharing the per-mode
/// tables and convolutions across targets. Entries are `None` where the
/// heralding probability is below [`MIN_HERALD_PROB`].
///
/// Equivalent to calling [`fidelity_single_mode`] and
/// [`fidelity_photon_number`] per `n`, at a fraction of the cost.
pub fn fidelity_profiles(
    spec: &ModeSpectrum,
    loss: &LossModel,
    n_max: usize,
) -> Result<(Vec<Option<f64>>, Vec<Option<f64>>)> {
    let herald = herald_pmf(spec, loss, n_max)?;
    let cols = n_max + 1;
    let dominant = joint_prefix(spec.tanh_params()[0], loss, n_max, n_max);
    let rest = secondary_modes_vacuum_signal_row(spec, loss, n_max);
    let mut full = vec![0.0; cols * cols];
    full[0] = 1.0;
    for tanh_param in active_modes(spec) {
        let mode = joint_prefix(tanh_param, loss, n_max, n_max);
        full = convolve2d(&full, &mode, n_max, n_max);
    }
    let mut single = Vec::with_capacity(cols);
    let mut total = Vec::with_capacity(cols);
    for n in 0..=n_max {
        let p_n = herald.get(n);
        if p_n < MIN_HERALD_PROB {
            single.push(None);
            total.push(None);
            continue;
        }
        let mut numerator = 0.0;
        for i in 0..=n {
            numerator += dominant[n * cols + (n - i)] * rest[i];
        }
        single.push(Some((numerator / p_n).min(1.0)));
        total.push(Some((full[n * cols + n] / p_n).min(1.0)));
    }
    Ok((single, total))
}

/// Mean detected photon number in one arm with transmission `eta`:
/// `eta * sum_k sinh^2(r_k)`.
pub fn mean_detected_photons(spec: &ModeSpectrum, eta: f64) -> Result<f64> {
    let eta = check_range("eta", eta, 0.0, 1.0, "in [0, 1]")?;
    Ok(eta * spec.mean_photons_generated())
}

/// Summary of the heralded state for one target photon number.
#[derive(Debug, Clone, Serialize)]
pub struct HeraldReport {
    pub target_n: usize,
    pub herald_prob: f64,
    pub fidelity_single_mode: f64,
    pub fidelity_photon_number: f64,
    pub mean_idler_detected: f64,
    pub mean_signal_detected: f64,
}

/// Evaluates probability, both fidelities, and detected means at once.
pub fn herald_report(spec: &ModeSpectrum, loss: &LossModel, n: usize) -> Result<HeraldReport> {
    Ok(HeraldReport {
        target_n: n,
        herald_prob: herald_probability(spec, loss, n)?,
        fidelity_single_mode: fidelity_single_mode(spec, loss, n)?,
        fidelity_photon_number: fidelity_photon_number(spec, loss, n)?,
        mean_idler_detected: mean_detected_photons(spec, loss.eta_idler())?,
        mean_signal_detected: mean_detected_photons(spec, loss.eta_signal())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::geometric_pmf;
    use crate::spectrum::SpectrumTemplate;

    #[test]
    fn vacuum_input_gives_vacuum_table() {
        let loss = LossModel::new(0.6, 0.7).unwrap();
        let j = joint_lossy_pmf(0.0, &loss, 4).unwrap();
        assert_eq!(j.get(0, 0), 1.0);
        assert_eq!(j.total(), 1.0);
    }

    #[test]
    fn lossless_table_is_diagonal() {
        let j = joint_lossy_pmf(0.5, &LossModel::lossless(), 20).unwrap();
        for ns in 0..=20 {
            for ni in 0..=20 {
                if ns == ni {
                    let expected = 0.75 * 0.25_f64.powi(ns as i32);
                    assert!((j.get(ns, ni) - expected).abs() < 1e-15);
                } else {
                    assert_eq!(j.get(ns, ni), 0.0);
                }
            }
        }
    }

    #[test]
    fn idler_marginal_is_lossy_thermal() {
        let loss = LossModel::new(1.0, 0.5).unwrap();
        let j = joint_lossy_pmf(0.5, &loss, 40).unwrap();
        let marginal = j.idler_marginal();
        let q_lossy = lossy_thermal_vacuum_prob(0.75, 0.5).unwrap();
        let expected = geometric_pmf(q_lossy, 40).unwrap();
        for n in 0..=35 {
            assert!(
                (marginal.get(n) - expected.get(n)).abs() < 1e-13,
                "n = {n}"
            );
        }
    }

    #[test]
    fn truncation_error_carries_suggestion() {
        let loss = LossModel::lossless();
        let err = joint_lossy_pmf(0.9, &loss, 3).unwrap_err();
        match err {
            Error::Truncation { suggested, .. } => {
                assert!(joint_lossy_pmf(0.9, &loss, suggested).is_ok());
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn herald_probability_independent_of_signal_loss() {
        let spec = ModeSpectrum::new(1.1, 0.45, 35).unwrap();
        for n in 0..6 {
            let a = herald_probability(&spec, &LossModel::new(1.0, 0.7).unwrap(), n).unwrap();
            let b = herald_probability(&spec, &LossModel::new(0.2, 0.7).unwrap(), n).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn no_pump_heralds_vacuum() {
        let spec = ModeSpectrum::new(0.0, 0.5, 35).unwrap();
        let loss = LossModel::new(0.9, 0.9).unwrap();
        assert_eq!(herald_probability(&spec, &loss, 0).unwrap(), 1.0);
        assert_eq!(herald_probability(&spec, &loss, 1).unwrap(), 0.0);
    }

    #[test]
    fn single_mode_lossless_fidelity_is_unity() {
        let loss = LossModel::lossless();
        for b in [0.3, 0.9, 1.7] {
            let spec = ModeSpectrum::single_mode(b).unwrap();
            for n in 0..=8 {
                let f = fidelity_single_mode(&spec, &loss, n).unwrap();
                assert!((f - 1.0).abs() < 1e-12, "B = {b}, n = {n}: F = {f}");
                let f2 = fidelity_photon_number(&spec, &loss, n).unwrap();
                assert!((f2 - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fidelity_approaches_unity_at_low_gain() {
        // idler loss only: F -> 1 as the generation probability vanishes
        let loss = LossModel::new(1.0, 0.5).unwrap();
        let f_small = fidelity_single_mode(&ModeSpectrum::single_mode(1e-4).unwrap(), &loss, 1)
            .unwrap();
        let f_large = fidelity_single_mode(&ModeSpectrum::single_mode(1.0).unwrap(), &loss, 1)
            .unwrap();
        assert!(f_small > 0.999_999);
        assert!(f_large < f_small);
    }

    #[test]
    fn equal_mode_lossless_fidelity_matches_closed_form() {
        // K equal modes, no loss: F = (K-1)! n! / (K+n-1)!
        let loss = LossModel::lossless();
        for (k, n, expected) in [(2usize, 1usize, 0.5), (2, 2, 1.0 / 3.0), (3, 2, 1.0 / 6.0)] {
            let spec = SpectrumTemplate::equal_modes(k)
                .unwrap()
                .at_gain(0.2)
                .unwrap();
            let f = fidelity_single_mode(&spec, &loss, n).unwrap();
            assert!((f - expected).abs() < 1e-10, "K={k} n={n}: {f}");
        }
    }

    #[test]
    fn photon_number_fidelity_dominates_single_mode() {
        let spec = ModeSpectrum::new(0.9, 0.48, 35).unwrap();
        let loss = LossModel::new(0.64, 0.59).unwrap();
        for n in 1..=4 {
            let f1 = fidelity_single_mode(&spec, &loss, n).unwrap();
            let f2 = fidelity_photon_number(&spec, &loss, n).unwrap();
            assert!(f2 >= f1 - 1e-14, "n = {n}: {f2} < {f1}");
        }
    }

    #[test]
    fn undefined_fidelity_below_floor() {
        let spec = ModeSpectrum::single_mode(0.0).unwrap();
        let err = fidelity_single_mode(&spec, &LossModel::lossless(), 2).unwrap_err();
        assert!(matches!(err, Error::UndefinedFidelity { .. }));
    }

    #[test]
    fn mean_detected_matches_marginal_mean() {
        let spec = ModeSpectrum::single_mode(1.0).unwrap();
        let mean = mean_detected_photons(&spec, 1.0).unwrap();
        assert!((mean - 1.0_f64.sinh().powi(2)).abs() < 1e-12);

        let spec = ModeSpectrum::new(0.8, 0.5, 35).unwrap();
        let loss = LossModel::new(1.0, 0.7).unwrap();
        let pmf = herald_pmf(&spec, &loss, 80).unwrap();
        let direct = mean_detected_photons(&spec, 0.7).unwrap();
        assert!((pmf.mean() - direct).abs() < 1e-9);
    }

    #[test]
    fn fidelity_profiles_match_scalar_operations() {
        let spec = ModeSpectrum::new(1.0, 0.48, 25).unwrap();
        let loss = LossModel::new(0.64, 0.59).unwrap();
        let (single, total) = fidelity_profiles(&spec, &loss, 4).unwrap();
        for n in 0..=4 {
            let f1 = fidelity_single_mode(&spec, &loss, n).unwrap();
            let f2 = fidelity_photon_number(&spec, &loss, n).unwrap();
            assert!((single[n].unwrap() - f1).abs() < 1e-14, "n = {n}");
            assert!((total[n].unwrap() - f2).abs() < 1e-14, "n = {n}");
        }
        let vac = ModeSpectrum::single_mode(0.0).unwrap();
        let (single, _) = fidelity_profiles(&vac, &loss, 2).unwrap();
        assert!(single[1].is_none());
    }

    #[test]
    fn multimode_joint_consistent_with_phase_type() {
        // summing the joint table over signal reproduces the herald pmf
        let spec = ModeSpectrum::new(0.7, 0.5, 35).unwrap();
        let loss = LossModel::new(0.8, 0.6).unwrap();
        let n_trunc = 30;
        let joint = multimode_joint(&spec, &loss, n_trunc).unwrap();
        let herald = herald_pmf(&spec, &loss, 10).unwrap();
        for n in 0..=10 {
            let col: f64 = (0..=n_trunc).map(|s| joint.get(s, n)).sum();
            assert!(
                (col - herald.get(n)).abs() < 1e-10,
                "n = {n}: {col} vs {}",
                herald.get(n)
            );
        }
        assert!((joint.total() + joint.tail_mass() - 1.0).abs() < 1e-10);
    }
}
