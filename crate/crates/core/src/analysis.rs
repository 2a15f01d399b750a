//! Parameter sweeps, gain optimization, the probability/fidelity trade-off,
//! and experimental feasibility limits.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::herald::{
    fidelity_profiles, fidelity_single_mode, herald_pmf, herald_probability,
    mean_detected_photons,
};
use crate::loss::LossModel;
use crate::optim::{bisect_root, golden_section_max};
use crate::spectrum::SpectrumTemplate;

/// Gain-maximization evaluates the heralding probability on this many grid
/// points before refining the bracket around the best one.
const GAIN_GRID_POINTS: usize = 64;

/// Tabulated heralding probabilities and fidelities over a gain grid.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub gains: Vec<f64>,
    pub n_list: Vec<usize>,
    /// `herald_prob[g][j]` is `p_n` at `gains[g]`, `n_list[j]`.
    pub herald_prob: Vec<Vec<f64>>,
    /// Fidelity to the dominant-mode Fock state; NaN where the heralding
    /// probability is below the representable floor.
    pub fidelity_single_mode: Vec<Vec<f64>>,
    /// Mode-blind photon-number fidelity; NaN as above.
    pub fidelity_photon_number: Vec<Vec<f64>>,
    pub mean_idler_detected: Vec<f64>,
    pub mean_signal_detected: Vec<f64>,
}

/// Evaluates heralding probability and both fidelities at every
/// `(gain, n)` pair. Gains must be strictly increasing.
pub fn sweep_gain(
    template: &SpectrumTemplate,
    loss: &LossModel,
    gains: &[f64],
    n_list: &[usize],
) -> Result<SweepResult> {
    if gains.is_empty() {
        return Err(Error::InvalidInput("sweep_gain: empty gain grid".into()));
    }
    if n_list.is_empty() {
        return Err(Error::InvalidInput(
            "sweep_gain: empty photon-number list".into(),
        ));
    }
    for w in gains.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidInput(
                "sweep_gain: gains must be strictly increasing".into(),
            ));
        }
    }

    struct Row {
        p: Vec<f64>,
        f1: Vec<f64>,
        f2: Vec<f64>,
        mean_i: f64,
        mean_s: f64,
    }

    let n_top = *n_list.iter().max().unwrap();
    let rows: Result<Vec<Row>> = gains
        .par_iter()
        .map(|&b| {
            let spec = template.at_gain(b)?;
            let pmf = herald_pmf(&spec, loss, n_top)?;
            let (single, total) = fidelity_profiles(&spec, loss, n_top)?;
            let p: Vec<f64> = n_list.iter().map(|&n| pmf.get(n)).collect();
            let f1: Vec<f64> = n_list
                .iter()
                .map(|&n| single[n].unwrap_or(f64::NAN))
                .collect();
            let f2: Vec<f64> = n_list
                .iter()
                .map(|&n| total[n].unwrap_or(f64::NAN))
                .collect();
            Ok(Row {
                p,
                f1,
                f2,
                mean_i: mean_detected_photons(&spec, loss.eta_idler())?,
                mean_s: mean_detected_photons(&spec, loss.eta_signal())?,
            })
        })
        .collect();
    let rows = rows?;

    Ok(SweepResult {
        gains: gains.to_vec(),
        n_list: n_list.to_vec(),
        herald_prob: rows.iter().map(|r| r.p.clone()).collect(),
        fidelity_single_mode: rows.iter().map(|r| r.f1.clone()).collect(),
        fidelity_photon_number: rows.iter().map(|r| r.f2.clone()).collect(),
        mean_idler_detected: rows.iter().map(|r| r.mean_i).collect(),
        mean_signal_detected: rows.iter().map(|r| r.mean_s).collect(),
    })
}

/// Gain at which the detected idler mean reaches `target_mean`.
pub(crate) fn gain_for_detected_mean(
    template: &SpectrumTemplate,
    eta_idler: f64,
    target_mean: f64,
) -> Result<f64> {
    if target_mean <= 0.0 {
        return Ok(0.0);
    }
    let mean = |b: f64| -> f64 {
        eta_idler
            * template
                .lambdas()
                .iter()
                .map(|l| (b * l).sinh().powi(2))
                .sum::<f64>()
    };
    let mut hi = 1.0;
    let mut doublings = 0;
    while mean(hi) < target_mean {
        hi *= 2.0;
        doublings += 1;
        if doublings > 40 {
            return Err(Error::NoConvergence {
                context: "gain_for_detected_mean: bracket expansion".into(),
                iterations: doublings,
                lo: 0.0,
                hi,
            });
        }
    }
    bisect_root(
        |b| mean(b) - target_mean,
        0.0,
        hi,
        1e-13 * hi.max(1.0),
        200,
        "gain_for_detected_mean",
    )
}

/// Maximizes the heralding probability for `n` photons over the optical
/// gain. Returns `(gain, probability)`.
///
/// The search brackets the peak on a grid over `(0, B_hi]`, where `B_hi`
/// puts the detected idler mean at `4 n`, then refines by golden-section.
/// The grid scan doubles as a unimodality check; if several local maxima
/// appear, the refinement still brackets the global grid maximum.
pub fn max_herald_probability(
    template: &SpectrumTemplate,
    loss: &LossModel,
    n: usize,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::Domain {
            name: "n",
            value: 0.0,
            constraint: ">= 1",
        });
    }
    if loss.eta_idler() <= 0.0 {
        return Err(Error::Domain {
            name: "eta_idler",
            value: loss.eta_idler(),
            constraint: "> 0 for gain optimization",
        });
    }
    let b_hi = gain_for_detected_mean(template, loss.eta_idler(), 4.0 * n as f64)?;
    let p_at = |b: f64| -> f64 {
        template
            .at_gain(b)
            .and_then(|spec| herald_probability(&spec, loss, n))
            .unwrap_or(0.0)
    };

    let grid: Vec<f64> = (1..=GAIN_GRID_POINTS)
        .map(|j| b_hi * j as f64 / GAIN_GRID_POINTS as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&b| p_at(b)).collect();
    let best = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();

    let lo = if best == 0 { b_hi * 1e-9 } else { grid[best - 1] };
    let hi = if best + 1 < grid.len() {
        grid[best + 1]
    } else {
        b_hi
    };
    let (b_star, p_star) = golden_section_max(p_at, lo, hi, 1e-10 * b_hi.max(1.0), 300);
    if p_star >= values[best] {
        Ok((b_star, p_star))
    } else {
        Ok((grid[best], values[best]))
    }
}

/// Largest single-mode-target fidelity achievable on the low-gain branch
/// while heralding at probability at least `p_target`.
pub fn max_fidelity_at_probability(
    template: &SpectrumTemplate,
    loss: &LossModel,
    n: usize,
    p_target: f64,
) -> Result<f64> {
    if !(p_target.is_finite() && p_target > 0.0) {
        return Err(Error::Domain {
            name: "p_target",
            value: p_target,
            constraint: "> 0",
        });
    }
    let (b_star, p_star) = max_herald_probability(template, loss, n)?;
    if p_target > p_star {
        return Err(Error::Unachievable {
            target: p_target,
            max: p_star,
        });
    }
    let p_at = |b: f64| -> f64 {
        template
            .at_gain(b)
            .and_then(|spec| herald_probability(&spec, loss, n))
            .unwrap_or(0.0)
    };
    // smallest gain reaching p_target on the rising branch
    let b_lo = b_star * 1e-12;
    let b_entry = if p_at(b_lo) >= p_target {
        b_lo
    } else {
        bisect_root(
            |b| p_at(b) - p_target,
            b_lo,
            b_star,
            1e-12 * b_star,
            200,
            "max_fidelity_at_probability",
        )?
    };
    let fid = |b: f64| -> f64 {
        template
            .at_gain(b)
            .and_then(|spec| fidelity_single_mode(&spec, loss, n))
            .unwrap_or(f64::NAN)
    };
    // fidelity is usually monotone decreasing in gain, but signal loss can
    // bend the curve; scan the feasible stretch instead of assuming
    let (_, f_inner) = golden_section_max(fid, b_entry, b_star, 1e-10 * b_star.max(1.0), 200);
    let best = fid(b_entry).max(f_inner).max(fid(b_star));
    if best.is_nan() {
        return Err(Error::UndefinedFidelity {
            herald_prob: p_target,
            floor: crate::herald::MIN_HERALD_PROB,
        });
    }
    Ok(best)
}

/// Feasibility of heralding each Fock state at a quality floor.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityEntry {
    pub n: usize,
    /// Gain maximizing the constrained generation rate.
    pub optimal_gain: f64,
    /// Source n-pair generation probability at that gain.
    pub generation_prob: f64,
    /// Single-mode fidelity (with idler loss) at that gain.
    pub fidelity: f64,
    /// Generation rate in events per second.
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub rep_rate: f64,
    pub eta_idler: f64,
    pub target_fidelity: f64,
    pub rate_floor: f64,
    pub per_n: Vec<FeasibilityEntry>,
    /// Largest `n` whose rate reaches the floor; `None` if none does.
    pub max_feasible_n: Option<usize>,
}

/// Generation-rate limits for a single-mode source with lossless signal arm.
///
/// For each `n` in `n_range` the gain is chosen to maximize the n-pair
/// generation rate `rep_rate * p_n` subject to the heralded-state fidelity
/// (which carries the idler loss `eta_idler`) staying at or above
/// `fidelity_floor`. `max_feasible_n` is the largest `n` whose constrained
/// rate still reaches `rate_floor`.
pub fn feasibility(
    rep_rate: f64,
    eta_idler: f64,
    fidelity_floor: f64,
    rate_floor: f64,
    n_range: std::ops::RangeInclusive<usize>,
) -> Result<FeasibilityReport> {
    if !(rep_rate.is_finite() && rep_rate > 0.0) {
        return Err(Error::Domain {
            name: "rep_rate",
            value: rep_rate,
            constraint: "> 0",
        });
    }
    if !(eta_idler > 0.0 && eta_idler <= 1.0) {
        return Err(Error::Domain {
            name: "eta_idler",
            value: eta_idler,
            constraint: "in (0, 1]",
        });
    }
    if !(0.0..=1.0).contains(&fidelity_floor) {
        return Err(Error::Domain {
            name: "fidelity_floor",
            value: fidelity_floor,
            constraint: "in [0, 1]",
        });
    }
    if !(rate_floor.is_finite() && rate_floor >= 0.0) {
        return Err(Error::Domain {
            name: "rate_floor",
            value: rate_floor,
            constraint: ">= 0",
        });
    }
    let (n_lo, n_hi) = (*n_range.start(), *n_range.end());
    if n_lo < 1 || n_hi < n_lo {
        return Err(Error::InvalidInput(
            "feasibility: n range must start at 1 or above and be non-empty".into(),
        ));
    }

    let template = SpectrumTemplate::single_mode();
    let lossless = LossModel::lossless();
    let herald_loss = LossModel::new(1.0, eta_idler)?;

    let entries: Result<Vec<FeasibilityEntry>> = (n_lo..=n_hi)
        .into_par_iter()
        .map(|n| {
            // unconstrained generation optimum
            let (b_star, _) = max_herald_probability(&template, &lossless, n)?;
            let fid = |b: f64| -> f64 {
                template
                    .at_gain(b)
                    .and_then(|spec| fidelity_single_mode(&spec, &herald_loss, n))
                    .unwrap_or(1.0)
            };
            let f_star = fid(b_star);
            let (gain, fidelity) = if f_star >= fidelity_floor {
                (b_star, f_star)
            } else {
                // fidelity decreases with gain; back off to the floor
                let b = bisect_root(
                    |b| fid(b) - fidelity_floor,
                    b_star * 1e-12,
                    b_star,
                    1e-13 * b_star,
                    200,
                    "feasibility fidelity constraint",
                )?;
                (b, fid(b))
            };
            let spec = template.at_gain(gain)?;
            let p = herald_probability(&spec, &lossless, n)?;
            Ok(FeasibilityEntry {
                n,
                optimal_gain: gain,
                generation_prob: p,
                fidelity,
                rate: rep_rate * p,
            })
        })
        .collect();
    let per_n = entries?;
    let max_feasible_n = per_n
        .iter()
        .filter(|e| e.rate >= rate_floor)
        .map(|e| e.n)
        .max();

    Ok(FeasibilityReport {
        rep_rate,
        eta_idler,
        target_fidelity: fidelity_floor,
        rate_floor,
        per_n,
        max_feasible_n,
    })
}

/// Maximal single-mode heralding probability for `n` photons:
/// `n^n / (1+n)^(1+n)`.
pub fn single_mode_max_herald_prob(n: usize) -> f64 {
    let nf = n as f64;
    if n == 0 {
        return 1.0;
    }
    (nf.ln() * nf - (1.0 + nf).ln() * (1.0 + nf)).exp()
}

/// Infinite-mode (Poissonian) limit of the maximal heralding probability:
/// `e^-n n^n / n!`.
pub fn poisson_max_herald_prob(n: usize) -> f64 {
    let nf = n as f64;
    if n == 0 {
        return 1.0;
    }
    (-nf + nf * nf.ln() - statrs::function::gamma::ln_gamma(nf + 1.0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_maximum_matches_closed_form() {
        let template = SpectrumTemplate::single_mode();
        for n in 1..=5 {
            let expected = single_mode_max_herald_prob(n);
            for eta in [0.5, 1.0] {
                let loss = LossModel::new(1.0, eta).unwrap();
                let (_, p) = max_herald_probability(&template, &loss, n).unwrap();
                assert!(
                    (p - expected).abs() < 1e-8,
                    "n = {n}, eta = {eta}: {p} vs {expected}"
                );
            }
        }
        assert!((single_mode_max_herald_prob(1) - 0.25).abs() < 1e-15);
        assert!((single_mode_max_herald_prob(5) - 3125.0 / 46656.0).abs() < 1e-15);
    }

    #[test]
    fn trade_off_endpoint_unique() {
        let template = SpectrumTemplate::single_mode();
        let loss = LossModel::new(1.0, 0.5).unwrap();
        // at the endpoint the fidelity is below one
        let (_, p_star) = max_herald_probability(&template, &loss, 2).unwrap();
        let f = max_fidelity_at_probability(&template, &loss, 2, p_star).unwrap();
        assert!(f < 1.0);
        // demanding more is an error
        let err = max_fidelity_at_probability(&template, &loss, 2, p_star * 1.01).unwrap_err();
        assert!(matches!(err, Error::Unachievable { .. }));
    }

    #[test]
    fn lossless_heralding_keeps_unit_fidelity() {
        let template = SpectrumTemplate::single_mode();
        let loss = LossModel::lossless();
        let (_, p_star) = max_herald_probability(&template, &loss, 3).unwrap();
        for frac in [0.2, 0.6, 1.0] {
            let f = max_fidelity_at_probability(&template, &loss, 3, frac * p_star).unwrap();
            assert!((f - 1.0).abs() < 1e-9, "frac = {frac}: {f}");
        }
    }

    #[test]
    fn fidelity_tradeoff_monotone_in_idler_loss() {
        let template = SpectrumTemplate::single_mode();
        let p_target = 0.01;
        let f_50 =
            max_fidelity_at_probability(&template, &LossModel::new(1.0, 0.5).unwrap(), 5, p_target)
                .unwrap();
        let f_90 =
            max_fidelity_at_probability(&template, &LossModel::new(1.0, 0.9).unwrap(), 5, p_target)
                .unwrap();
        assert!(f_50 < f_90, "{f_50} vs {f_90}");
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let template = SpectrumTemplate::single_mode();
        let loss = LossModel::lossless();
        assert!(sweep_gain(&template, &loss, &[], &[1]).is_err());
        assert!(sweep_gain(&template, &loss, &[0.2, 0.1], &[1]).is_err());
        assert!(sweep_gain(&template, &loss, &[0.1], &[]).is_err());
    }

    #[test]
    fn sweep_at_zero_gain() {
        let template = SpectrumTemplate::single_mode();
        let loss = LossModel::lossless();
        let sweep = sweep_gain(&template, &loss, &[0.0], &[0, 1, 2]).unwrap();
        assert_eq!(sweep.herald_prob[0], vec![1.0, 0.0, 0.0]);
        assert!(sweep.fidelity_single_mode[0][1].is_nan());
        assert_eq!(sweep.mean_idler_detected[0], 0.0);
    }

    #[test]
    fn more_modes_raise_the_maximum() {
        let loss = LossModel::new(1.0, 0.9).unwrap();
        let mut last = 0.0;
        for k in [1.0, 1.5, 2.0] {
            let template = if k == 1.0 {
                SpectrumTemplate::single_mode()
            } else {
                let mu = crate::spectrum::mu_from_schmidt_number(k).unwrap();
                SpectrumTemplate::from_mode_decay(mu, 35).unwrap()
            };
            let (_, p) = max_herald_probability(&template, &loss, 2).unwrap();
            assert!(p > last, "K = {k}: {p} vs {last}");
            last = p;
        }
    }

    #[test]
    fn loss_shifts_the_multimode_maximum() {
        // convolved thermal modes do not keep their maximum under loss
        let mu = crate::spectrum::mu_from_schmidt_number(2.0).unwrap();
        let template = SpectrumTemplate::from_mode_decay(mu, 35).unwrap();
        let (_, p_lossless) =
            max_herald_probability(&template, &LossModel::lossless(), 2).unwrap();
        let (_, p_lossy) =
            max_herald_probability(&template, &LossModel::new(1.0, 0.5).unwrap(), 2).unwrap();
        assert!(
            (p_lossless - p_lossy).abs() > 1e-6,
            "{p_lossless} vs {p_lossy}"
        );
    }

    #[test]
    fn feasibility_unconstrained_reduces_to_single_mode_maxima() {
        let report = feasibility(1e8, 0.9, 0.0, 0.1, 1..=4).unwrap();
        for entry in &report.per_n {
            let expected = 1e8 * single_mode_max_herald_prob(entry.n);
            assert!(
                (entry.rate - expected).abs() / expected < 1e-7,
                "n = {}",
                entry.n
            );
        }
    }

    #[test]
    fn feasibility_monotonic_in_constraints() {
        let strict = feasibility(1e8, 0.9, 0.95, 0.1, 1..=6).unwrap();
        let loose = feasibility(1e8, 0.9, 0.80, 0.1, 1..=6).unwrap();
        let brighter = feasibility(1e8, 1.0, 0.95, 0.1, 1..=6).unwrap();
        for i in 0..strict.per_n.len() {
            assert!(strict.per_n[i].rate <= loose.per_n[i].rate + 1e-9);
            assert!(strict.per_n[i].rate <= brighter.per_n[i].rate + 1e-9);
        }
        // rates fall with n
        for w in strict.per_n.windows(2) {
            assert!(w[1].rate <= w[0].rate);
        }
    }
}
