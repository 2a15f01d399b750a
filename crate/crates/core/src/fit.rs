//! Nonlinear least-squares estimation of source and detection parameters
//! from measured heralding data.
//!
//! The free parameters are the Schmidt number `K` and the two arm
//! transmissions; the per-run optical gain is not fitted but pinned by each
//! run's measured mean photon number, mirroring how the data are plotted.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::gain_for_detected_mean;
use crate::error::{Error, Result};
use crate::herald::{fidelity_profiles, herald_pmf, mean_detected_photons};
use crate::loss::LossModel;
use crate::optim::{nelder_mead, SimplexOutcome};
use crate::spectrum::{mu_from_schmidt_number, SpectrumTemplate};

/// One measured point of a run: heralding probability and (optionally)
/// photon-number fidelity for one target `n`, with optional asymmetric
/// uncertainties `(low, high)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitObservation {
    pub n: usize,
    pub herald_prob: f64,
    pub herald_prob_err: Option<(f64, f64)>,
    pub fidelity: Option<f64>,
    pub fidelity_err: Option<(f64, f64)>,
}

/// All observations taken at one pump setting, tagged with the measured
/// mean detected idler photon number.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunData {
    pub run_id: String,
    pub mean_photons: f64,
    pub observations: Vec<FitObservation>,
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Retained Schmidt modes in the model.
    pub k_max: usize,
    /// Multi-start grid over the Schmidt number.
    pub schmidt_starts: Vec<f64>,
    /// Multi-start grid over both transmissions.
    pub eta_starts: Vec<f64>,
    /// Simplex iteration budget per start.
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            k_max: 35,
            schmidt_starts: vec![1.0, 1.5, 2.0, 3.0],
            eta_starts: vec![0.3, 0.6, 0.9],
            max_iterations: 300,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub schmidt_number: f64,
    pub eta_idler: f64,
    pub eta_signal: f64,
    /// Gain reproducing each run's measured mean photon number.
    pub per_run_gain: Vec<f64>,
    /// Weighted sum of squared residuals at the optimum.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

const K_LO: f64 = 1.0;
const K_HI: f64 = 60.0;
const ETA_LO: f64 = 1e-6;
const ETA_HI: f64 = 1.0;
const PENALTY_WEIGHT: f64 = 1e4;
const PROB_FLOOR: f64 = 1e-300;

fn clamp_params(raw: &[f64]) -> ([f64; 3], f64) {
    let k = raw[0].clamp(K_LO, K_HI);
    let ei = raw[1].clamp(ETA_LO, ETA_HI);
    let es = raw[2].clamp(ETA_LO, ETA_HI);
    let mut dist = 0.0;
    for (r, c) in raw.iter().zip([k, ei, es]) {
        dist += (r - c) * (r - c);
    }
    ([k, ei, es], PENALTY_WEIGHT * dist)
}

struct Objective<'a> {
    runs: &'a [RunData],
    k_max: usize,
}

impl Objective<'_> {
    /// Weighted SSE at clamped parameters, or infinity when the model
    /// cannot be evaluated there.
    fn eval(&self, raw: &[f64]) -> f64 {
        let ([k, ei, es], penalty) = clamp_params(raw);
        match self.sse(k, ei, es) {
            Ok(sse) => sse + penalty,
            Err(_) => f64::INFINITY,
        }
    }

    fn sse(&self, schmidt_number: f64, eta_idler: f64, eta_signal: f64) -> Result<f64> {
        let mu = mu_from_schmidt_number(schmidt_number)?;
        let template = SpectrumTemplate::from_mode_decay(mu, self.k_max)?;
        let loss = LossModel::new(eta_signal, eta_idler)?;
        let mut sse = 0.0;
        for run in self.runs {
            let gain = gain_for_detected_mean(&template, eta_idler, run.mean_photons)?;
            let spec = template.at_gain(gain)?;
            let n_max = run.observations.iter().map(|o| o.n).max().unwrap_or(0);
            let pmf = herald_pmf(&spec, &loss, n_max)?;
            let n_fid_max = run
                .observations
                .iter()
                .filter(|o| o.fidelity.is_some())
                .map(|o| o.n)
                .max();
            let profiles = match n_fid_max {
                Some(m) => Some(fidelity_profiles(&spec, &loss, m)?.1),
                None => None,
            };
            for obs in &run.observations {
                let model_p = pmf.get(obs.n).max(PROB_FLOOR);
                sse += residual(model_p, obs.herald_prob, obs.herald_prob_err)?.powi(2);
                if let Some(fid) = obs.fidelity {
                    let model_f = profiles
                        .as_ref()
                        .and_then(|p| p[obs.n])
                        .unwrap_or(PROB_FLOOR)
                        .max(PROB_FLOOR);
                    sse += residual(model_f, fid, obs.fidelity_err)?.powi(2);
                }
            }
        }
        Ok(sse)
    }
}

/// Inverse-variance weighting when an uncertainty is reported, otherwise
/// a logarithmic residual (heralding probabilities span many decades).
fn residual(model: f64, observed: f64, err: Option<(f64, f64)>) -> Result<f64> {
    match err {
        Some((lo, hi)) if lo + hi > 0.0 => {
            let sigma = 0.5 * (lo + hi);
            Ok((model - observed) / sigma)
        }
        _ => {
            if observed <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "observation {observed} needs a positive value or an uncertainty"
                )));
            }
            Ok(model.ln() - observed.ln())
        }
    }
}

fn validate_runs(runs: &[RunData]) -> Result<()> {
    if runs.len() < 2 {
        return Err(Error::UnderDetermined(format!(
            "{} run(s); at least two pump settings are needed",
            runs.len()
        )));
    }
    for run in runs {
        if run.observations.is_empty() {
            return Err(Error::InvalidInput(format!(
                "run {} has no observations",
                run.run_id
            )));
        }
        if !(run.mean_photons.is_finite() && run.mean_photons > 0.0) {
            return Err(Error::Domain {
                name: "mean_photons",
                value: run.mean_photons,
                constraint: "> 0",
            });
        }
        for obs in &run.observations {
            if !(0.0..=1.0).contains(&obs.herald_prob) {
                return Err(Error::Domain {
                    name: "herald_prob",
                    value: obs.herald_prob,
                    constraint: "in [0, 1]",
                });
            }
            if let Some(f) = obs.fidelity {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::Domain {
                        name: "fidelity",
                        value: f,
                        constraint: "in [0, 1]",
                    });
                }
            }
        }
    }
    Ok(())
}

/// Fits `(K, eta_idler, eta_signal)` to the runs by derivative-free
/// least squares from a multi-start grid.
pub fn fit_parameters(runs: &[RunData], opts: &FitOptions) -> Result<FitResult> {
    validate_runs(runs)?;
    let objective = Objective {
        runs,
        k_max: opts.k_max,
    };

    let starts: Vec<[f64; 3]> = opts
        .schmidt_starts
        .iter()
        .flat_map(|&k| {
            opts.eta_starts.iter().flat_map(move |&ei| {
                opts.eta_starts.iter().map(move |&es| [k, ei, es])
            })
        })
        .collect();
    if starts.is_empty() {
        return Err(Error::InvalidInput("fit: empty multi-start grid".into()));
    }

    let outcomes: Vec<SimplexOutcome> = starts
        .par_iter()
        .map(|start| {
            nelder_mead(
                |x| objective.eval(x),
                start,
                &[0.3, 0.1, 0.1],
                1e-12,
                opts.max_iterations,
            )
        })
        .collect();
    let best = outcomes
        .iter()
        .min_by(|a, b| a.fx.total_cmp(&b.fx))
        .expect("at least one start");

    // polish the winner with a tight simplex
    let polish = nelder_mead(
        |x| objective.eval(x),
        &best.x,
        &[1e-3, 1e-3, 1e-3],
        1e-15,
        2 * opts.max_iterations,
    );
    let winner = if polish.fx <= best.fx { &polish } else { best };

    let ([k, ei, es], _) = clamp_params(&winner.x);
    if !winner.fx.is_finite() {
        return Err(Error::NoConvergence {
            context: "fit_parameters: objective not finite at optimum".into(),
            iterations: best.iterations + polish.iterations,
            lo: k,
            hi: k,
        });
    }
    let residual = objective.sse(k, ei, es)?;
    let mu = mu_from_schmidt_number(k)?;
    let template = SpectrumTemplate::from_mode_decay(mu, opts.k_max)?;
    let per_run_gain: Result<Vec<f64>> = runs
        .iter()
        .map(|run| gain_for_detected_mean(&template, ei, run.mean_photons))
        .collect();

    Ok(FitResult {
        schmidt_number: k,
        eta_idler: ei,
        eta_signal: es,
        per_run_gain: per_run_gain?,
        residual,
        iterations: best.iterations + polish.iterations,
        converged: best.converged || polish.converged,
    })
}

/// Noiseless model data at the given parameters: heralding probabilities
/// for `n = 0..=n_prob_max` and photon-number fidelities for
/// `n = 1..=n_fid_max`, one run per gain.
pub fn synthesize_runs(
    schmidt_number: f64,
    eta_idler: f64,
    eta_signal: f64,
    gains: &[f64],
    n_prob_max: usize,
    n_fid_max: usize,
    k_max: usize,
) -> Result<Vec<RunData>> {
    let mu = mu_from_schmidt_number(schmidt_number)?;
    let template = SpectrumTemplate::from_mode_decay(mu, k_max)?;
    let loss = LossModel::new(eta_signal, eta_idler)?;
    gains
        .iter()
        .enumerate()
        .map(|(idx, &gain)| {
            let spec = template.at_gain(gain)?;
            let pmf = herald_pmf(&spec, &loss, n_prob_max)?;
            let profiles = fidelity_profiles(&spec, &loss, n_fid_max)?.1;
            let mut observations = Vec::new();
            for n in 0..=n_prob_max {
                let fidelity = if (1..=n_fid_max).contains(&n) {
                    profiles[n]
                } else {
                    None
                };
                observations.push(FitObservation {
                    n,
                    herald_prob: pmf.get(n),
                    herald_prob_err: None,
                    fidelity,
                    fidelity_err: None,
                });
            }
            Ok(RunData {
                run_id: format!("run{idx}"),
                mean_photons: mean_detected_photons(&spec, eta_idler)?,
                observations,
            })
        })
        .collect()
}
