//! Schmidt-mode spectra of a two-mode squeezed multimode source.
//!
//! A source is parameterized by an overall optical gain `B` and a mode
//! decay `mu`: the Schmidt coefficients are `lambda_k = sqrt(1-mu^2)
//! mu^(k-1)`, the per-mode squeezing is `r_k = B lambda_k`, and each mode's
//! photon-number distribution is geometric with vacuum probability
//! `q_k = 1 - tanh^2(r_k)`.

use serde::Serialize;

use crate::error::{check_range, Error, Result};

/// Largest accepted mode decay; `mu = 1` would be an infinite flat spectrum.
pub const MU_MAX: f64 = 1.0 - 1e-9;

/// Tolerance on `sum lambda_k^2 = 1` accepted by operations that require a
/// normalized spectrum.
pub const NORMALIZATION_TOL: f64 = 1e-8;

/// Schmidt coefficients of the exponential mode hierarchy:
/// `lambda_k = sqrt(1-mu^2) mu^(k-1)` for `k = 1..=k_max`.
///
/// The truncation residual `sum_{k > k_max} lambda_k^2 = mu^(2 k_max)` is
/// not folded back into the retained coefficients.
pub fn schmidt_coefficients(mode_decay: f64, k_max: usize) -> Result<Vec<f64>> {
    let mu = check_range("mode_decay", mode_decay, 0.0, MU_MAX, "in [0, 1)")?;
    if k_max == 0 {
        return Err(Error::Domain {
            name: "k_max",
            value: 0.0,
            constraint: ">= 1",
        });
    }
    let head = (1.0 - mu * mu).sqrt();
    let mut lambdas = Vec::with_capacity(k_max);
    let mut lam = head;
    for _ in 0..k_max {
        lambdas.push(lam);
        lam *= mu;
    }
    Ok(lambdas)
}

/// Effective mode count `K = 1 / sum lambda_k^4` of a normalized
/// coefficient vector.
pub fn schmidt_number(lambdas: &[f64]) -> Result<f64> {
    if lambdas.is_empty() {
        return Err(Error::InvalidInput(
            "schmidt_number: empty coefficient vector".into(),
        ));
    }
    let mut sum2 = 0.0;
    let mut sum4 = 0.0;
    for &l in lambdas {
        if !l.is_finite() || l < 0.0 {
            return Err(Error::Domain {
                name: "lambda",
                value: l,
                constraint: "finite and >= 0",
            });
        }
        sum2 += l * l;
        sum4 += l * l * l * l;
    }
    if (sum2 - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidInput(format!(
            "schmidt_number: sum of lambda^2 is {sum2}, not normalized within {NORMALIZATION_TOL:e}"
        )));
    }
    Ok(1.0 / sum4)
}

/// Mode decay reproducing a given Schmidt number for the exponential
/// hierarchy: `mu = sqrt((K-1)/(K+1))`.
pub fn mu_from_schmidt_number(schmidt_number: f64) -> Result<f64> {
    if !schmidt_number.is_finite() || schmidt_number < 1.0 {
        return Err(Error::Domain {
            name: "schmidt_number",
            value: schmidt_number,
            constraint: ">= 1",
        });
    }
    let mu = ((schmidt_number - 1.0) / (schmidt_number + 1.0)).sqrt();
    if mu > MU_MAX {
        return Err(Error::Domain {
            name: "schmidt_number",
            value: schmidt_number,
            constraint: "small enough that mu < 1 - 1e-9",
        });
    }
    Ok(mu)
}

/// A gain-independent set of Schmidt coefficients, ready to be turned into a
/// [`ModeSpectrum`] at any optical gain.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumTemplate {
    lambdas: Vec<f64>,
    mode_decay: Option<f64>,
    truncated_weight: f64,
}

impl SpectrumTemplate {
    /// Exponential hierarchy with decay `mu`, truncated at `k_max` modes.
    pub fn from_mode_decay(mode_decay: f64, k_max: usize) -> Result<Self> {
        let lambdas = schmidt_coefficients(mode_decay, k_max)?;
        let truncated_weight = mode_decay.powi(2 * k_max as i32);
        Ok(SpectrumTemplate {
            lambdas,
            mode_decay: Some(mode_decay),
            truncated_weight,
        })
    }

    /// Explicit coefficients, required non-increasing (dominant mode first)
    /// and normalized within [`NORMALIZATION_TOL`].
    pub fn from_lambdas(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidInput(
                "spectrum template: empty coefficient vector".into(),
            ));
        }
        let mut sum2 = 0.0;
        for (i, &l) in lambdas.iter().enumerate() {
            if !l.is_finite() || l < 0.0 {
                return Err(Error::Domain {
                    name: "lambda",
                    value: l,
                    constraint: "finite and >= 0",
                });
            }
            if i > 0 && l > lambdas[i - 1] {
                return Err(Error::InvalidInput(
                    "spectrum template: coefficients must be non-increasing".into(),
                ));
            }
            sum2 += l * l;
        }
        if (sum2 - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidInput(format!(
                "spectrum template: sum of lambda^2 is {sum2}, not normalized"
            )));
        }
        Ok(SpectrumTemplate {
            lambdas,
            mode_decay: None,
            truncated_weight: (1.0 - sum2).max(0.0),
        })
    }

    /// `k` modes of equal weight `1/sqrt(k)`.
    pub fn equal_modes(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain {
                name: "k",
                value: 0.0,
                constraint: ">= 1",
            });
        }
        let l = (1.0 / k as f64).sqrt();
        Self::from_lambdas(vec![l; k])
    }

    /// Single spectrally pure mode.
    pub fn single_mode() -> Self {
        SpectrumTemplate {
            lambdas: vec![1.0],
            mode_decay: Some(0.0),
            truncated_weight: 0.0,
        }
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn mode_decay(&self) -> Option<f64> {
        self.mode_decay
    }

    pub fn k_max(&self) -> usize {
        self.lambdas.len()
    }

    /// Instantiates the spectrum at optical gain `b`.
    pub fn at_gain(&self, optical_gain: f64) -> Result<ModeSpectrum> {
        if !optical_gain.is_finite() || optical_gain < 0.0 {
            return Err(Error::Domain {
                name: "optical_gain",
                value: optical_gain,
                constraint: ">= 0",
            });
        }
        let squeezings: Vec<f64> = self.lambdas.iter().map(|l| optical_gain * l).collect();
        let tanh_params: Vec<f64> = squeezings.iter().map(|r| r.tanh()).collect();
        let vacuum_probs: Vec<f64> = tanh_params.iter().map(|t| 1.0 - t * t).collect();
        Ok(ModeSpectrum {
            optical_gain,
            mode_decay: self.mode_decay,
            lambdas: self.lambdas.clone(),
            squeezings,
            tanh_params,
            vacuum_probs,
            truncated_weight: self.truncated_weight,
        })
    }
}

/// A multimode squeezed source at a definite optical gain.
#[derive(Debug, Clone, Serialize)]
pub struct ModeSpectrum {
    optical_gain: f64,
    mode_decay: Option<f64>,
    lambdas: Vec<f64>,
    squeezings: Vec<f64>,
    tanh_params: Vec<f64>,
    vacuum_probs: Vec<f64>,
    truncated_weight: f64,
}

impl ModeSpectrum {
    /// Exponential-hierarchy source with gain `b`, decay `mu`, `k_max` modes.
    pub fn new(optical_gain: f64, mode_decay: f64, k_max: usize) -> Result<Self> {
        SpectrumTemplate::from_mode_decay(mode_decay, k_max)?.at_gain(optical_gain)
    }

    /// Spectrally pure single-mode source.
    pub fn single_mode(optical_gain: f64) -> Result<Self> {
        SpectrumTemplate::single_mode().at_gain(optical_gain)
    }

    pub fn optical_gain(&self) -> f64 {
        self.optical_gain
    }

    pub fn mode_decay(&self) -> Option<f64> {
        self.mode_decay
    }

    pub fn k_max(&self) -> usize {
        self.lambdas.len()
    }

    /// Schmidt coefficients `lambda_k`.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Per-mode squeezing parameters `r_k = B lambda_k`.
    pub fn squeezings(&self) -> &[f64] {
        &self.squeezings
    }

    /// Per-mode `tanh(r_k)`.
    pub fn tanh_params(&self) -> &[f64] {
        &self.tanh_params
    }

    /// Per-mode vacuum probabilities `q_k = 1 - tanh^2(r_k)`.
    pub fn vacuum_probs(&self) -> &[f64] {
        &self.vacuum_probs
    }

    /// Spectral weight `sum_{k > k_max} lambda_k^2` lost to truncation.
    pub fn truncated_weight(&self) -> f64 {
        self.truncated_weight
    }

    /// Effective mode count of the retained coefficients.
    pub fn schmidt_number(&self) -> f64 {
        let sum4: f64 = self.lambdas.iter().map(|l| l.powi(4)).sum();
        1.0 / sum4
    }

    /// Mean photons generated per arm: `sum_k sinh^2(r_k)`.
    pub fn mean_photons_generated(&self) -> f64 {
        self.squeezings.iter().map(|r| r.sinh().powi(2)).sum()
    }

    /// Same coefficients at a different gain.
    pub fn with_gain(&self, optical_gain: f64) -> Result<Self> {
        SpectrumTemplate {
            lambdas: self.lambdas.clone(),
            mode_decay: self.mode_decay,
            truncated_weight: self.truncated_weight,
        }
        .at_gain(optical_gain)
    }
}
