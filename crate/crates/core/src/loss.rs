//! Loss channels for the signal and idler arms.
//!
//! Loss with transmission `eta` acts on photon number as binomial thinning.
//! Thermal (geometric) distributions are closed under this map, which gives
//! the closed-form transforms [`lossy_thermal_vacuum_prob`] and
//! [`lossy_squeezing`].

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::pmf::Pmf;

/// Arm transmissions of the detection setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    eta_signal: f64,
    eta_idler: f64,
}

impl LossModel {
    pub fn new(eta_signal: f64, eta_idler: f64) -> Result<Self> {
        check_range("eta_signal", eta_signal, 0.0, 1.0, "in [0, 1]")?;
        check_range("eta_idler", eta_idler, 0.0, 1.0, "in [0, 1]")?;
        Ok(LossModel {
            eta_signal,
            eta_idler,
        })
    }

    pub fn lossless() -> Self {
        LossModel {
            eta_signal: 1.0,
            eta_idler: 1.0,
        }
    }

    pub fn eta_signal(&self) -> f64 {
        self.eta_signal
    }

    pub fn eta_idler(&self) -> f64 {
        self.eta_idler
    }
}

/// Vacuum probability of a thermal state after transmission `eta`:
/// `q' = q / (q + eta - q eta)`.
pub fn lossy_thermal_vacuum_prob(vacuum_prob: f64, eta: f64) -> Result<f64> {
    let q = crate::pmf::check_vacuum_prob("vacuum_prob", vacuum_prob)?;
    let eta = check_range("eta", eta, 0.0, 1.0, "in [0, 1]")?;
    // factored denominator: q + eta - q*eta rounds above 1 for q near 1
    Ok((q / (q + eta * (1.0 - q))).min(1.0))
}

/// Squeezing parameter of a thermal state after transmission `eta`:
/// `r' = artanh(sqrt(eta tanh^2 r / (1 + (eta - 1) tanh^2 r)))`.
///
/// Slope `sqrt(eta)` for small `r`, slope 1 for large `r`. `eta = 0` is
/// rejected: the output state is vacuum and carries no squeezing parameter.
pub fn lossy_squeezing(squeezing: f64, eta: f64) -> Result<f64> {
    if !squeezing.is_finite() || squeezing < 0.0 {
        return Err(Error::Domain {
            name: "squeezing",
            value: squeezing,
            constraint: ">= 0",
        });
    }
    let eta = check_range("eta", eta, 0.0, 1.0, "in (0, 1]")?;
    if eta == 0.0 {
        return Err(Error::Domain {
            name: "eta",
            value: eta,
            constraint: "> 0 (full loss leaves vacuum)",
        });
    }
    let t2 = squeezing.tanh().powi(2);
    Ok((eta * t2 / (1.0 + (eta - 1.0) * t2)).sqrt().atanh())
}

/// Binomial detection row: `P(j | m) = C(m, j) eta^j (1-eta)^(m-j)` for
/// `j = 0..=min(m, j_max)`.
///
/// Anchored at the distribution mode in log space and filled by the
/// two-sided recurrence, so entries near the bulk survive even when the
/// endpoint values underflow.
pub(crate) fn binomial_row(m: usize, eta: f64, j_max: usize) -> Vec<f64> {
    let len = m.min(j_max) + 1;
    let mut row = vec![0.0; len];
    if eta == 0.0 || m == 0 {
        row[0] = 1.0;
        return row;
    }
    if eta == 1.0 {
        if m < len {
            row[m] = 1.0;
        }
        return row;
    }
    let mode = (((m + 1) as f64 * eta) as usize).min(len - 1);
    let anchor = (crate::pmf::ln_binomial(m as u64, mode as u64)
        + mode as f64 * eta.ln()
        + (m - mode) as f64 * (1.0 - eta).ln())
    .exp();
    row[mode] = anchor;
    let ratio = eta / (1.0 - eta);
    let mut b = anchor;
    for j in mode + 1..len {
        b *= ratio * (m - j + 1) as f64 / j as f64;
        row[j] = b;
    }
    let mut b = anchor;
    for j in (0..mode).rev() {
        b *= (j + 1) as f64 / (ratio * (m - j) as f64);
        row[j] = b;
    }
    row
}

/// Applies binomial thinning with transmission `eta` to a photon-number
/// distribution. The output keeps the input truncation; mass that was
/// already beyond the truncation stays unaccounted in the tail.
pub fn apply_binomial_loss(pmf: &Pmf, eta: f64) -> Result<Pmf> {
    let eta = check_range("eta", eta, 0.0, 1.0, "in [0, 1]")?;
    let n_max = pmf.n_trunc();
    let mut out = vec![0.0; n_max + 1];
    for (m, &p) in pmf.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let row = binomial_row(m, eta, n_max);
        for (j, &b) in row.iter().enumerate() {
            out[j] += p * b;
        }
    }
    let tail = (1.0 - out.iter().sum::<f64>()).max(0.0);
    Ok(Pmf::new(out, tail))
}
