//! Photon-number probability mass functions.
//!
//! The workhorse here is [`phase_type_pmf`]: the photon-number distribution
//! of a sum of independent geometric (thermal) modes, evaluated through
//! powers of an upper-bidiagonal transition matrix. Closed forms for the
//! equal-parameter case ([`negative_binomial_pmf`]) and the all-distinct
//! case ([`distinct_q_pmf`]) serve as independent cross-checks.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Default tail-mass budget for truncated distributions.
pub const TRUNCATION_EPS: f64 = 1e-12;

/// Minimum pairwise separation of vacuum probabilities accepted by
/// [`distinct_q_pmf`].
pub const DEGENERACY_THRESHOLD: f64 = 1e-6;

/// A truncated photon-number distribution with explicitly tracked tail mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf {
    probs: Vec<f64>,
    tail_mass: f64,
}

impl Pmf {
    /// Wraps a probability vector, accounting the mass beyond the truncation.
    pub fn new(probs: Vec<f64>, tail_mass: f64) -> Self {
        Pmf { probs, tail_mass }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Highest retained photon number.
    pub fn n_trunc(&self) -> usize {
        self.probs.len().saturating_sub(1)
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Probability of `n` photons; zero beyond the truncation.
    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    /// Sum of retained probabilities.
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Mean photon number of the retained part.
    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Verifies entries lie in [0, 1] and that retained mass plus tail is
    /// unity within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (n, &p) in self.probs.iter().enumerate() {
            if !(0.0..=1.0 + 1e-12).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "pmf entry {n} out of range: {p}"
                )));
            }
        }
        let total = self.total() + self.tail_mass;
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidInput(format!(
                "pmf mass {total} deviates from 1 beyond {tol:e}"
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_vacuum_prob(name: &'static str, q: f64) -> Result<f64> {
    if q.is_finite() && q > 0.0 && q <= 1.0 {
        Ok(q)
    } else {
        Err(Error::Domain {
            name,
            value: q,
            constraint: "in (0, 1]",
        })
    }
}

/// Geometric (thermal-mode) photon-number distribution with vacuum
/// probability `q`: `p_n = q (1-q)^n`.
pub fn geometric_pmf(vacuum_prob: f64, n_max: usize) -> Result<Pmf> {
    let q = check_vacuum_prob("vacuum_prob", vacuum_prob)?;
    let ratio = 1.0 - q;
    let mut probs = Vec::with_capacity(n_max + 1);
    let mut p = q;
    for _ in 0..=n_max {
        probs.push(p);
        p *= ratio;
    }
    // after the loop, p = q (1-q)^{n_max+1}; the tail is p / q * ... the
    // geometric series sums to (1-q)^{n_max+1}
    let tail = p / q;
    Ok(Pmf::new(probs, tail))
}

/// Smallest truncation for which a geometric tail drops below `eps`.
pub fn geometric_n_trunc(vacuum_prob: f64, eps: f64) -> Result<usize> {
    let q = check_vacuum_prob("vacuum_prob", vacuum_prob)?;
    if q == 1.0 {
        return Ok(0);
    }
    let n = (eps.ln() / (1.0 - q).ln()).ceil() as i64 - 1;
    Ok(n.max(0) as usize)
}

/// Photon-number distribution of up to `K` thermal modes with vacuum
/// probabilities `vacuum_probs`, via the discrete phase-type construction.
///
/// Entry `n` equals `alpha M^{n+K-1} M_0` where `M` is the upper-bidiagonal
/// matrix with diagonal `1-q_k` and superdiagonal `q_k`, `alpha = (1,0,..,0)`
/// and `M_0 = (0,..,0,q_K)^T`. This is identical to the convolution of the
/// per-mode geometric distributions but costs only `O((n+K)K)`.
pub fn phase_type_pmf(vacuum_probs: &[f64], n_max: usize) -> Result<Pmf> {
    if vacuum_probs.is_empty() {
        return Err(Error::InvalidInput(
            "phase_type_pmf: empty vacuum probability vector".into(),
        ));
    }
    for &q in vacuum_probs {
        check_vacuum_prob("vacuum_prob", q)?;
    }
    let k = vacuum_probs.len();
    let mut state = vec![0.0; k];
    state[k - 1] = vacuum_probs[k - 1];

    // One application of M; state[i] depends on state[i] and state[i+1],
    // so an ascending in-place sweep is safe.
    let advance = |state: &mut [f64]| {
        for i in 0..k - 1 {
            state[i] = (1.0 - vacuum_probs[i]) * state[i] + vacuum_probs[i] * state[i + 1];
        }
        state[k - 1] *= 1.0 - vacuum_probs[k - 1];
    };

    for _ in 0..k - 1 {
        advance(&mut state);
    }
    let mut probs = Vec::with_capacity(n_max + 1);
    probs.push(state[0]);
    for _ in 0..n_max {
        advance(&mut state);
        probs.push(state[0]);
    }
    let tail = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    Ok(Pmf::new(probs, tail))
}

/// Log of the binomial coefficient `C(n, k)`.
pub(crate) fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Binomial coefficient as a float; exact products for small `n`,
/// log-space above to avoid overflow.
pub(crate) fn binomial_coefficient(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    if n <= 30 {
        let mut c = 1.0;
        for j in 0..k {
            c = c * (n - j) as f64 / (j + 1) as f64;
        }
        c
    } else {
        ln_binomial(n, k).exp()
    }
}

/// Probability of `n` photons from `k` thermal modes sharing one vacuum
/// probability `q`: the negative binomial `C(n+k-1, n) (1-q)^n q^k`.
pub fn negative_binomial_pmf(vacuum_prob: f64, k: usize, n: usize) -> Result<f64> {
    let q = check_vacuum_prob("vacuum_prob", vacuum_prob)?;
    if k == 0 {
        return Err(Error::Domain {
            name: "k",
            value: 0.0,
            constraint: ">= 1",
        });
    }
    if q == 1.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if n <= 30 {
        let c = binomial_coefficient((n + k - 1) as u64, n as u64);
        Ok(c * (1.0 - q).powi(n as i32) * q.powi(k as i32))
    } else {
        let ln_p = ln_binomial((n + k - 1) as u64, n as u64)
            + n as f64 * (1.0 - q).ln()
            + k as f64 * q.ln();
        Ok(ln_p.exp())
    }
}

/// Probability of `n` photons from modes with pairwise-distinct, strictly
/// decreasing vacuum probabilities, using the partial-fraction closed form
///
/// `p_n = prod_i q_i * sum_j (1-q_j)^{n+K-1} / prod_{m!=j} (q_m - q_j)`.
///
/// The denominators carry their natural signs; writing them as
/// `(-1)^j |q_j - q_m|` is equivalent only up to a global factor `(-1)^K`.
/// Near-degenerate inputs are rejected because the alternating sum loses
/// all significance there; the phase-type engine has no such restriction.
pub fn distinct_q_pmf(vacuum_probs: &[f64], n: usize) -> Result<f64> {
    let k = vacuum_probs.len();
    if k == 0 {
        return Err(Error::InvalidInput(
            "distinct_q_pmf: empty vacuum probability vector".into(),
        ));
    }
    for &q in vacuum_probs {
        if !(q.is_finite() && q > 0.0 && q < 1.0) {
            return Err(Error::Domain {
                name: "vacuum_prob",
                value: q,
                constraint: "in (0, 1)",
            });
        }
    }
    let mut min_gap = f64::INFINITY;
    for w in vacuum_probs.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::InvalidInput(
                "distinct_q_pmf: vacuum probabilities must be strictly decreasing".into(),
            ));
        }
        min_gap = min_gap.min(w[0] - w[1]);
    }
    if k > 1 && min_gap < DEGENERACY_THRESHOLD {
        return Err(Error::NearDegenerate {
            min_gap,
            threshold: DEGENERACY_THRESHOLD,
        });
    }

    let prefactor: f64 = vacuum_probs.iter().product();
    let exponent = (n + k - 1) as i32;
    let mut sum = 0.0;
    for (j, &qj) in vacuum_probs.iter().enumerate() {
        let mut denom = 1.0;
        for (m, &qm) in vacuum_probs.iter().enumerate() {
            if m != j {
                denom *= qm - qj;
            }
        }
        sum += (1.0 - qj).powi(exponent) / denom;
    }
    Ok((prefactor * sum).max(0.0))
}

/// Convolution of two sequences, truncated to indices `0..=n_max`.
///
/// Entries up to `n_max` are exact: index `n` of the convolution only
/// involves input indices `<= n`.
pub fn convolve(a: &[f64], b: &[f64], n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    for (i, &ai) in a.iter().enumerate().take(n_max + 1) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(n_max + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}
