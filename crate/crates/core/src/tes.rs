//! Transition-edge-sensor calibration: Gaussian mixture fits of pulse-area
//! histograms, photon-number acceptance windows with misassignment
//! probabilities, event binning with asymmetric error bars, and Allan
//! variance for drift checks.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::optim::nelder_mead;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_TAU: f64 = 2.506_628_274_631_000_7; // sqrt(2 pi)

/// Two-sided confidence factor for the Bernoulli counting error.
const BERNOULLI_Z: f64 = 1.96;

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Binned pulse-area data from a photon-number-resolving detector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TesHistogram {
    bin_edges: Vec<f64>,
    counts: Vec<u64>,
}

impl TesHistogram {
    pub fn new(bin_edges: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() || bin_edges.len() != counts.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "histogram needs len(edges) = len(counts) + 1, got {} edges / {} counts",
                bin_edges.len(),
                counts.len()
            )));
        }
        for w in bin_edges.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidInput(
                    "histogram bin edges must be strictly increasing".into(),
                ));
            }
        }
        Ok(TesHistogram { bin_edges, counts })
    }

    /// Uniform-bin histogram of raw event values.
    pub fn from_events(events: &[f64], n_bins: usize) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::InvalidInput("no events to histogram".into()));
        }
        if n_bins == 0 {
            return Err(Error::InvalidInput("n_bins must be positive".into()));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &e in events {
            if !e.is_finite() {
                return Err(Error::InvalidInput("non-finite event value".into()));
            }
            lo = lo.min(e);
            hi = hi.max(e);
        }
        if hi == lo {
            hi = lo + 1.0;
        }
        let pad = 1e-9 * (hi - lo);
        let (lo, hi) = (lo - pad, hi + pad);
        let width = (hi - lo) / n_bins as f64;
        let edges: Vec<f64> = (0..=n_bins).map(|i| lo + i as f64 * width).collect();
        let mut counts = vec![0u64; n_bins];
        for &e in events {
            let idx = (((e - lo) / width) as usize).min(n_bins - 1);
            counts[idx] += 1;
        }
        TesHistogram::new(edges, counts)
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn min_bin_width(&self) -> f64 {
        self.bin_edges
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    fn mean_bin_width(&self) -> f64 {
        (self.bin_edges[self.bin_edges.len() - 1] - self.bin_edges[0]) / self.counts.len() as f64
    }

    fn range(&self) -> (f64, f64) {
        (self.bin_edges[0], self.bin_edges[self.bin_edges.len() - 1])
    }
}

/// One Gaussian response component; the index in a [`MixtureFit`] is the
/// photon number it represents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianComponent {
    /// Fraction of fitted events in this component.
    pub weight: f64,
    pub center: f64,
    pub width: f64,
}

/// Fitted detector response: Gaussian components, acceptance windows, and
/// the misassignment probabilities they imply.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureFit {
    pub components: Vec<GaussianComponent>,
    /// Per photon number: `(low, high)`; contiguous, boundaries shared.
    pub acceptance_windows: Vec<(f64, f64)>,
    /// Probability that a click inside window `n` came from a different
    /// photon number.
    pub misassign_in: Vec<f64>,
    /// Probability that a true photon number `n` fell outside window `n`.
    pub misassign_out: Vec<f64>,
    /// Weighted sum of squared residuals of the histogram fit; zero for
    /// hand-built fits.
    pub residual: f64,
}

impl MixtureFit {
    /// Builds a fit from explicit components and windows, computing the
    /// misassignment probabilities.
    pub fn from_components(
        components: Vec<GaussianComponent>,
        acceptance_windows: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let mut fit = MixtureFit {
            components,
            acceptance_windows,
            misassign_in: Vec::new(),
            misassign_out: Vec::new(),
            residual: 0.0,
        };
        fit.check_geometry()?;
        let (m_in, m_out) = misassignment_probabilities(&fit);
        fit.misassign_in = m_in;
        fit.misassign_out = m_out;
        Ok(fit)
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    fn check_geometry(&self) -> Result<()> {
        if self.components.is_empty() || self.components.len() != self.acceptance_windows.len() {
            return Err(Error::InvalidInput(
                "mixture needs one acceptance window per component".into(),
            ));
        }
        let mut weight_sum = 0.0;
        for c in &self.components {
            if !(c.weight >= 0.0 && c.width > 0.0 && c.center.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "bad component: weight {}, center {}, width {}",
                    c.weight, c.center, c.width
                )));
            }
            weight_sum += c.weight;
        }
        if weight_sum > 1.0 + 1e-9 {
            return Err(Error::InvalidInput(format!(
                "component weights sum to {weight_sum} > 1"
            )));
        }
        for w in self.components.windows(2) {
            if !(w[1].center > w[0].center) {
                return Err(Error::InvalidInput(
                    "component centers must be strictly increasing".into(),
                ));
            }
        }
        for (i, &(lo, hi)) in self.acceptance_windows.iter().enumerate() {
            if !(hi > lo) {
                return Err(Error::InvalidInput(format!("window {i} is empty")));
            }
            if i > 0 && lo < self.acceptance_windows[i - 1].1 - 1e-12 {
                return Err(Error::InvalidInput(format!("window {i} overlaps its neighbor")));
            }
        }
        Ok(())
    }

    /// Revalidates a deserialized fit.
    pub fn validate(&self) -> Result<()> {
        self.check_geometry()
    }

    /// Window index for a pulse area, if any. Boundary values go to the
    /// lower window; the lowest window includes its left edge.
    pub fn window_for(&self, value: f64) -> Option<usize> {
        if value < self.acceptance_windows[0].0
            || value > self.acceptance_windows[self.acceptance_windows.len() - 1].1
        {
            return None;
        }
        for (j, &(lo, hi)) in self.acceptance_windows.iter().enumerate() {
            let includes_lo = j == 0;
            if (value > lo || (includes_lo && value >= lo)) && value <= hi {
                return Some(j);
            }
        }
        None
    }
}

/// Probability mass of one Gaussian component inside an interval.
fn component_mass(c: &GaussianComponent, lo: f64, hi: f64) -> f64 {
    normal_cdf((hi - c.center) / c.width) - normal_cdf((lo - c.center) / c.width)
}

/// Gaussian tail integrals of every component over every window:
/// `misassign_in[n]` is the probability that a click inside window `n` was
/// caused by a different photon number; `misassign_out[n]` the probability
/// that photon number `n` responds outside its window.
pub fn misassignment_probabilities(fit: &MixtureFit) -> (Vec<f64>, Vec<f64>) {
    let p = fit.components.len();
    let mut m_in = vec![0.0; p];
    let mut m_out = vec![0.0; p];
    for j in 0..p {
        let (lo, hi) = fit.acceptance_windows[j];
        let own = component_mass(&fit.components[j], lo, hi);
        m_out[j] = (1.0 - own).clamp(0.0, 1.0);
        let mut inside_own = fit.components[j].weight * own;
        let mut inside_total = inside_own;
        for (m, c) in fit.components.iter().enumerate() {
            if m != j {
                inside_total += c.weight * component_mass(c, lo, hi);
            }
        }
        if inside_total > 0.0 {
            inside_own /= inside_total;
            m_in[j] = (1.0 - inside_own).clamp(0.0, 1.0);
        }
    }
    (m_in, m_out)
}

#[derive(Debug, Clone)]
pub struct MixtureOptions {
    /// Local maxima below this fraction of the tallest bin are not used as
    /// initial peak positions.
    pub prominence: f64,
    /// Simplex iteration budget.
    pub max_iterations: usize,
}

impl Default for MixtureOptions {
    fn default() -> Self {
        MixtureOptions {
            prominence: 0.02,
            max_iterations: 4000,
        }
    }
}

/// Initial peak positions: local maxima above the prominence threshold,
/// topped up with evenly spaced positions if too few stand out.
fn initial_centers(hist: &TesHistogram, n_peaks: usize, prominence: f64) -> Vec<f64> {
    let centers = hist.centers();
    let counts = hist.counts();
    let max_count = counts.iter().copied().max().unwrap_or(0) as f64;
    let threshold = prominence * max_count;
    let mut peaks: Vec<(f64, u64)> = Vec::new();
    for i in 0..counts.len() {
        let left_ok = i == 0 || counts[i] >= counts[i - 1];
        let right_ok = i + 1 == counts.len() || counts[i] >= counts[i + 1];
        let strict = (i > 0 && counts[i] > counts[i - 1])
            || (i + 1 < counts.len() && counts[i] > counts[i + 1]);
        if left_ok && right_ok && strict && counts[i] as f64 >= threshold {
            peaks.push((centers[i], counts[i]));
        }
    }
    peaks.sort_by(|a, b| b.1.cmp(&a.1));
    // greedy pick by height, keeping peaks apart so a plateau does not
    // spend two components on one physical peak
    let span = centers[centers.len() - 1] - centers[0];
    let min_sep = (span / (4.0 * n_peaks as f64)).max(2.0 * hist.mean_bin_width());
    let mut init: Vec<f64> = Vec::with_capacity(n_peaks);
    for (x, _) in peaks {
        if init.iter().all(|&c| (c - x).abs() >= min_sep) {
            init.push(x);
            if init.len() == n_peaks {
                break;
            }
        }
    }
    if init.len() < n_peaks {
        let occupied: Vec<f64> = centers
            .iter()
            .zip(counts)
            .filter(|(_, &c)| c > 0)
            .map(|(&x, _)| x)
            .collect();
        let lo = occupied.first().copied().unwrap_or(centers[0]);
        let hi = occupied.last().copied().unwrap_or(centers[centers.len() - 1]);
        let missing = n_peaks - init.len();
        for i in 0..missing {
            let x = lo + (hi - lo) * (i as f64 + 0.5) / missing as f64;
            init.push(x);
        }
    }
    init.sort_by(f64::total_cmp);
    init
}

/// Weighted linear least squares for the component amplitudes given fixed
/// centers and widths (the model is linear in the amplitudes). Negative
/// solutions are clamped to zero.
fn solve_amplitudes(
    x: &[f64],
    y: &[f64],
    w: &[f64],
    centers: &[f64],
    widths: &[f64],
) -> Vec<f64> {
    let p = centers.len();
    let mut design = vec![0.0; x.len() * p];
    for (i, &xi) in x.iter().enumerate() {
        for j in 0..p {
            let z = (xi - centers[j]) / widths[j];
            design[i * p + j] = (-0.5 * z * z).exp();
        }
    }
    // normal equations
    let mut ata = vec![0.0; p * p];
    let mut atb = vec![0.0; p];
    for (i, (&yi, &wi)) in y.iter().zip(w).enumerate() {
        for j in 0..p {
            let dij = design[i * p + j];
            atb[j] += wi * dij * yi;
            for k in j..p {
                ata[j * p + k] += wi * dij * design[i * p + k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            ata[j * p + k] = ata[k * p + j];
        }
        ata[j * p + j] += 1e-12 * (1.0 + ata[j * p + j]);
    }
    // Gaussian elimination with partial pivoting
    let mut a = ata;
    let mut b = atb;
    for col in 0..p {
        let mut pivot = col;
        for row in col + 1..p {
            if a[row * p + col].abs() > a[pivot * p + col].abs() {
                pivot = row;
            }
        }
        if pivot != col {
            for k in 0..p {
                a.swap(col * p + k, pivot * p + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * p + col];
        if diag.abs() < 1e-300 {
            continue;
        }
        for row in col + 1..p {
            let factor = a[row * p + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..p {
                a[row * p + k] -= factor * a[col * p + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut amps = vec![0.0; p];
    for col in (0..p).rev() {
        let mut acc = b[col];
        for k in col + 1..p {
            acc -= a[col * p + k] * amps[k];
        }
        let diag = a[col * p + col];
        amps[col] = if diag.abs() < 1e-300 { 0.0 } else { acc / diag };
    }
    for amp in &mut amps {
        if !amp.is_finite() || *amp < 0.0 {
            *amp = 0.0;
        }
    }
    amps
}

fn mixture_sse(
    x: &[f64],
    y: &[f64],
    w: &[f64],
    centers: &[f64],
    widths: &[f64],
    amps: &[f64],
) -> f64 {
    let mut sse = 0.0;
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        let mut model = 0.0;
        for j in 0..centers.len() {
            let z = (xi - centers[j]) / widths[j];
            model += amps[j] * (-0.5 * z * z).exp();
        }
        sse += wi * (model - yi) * (model - yi);
    }
    sse
}

/// Fits a sum of `n_peaks` Gaussians to the histogram by weighted least
/// squares (amplitudes projected out analytically, centers and widths by
/// simplex search), and derives acceptance windows at the midpoints between
/// adjacent centers, the outermost extended to the histogram range.
pub fn fit_mixture(hist: &TesHistogram, n_peaks: usize) -> Result<MixtureFit> {
    fit_mixture_with_options(hist, n_peaks, &MixtureOptions::default())
}

pub fn fit_mixture_with_options(
    hist: &TesHistogram,
    n_peaks: usize,
    opts: &MixtureOptions,
) -> Result<MixtureFit> {
    if n_peaks == 0 {
        return Err(Error::Domain {
            name: "n_peaks",
            value: 0.0,
            constraint: ">= 1",
        });
    }
    let occupied = hist.counts().iter().filter(|&&c| c > 0).count();
    if occupied < 3 * n_peaks {
        return Err(Error::InvalidInput(format!(
            "histogram has {occupied} occupied bins; fitting {n_peaks} peak(s) needs at least {}",
            3 * n_peaks
        )));
    }

    let x = hist.centers();
    let y: Vec<f64> = hist.counts().iter().map(|&c| c as f64).collect();
    let w: Vec<f64> = y.iter().map(|&c| 1.0 / c.max(1.0)).collect();
    let (range_lo, range_hi) = hist.range();
    let span = range_hi - range_lo;
    let min_width = hist.min_bin_width();

    let init_centers = initial_centers(hist, n_peaks, opts.prominence);
    let min_gap = if n_peaks > 1 {
        init_centers
            .windows(2)
            .map(|p| p[1] - p[0])
            .fold(f64::INFINITY, f64::min)
    } else {
        span / 4.0
    };
    let sigma0 = (min_gap / 4.0).max(min_width);

    // parameters: centers, then log-widths
    let mut theta0 = init_centers.clone();
    theta0.extend(std::iter::repeat(sigma0.ln()).take(n_peaks));
    let mut steps = vec![0.5 * sigma0; n_peaks];
    steps.extend(std::iter::repeat(0.3).take(n_peaks));

    let unpack = |theta: &[f64]| -> (Vec<f64>, Vec<f64>, f64) {
        let mut penalty = 0.0;
        let mut centers = Vec::with_capacity(n_peaks);
        let mut widths = Vec::with_capacity(n_peaks);
        for j in 0..n_peaks {
            let c = theta[j].clamp(range_lo, range_hi);
            penalty += (theta[j] - c) * (theta[j] - c);
            centers.push(c);
            let s = theta[n_peaks + j].exp().clamp(0.05 * min_width, span);
            widths.push(s);
        }
        (centers, widths, 1e6 * penalty)
    };

    let objective = |theta: &[f64]| -> f64 {
        let (centers, widths, penalty) = unpack(theta);
        let amps = solve_amplitudes(&x, &y, &w, &centers, &widths);
        mixture_sse(&x, &y, &w, &centers, &widths, &amps) + penalty
    };

    let outcome = nelder_mead(objective, &theta0, &steps, 1e-10, opts.max_iterations);
    if !outcome.converged {
        return Err(Error::MixtureFit(format!(
            "no convergence after {} iterations (residual {:.6e})",
            outcome.iterations, outcome.fx
        )));
    }

    let (centers, widths, _) = unpack(&outcome.x);
    let amps = solve_amplitudes(&x, &y, &w, &centers, &widths);
    let residual = mixture_sse(&x, &y, &w, &centers, &widths, &amps);

    let mut order: Vec<usize> = (0..n_peaks).collect();
    order.sort_by(|&a, &b| centers[a].total_cmp(&centers[b]));
    let centers: Vec<f64> = order.iter().map(|&j| centers[j]).collect();
    let widths: Vec<f64> = order.iter().map(|&j| widths[j]).collect();
    let amps: Vec<f64> = order.iter().map(|&j| amps[j]).collect();

    for w in centers.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::MixtureFit(format!(
                "components collapsed onto one center near {}",
                w[0]
            )));
        }
    }
    for (&s, &c) in widths.iter().zip(&centers) {
        if s < min_width {
            return Err(Error::MixtureFit(format!(
                "component at {c} collapsed to width {s} below the bin width {min_width}"
            )));
        }
    }

    // fraction of fitted events per component
    let areas: Vec<f64> = amps
        .iter()
        .zip(&widths)
        .map(|(&a, &s)| a * s * SQRT_TAU / hist.mean_bin_width())
        .collect();
    let total_area: f64 = areas.iter().sum();
    if total_area <= 0.0 {
        return Err(Error::MixtureFit("all component amplitudes vanished".into()));
    }
    let components: Vec<GaussianComponent> = centers
        .iter()
        .zip(&widths)
        .zip(&areas)
        .map(|((&center, &width), &area)| GaussianComponent {
            weight: area / total_area,
            center,
            width,
        })
        .collect();

    let mut windows = Vec::with_capacity(n_peaks);
    for j in 0..n_peaks {
        let lo = if j == 0 {
            range_lo
        } else {
            0.5 * (centers[j - 1] + centers[j])
        };
        let hi = if j + 1 == n_peaks {
            range_hi
        } else {
            0.5 * (centers[j] + centers[j + 1])
        };
        windows.push((lo, hi));
    }

    let mut fit = MixtureFit {
        components,
        acceptance_windows: windows,
        misassign_in: Vec::new(),
        misassign_out: Vec::new(),
        residual,
    };
    fit.check_geometry()?;
    let (m_in, m_out) = misassignment_probabilities(&fit);
    fit.misassign_in = m_in;
    fit.misassign_out = m_out;
    Ok(fit)
}

/// Counts and event rates per photon number with asymmetric uncertainties.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountEntry {
    pub photon_number: usize,
    pub count: u64,
    /// Relative frequency among all events.
    pub rate: f64,
    /// Downward uncertainty: Bernoulli counting error plus the in-window
    /// misassignment bound.
    pub err_low: f64,
    /// Upward uncertainty: Bernoulli counting error plus the out-of-window
    /// misassignment bound.
    pub err_high: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountRecord {
    pub per_photon_number: Vec<CountEntry>,
    /// Events outside every acceptance window.
    pub overflow: u64,
    pub total_events: u64,
}

/// Bins pulse areas into the fit's acceptance windows. Events on a shared
/// boundary go to the lower window; events outside every window land in the
/// overflow bucket.
pub fn assign_counts(events: &[f64], fit: &MixtureFit) -> CountRecord {
    let p = fit.n_components();
    let mut counts = vec![0u64; p];
    let mut overflow = 0u64;
    for &e in events {
        match fit.window_for(e) {
            Some(j) => counts[j] += 1,
            None => overflow += 1,
        }
    }
    let total = events.len() as u64;
    let per = counts
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            if total == 0 {
                return CountEntry {
                    photon_number: j,
                    count: 0,
                    rate: 0.0,
                    err_low: 0.0,
                    err_high: 0.0,
                };
            }
            let rate = k as f64 / total as f64;
            let sigma = (rate * (1.0 - rate) / total as f64).sqrt();
            let stat = BERNOULLI_Z * sigma;
            let m_in = fit.misassign_in[j];
            let m_out = fit.misassign_out[j];
            let err_low = (stat + rate * m_in).min(rate);
            let err_high =
                (stat + rate * m_out / (1.0 - m_out).max(1e-12)).min(1.0 - rate);
            CountEntry {
                photon_number: j,
                count: k,
                rate,
                err_low,
                err_high,
            }
        })
        .collect();
    CountRecord {
        per_photon_number: per,
        overflow,
        total_events: total,
    }
}

/// Non-overlapping two-sample Allan variance for each block size: half the
/// mean squared difference of consecutive block averages.
pub fn allan_variance(series: &[f64], block_sizes: &[usize]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(block_sizes.len());
    for &m in block_sizes {
        if m == 0 {
            return Err(Error::InvalidInput("block size must be positive".into()));
        }
        if series.len() < 2 * m {
            return Err(Error::SeriesTooShort {
                needed: 2 * m,
                got: series.len(),
            });
        }
        let n_blocks = series.len() / m;
        let means: Vec<f64> = (0..n_blocks)
            .map(|b| series[b * m..(b + 1) * m].iter().sum::<f64>() / m as f64)
            .collect();
        let sum_sq: f64 = means.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        out.push(sum_sq / (2.0 * (n_blocks - 1) as f64));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_hist(components: &[(f64, f64, f64)], lo: f64, hi: f64, bins: usize) -> TesHistogram {
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
        let counts: Vec<u64> = (0..bins)
            .map(|i| {
                let x = lo + (i as f64 + 0.5) * width;
                let v: f64 = components
                    .iter()
                    .map(|&(a, c, s)| a * (-0.5 * ((x - c) / s).powi(2)).exp())
                    .sum();
                v.round().max(0.0) as u64
            })
            .collect();
        TesHistogram::new(edges, counts).unwrap()
    }

    #[test]
    fn recovers_two_separated_peaks() {
        let hist = synthetic_hist(&[(10_000.0, 2.0, 0.5), (4_000.0, 8.0, 0.5)], -2.0, 12.0, 240);
        let fit = fit_mixture(&hist, 2).unwrap();
        assert!((fit.components[0].center - 2.0).abs() < 0.05);
        assert!((fit.components[1].center - 8.0).abs() < 0.05);
        assert!((fit.components[0].weight / fit.components[1].weight - 2.5).abs() < 0.1);
        // windows tile the histogram range
        assert_eq!(fit.acceptance_windows[0].0, hist.bin_edges()[0]);
        assert_eq!(fit.acceptance_windows[0].1, fit.acceptance_windows[1].0);
        assert_eq!(
            fit.acceptance_windows[1].1,
            hist.bin_edges()[hist.bin_edges().len() - 1]
        );
    }

    #[test]
    fn single_peak_window_spans_range_with_zero_misassignment() {
        let hist = synthetic_hist(&[(5_000.0, 5.0, 0.4)], 0.0, 10.0, 120);
        let fit = fit_mixture(&hist, 1).unwrap();
        assert_eq!(fit.acceptance_windows.len(), 1);
        let (lo, hi) = fit.acceptance_windows[0];
        assert_eq!((lo, hi), (0.0, 10.0));
        assert!(fit.misassign_in[0] < 1e-9);
        assert!(fit.misassign_out[0] < 1e-9);
    }

    #[test]
    fn residual_weakly_decreases_with_more_peaks() {
        let hist = synthetic_hist(
            &[(9_000.0, 2.0, 0.6), (5_000.0, 6.0, 0.7), (2_000.0, 10.0, 0.8)],
            -1.0,
            14.0,
            200,
        );
        let r1 = fit_mixture(&hist, 1).unwrap().residual;
        let r2 = fit_mixture(&hist, 2).unwrap().residual;
        let r3 = fit_mixture(&hist, 3).unwrap().residual;
        assert!(r2 <= r1 * (1.0 + 1e-9), "{r2} vs {r1}");
        assert!(r3 <= r2 * (1.0 + 1e-9), "{r3} vs {r2}");
    }

    #[test]
    fn misassignment_matches_half_window_tails() {
        // two equal peaks at +-1 with unit width and boundary at zero
        let fit = MixtureFit::from_components(
            vec![
                GaussianComponent {
                    weight: 0.5,
                    center: -1.0,
                    width: 1.0,
                },
                GaussianComponent {
                    weight: 0.5,
                    center: 1.0,
                    width: 1.0,
                },
            ],
            vec![(-12.0, 0.0), (0.0, 12.0)],
        )
        .unwrap();
        let phi_m1 = normal_cdf(-1.0);
        assert!((fit.misassign_out[0] - phi_m1).abs() < 1e-9);
        assert!((fit.misassign_out[1] - phi_m1).abs() < 1e-9);

        // unequal weights: Bayes ratio for window 0
        let fit = MixtureFit::from_components(
            vec![
                GaussianComponent {
                    weight: 0.9,
                    center: -1.0,
                    width: 1.0,
                },
                GaussianComponent {
                    weight: 0.1,
                    center: 1.0,
                    width: 1.0,
                },
            ],
            vec![(-12.0, 0.0), (0.0, 12.0)],
        )
        .unwrap();
        let expected = 0.1 * phi_m1 / (0.9 * (1.0 - phi_m1) + 0.1 * phi_m1);
        assert!((fit.misassign_in[0] - expected).abs() < 1e-9);
    }

    #[test]
    fn boundary_events_go_to_the_lower_window() {
        let fit = MixtureFit::from_components(
            vec![
                GaussianComponent {
                    weight: 0.5,
                    center: 1.0,
                    width: 0.2,
                },
                GaussianComponent {
                    weight: 0.5,
                    center: 3.0,
                    width: 0.2,
                },
            ],
            vec![(0.0, 2.0), (2.0, 4.0)],
        )
        .unwrap();
        let record = assign_counts(&[2.0, 0.0, 4.0, 5.0, -0.5], &fit);
        assert_eq!(record.per_photon_number[0].count, 2); // 2.0 and 0.0
        assert_eq!(record.per_photon_number[1].count, 1); // 4.0
        assert_eq!(record.overflow, 2);
    }

    #[test]
    fn empty_event_list_gives_zero_record() {
        let fit = MixtureFit::from_components(
            vec![GaussianComponent {
                weight: 1.0,
                center: 1.0,
                width: 0.5,
            }],
            vec![(0.0, 2.0)],
        )
        .unwrap();
        let record = assign_counts(&[], &fit);
        assert_eq!(record.total_events, 0);
        assert_eq!(record.per_photon_number[0].count, 0);
        assert_eq!(record.per_photon_number[0].rate, 0.0);
    }

    #[test]
    fn mixture_fit_rejects_sparse_histograms() {
        let hist = TesHistogram::new(vec![0.0, 1.0, 2.0, 3.0], vec![5, 0, 7]).unwrap();
        assert!(fit_mixture(&hist, 1).is_err());
    }

    #[test]
    fn allan_variance_basics() {
        let constant = vec![3.5; 64];
        let avar = allan_variance(&constant, &[1, 2, 8]).unwrap();
        assert!(avar.iter().all(|&v| v == 0.0));

        // a linear ramp drifts: variance grows with block size
        let ramp: Vec<f64> = (0..256).map(|i| i as f64 * 0.1).collect();
        let avar = allan_variance(&ramp, &[1, 4, 16]).unwrap();
        assert!(avar[0] < avar[1] && avar[1] < avar[2]);

        assert!(matches!(
            allan_variance(&ramp, &[200]),
            Err(Error::SeriesTooShort { .. })
        ));
        assert!(allan_variance(&ramp, &[0]).is_err());
    }

    #[test]
    fn histogram_validation() {
        assert!(TesHistogram::new(vec![0.0, 1.0], vec![1, 2]).is_err());
        assert!(TesHistogram::new(vec![0.0, 1.0, 0.5], vec![1, 2]).is_err());
        assert!(TesHistogram::from_events(&[], 10).is_err());
        let h = TesHistogram::from_events(&[1.0, 2.0, 2.5], 5).unwrap();
        assert_eq!(h.total(), 3);
    }
}
