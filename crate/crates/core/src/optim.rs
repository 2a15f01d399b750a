//! Derivative-free numerical routines: golden-section search, bisection,
//! and a Nelder-Mead simplex.

use crate::error::{Error, Result};

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(x_max, f_max)` once the bracket shrinks below `x_tol`.
pub(crate) fn golden_section_max(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iter {
        if (hi - lo).abs() <= x_tol {
            break;
        }
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Bisection for a root of `f` on `[lo, hi]`, given `f(lo)` and `f(hi)` of
/// opposite sign (either orientation).
pub(crate) fn bisect_root(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    max_iter: usize,
    context: &str,
) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoConvergence {
            context: format!("{context}: no sign change in bracket"),
            iterations: 0,
            lo,
            hi,
        });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 || (hi - lo).abs() <= x_tol {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    if (hi - lo).abs() <= x_tol * 4.0 {
        Ok(0.5 * (lo + hi))
    } else {
        Err(Error::NoConvergence {
            context: context.to_string(),
            iterations: max_iter,
            lo,
            hi,
        })
    }
}

/// Outcome of a Nelder-Mead minimization.
#[derive(Debug, Clone)]
pub(crate) struct SimplexOutcome {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead simplex minimization of `f` starting from `x0` with
/// per-coordinate initial steps `steps`.
pub(crate) fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    f_tol: f64,
    max_iter: usize,
) -> SimplexOutcome {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        // order ascending by value
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        let spread = (values[worst] - values[best]).abs();
        if spread <= f_tol * (1.0 + values[best].abs()) {
            converged = true;
            break;
        }

        // centroid of all but the worst
        let mut centroid = vec![0.0; dim];
        for (idx, v) in simplex.iter().enumerate() {
            if idx == worst {
                continue;
            }
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&simplex[worst])
            .map(|(c, w)| c + ALPHA * (c - w))
            .collect();
        let f_reflect = f(&reflect);

        if f_reflect < values[best] {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + GAMMA * (c - w))
                .collect();
            let f_expand = f(&expand);
            if f_expand < f_reflect {
                simplex[worst] = expand;
                values[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                values[worst] = f_reflect;
            }
        } else if f_reflect < values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = f_reflect;
        } else {
            let contract: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + RHO * (w - c))
                .collect();
            let f_contract = f(&contract);
            if f_contract < values[worst] {
                simplex[worst] = contract;
                values[worst] = f_contract;
            } else {
                // shrink toward the best vertex
                let best_point = simplex[best].clone();
                for (idx, v) in simplex.iter_mut().enumerate() {
                    if idx == best {
                        continue;
                    }
                    for (x, b) in v.iter_mut().zip(&best_point) {
                        *x = b + SIGMA * (*x - b);
                    }
                    values[idx] = f(v);
                }
            }
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    SimplexOutcome {
        x: simplex[best].clone(),
        fx: values[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| 1.0 - (x - 0.7).powi(2), 0.0, 2.0, 1e-10, 200);
        assert!((x - 0.7).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bisect_finds_root() {
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0, 1e-12, 200, "sqrt2").unwrap();
        assert!((r - 2.0_f64.sqrt()).abs() < 1e-10);
        assert!(bisect_root(|x| x + 10.0, 0.0, 1.0, 1e-12, 100, "none").is_err());
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let out = nelder_mead(f, &[-1.2, 1.0], &[0.5, 0.5], 1e-14, 2000);
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-4, "{:?}", out.x);
        assert!((out.x[1] - 1.0).abs() < 1e-4);
    }
}
