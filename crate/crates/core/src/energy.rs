//! Density estimate, likelihood, and every energy the models minimize.
//!
//! All log-domain sums go through [`log_sum_exp`] so that small bandwidths
//! do not underflow the kernel values.

use std::f64::consts::{E, PI};

use crate::config::{Regularizer, SolverConfig};
use crate::error::{check_len, NcasError, Result};
use crate::field::{Features, ScalarField};
use crate::graph::Affinity;
use crate::spatial::{graph_dirichlet, Smoother, SpatialDomain};

/// `ln(sum_i exp(v_i))`, stable for any finite input. Empty input gives `-inf`.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = values.into_iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

fn check_bandwidth(h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(NcasError::param(format!("bandwidth h = {h} must be positive")));
    }
    Ok(())
}

/// `ln(sqrt(2 pi) h n)`, the per-unit-weight normalization term of `E1`.
#[inline]
pub fn log_normalizer(h: f64, n: usize) -> f64 {
    ((2.0 * PI).sqrt() * h * n as f64).ln()
}

/// Parzen-window density of `z` under the intensities of `image`.
pub fn kde_density(z: f64, image: &ScalarField, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let inv = 1.0 / (2.0 * h * h);
    let lse = log_sum_exp(image.values().iter().map(|&v| -(z - v) * (z - v) * inv));
    Ok((lse - log_normalizer(h, image.len())).exp())
}

/// Negative log-likelihood `L(h)` of the features under their own Parzen
/// estimate, summed over every node with the full node set as mixture.
pub fn negative_log_likelihood(features: Features<'_>, h: f64) -> Result<f64> {
    check_bandwidth(h)?;
    let n = features.len();
    let inv = 1.0 / (2.0 * h * h);
    let norm = log_normalizer(h, n);
    let mut total = 0.0;
    for x in 0..n {
        let lse = log_sum_exp((0..n).map(|y| -features.sq_dist(x, y) * inv));
        let log_p = lse - norm;
        if !log_p.is_finite() {
            return Err(NcasError::Numeric(format!(
                "density underflow at node {x} (h = {h})"
            )));
        }
        total -= log_p;
    }
    Ok(total)
}

/// As [`negative_log_likelihood`], but each node's mixture only runs over its
/// own neighbors in `w`'s pattern. Equal to the full version on a complete graph.
pub fn windowed_negative_log_likelihood(
    features: Features<'_>,
    w: &Affinity,
    h: f64,
) -> Result<f64> {
    check_bandwidth(h)?;
    check_len(w.len(), features.len())?;
    let inv = 1.0 / (2.0 * h * h);
    let norm = log_normalizer(h, w.len());
    let mut total = 0.0;
    for x in 0..w.len() {
        let (idx, _) = w.row(x);
        let lse = log_sum_exp(idx.iter().map(|&y| -features.sq_dist(x, y as usize) * inv));
        total -= lse - norm;
    }
    Ok(total)
}

/// `E1(h, w)`: expected complete-data cost plus the negative entropy of `w`,
/// with `0 ln 0 = 0`.
pub fn em_energy(h: f64, w: &Affinity, features: Features<'_>) -> Result<f64> {
    check_bandwidth(h)?;
    check_len(w.len(), features.len())?;
    let inv = 1.0 / (2.0 * h * h);
    let norm = log_normalizer(h, w.len());
    let mut total = 0.0;
    for x in 0..w.len() {
        let (idx, wt) = w.row(x);
        for (&y, &wxy) in idx.iter().zip(wt) {
            if wxy < 0.0 {
                return Err(NcasError::InvariantViolation(format!(
                    "negative weight at ({x},{y})"
                )));
            }
            if wxy == 0.0 {
                continue;
            }
            total += wxy * (features.sq_dist(x, y as usize) * inv + norm + wxy.ln());
        }
    }
    Ok(total)
}

/// Lower bound of `E1` over row-stochastic `w` and `h >= h_min`:
/// `n ln(sqrt(2 pi) n h_min) - n^2 / e`.
pub fn em_energy_lower_bound(n: usize, h_min: f64) -> f64 {
    let nf = n as f64;
    nf * log_normalizer(h_min, n) - nf * nf / E
}

/// `sum_xy w(x,y) ((k*f)(x) - (k*f)(y))^2`.
pub fn coupling_energy(w: &Affinity, smoothed_phase: &[f64]) -> Result<f64> {
    check_len(w.len(), smoothed_phase.len())?;
    Ok(graph_dirichlet(w, smoothed_phase))
}

/// Total model energy: `E1 + lambda * coupling + eta * R(f)`.
#[allow(clippy::too_many_arguments)]
pub fn total_energy(
    phase: &[f64],
    w: &Affinity,
    h: f64,
    features: Features<'_>,
    config: &SolverConfig,
    regularizer: Regularizer,
    domain: &SpatialDomain,
    smoother: &Smoother,
) -> Result<f64> {
    check_len(w.len(), phase.len())?;
    let mut total = em_energy(h, w, features)?;
    if config.lambda != 0.0 {
        total += config.lambda * coupling_energy(w, &smoother.apply(phase))?;
    }
    if config.eta != 0.0 {
        total += config.eta * domain.energy(phase, regularizer)?;
    }
    Ok(total)
}

/// `J(u) = sum_x ln sum_y exp(u(x,y))` for a row-major `rows x cols` matrix.
pub fn log_partition(u: &[f64], rows: usize, cols: usize) -> Result<f64> {
    check_u(u, rows, cols)?;
    Ok(u.chunks(cols).map(|r| log_sum_exp(r.iter().copied())).sum())
}

/// `<u, w> - <w, ln w>` for a row-stochastic `w` (the conjugate-side objective).
pub fn entropy_dual_objective(u: &[f64], w: &[f64]) -> Result<f64> {
    check_len(u.len(), w.len())?;
    Ok(u.iter()
        .zip(w)
        .map(|(&uv, &wv)| if wv > 0.0 { wv * (uv - wv.ln()) } else { 0.0 })
        .sum())
}

/// Row-wise softmax of `u`.
pub fn row_softmax(u: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    check_u(u, rows, cols)?;
    let mut out = Vec::with_capacity(u.len());
    for r in u.chunks(cols) {
        let lse = log_sum_exp(r.iter().copied());
        out.extend(r.iter().map(|v| (v - lse).exp()));
    }
    Ok(out)
}

/// `|J(u) - J**(u)|`, where `J**` is evaluated at its maximizer, the row softmax.
pub fn entropy_dual_gap(u: &[f64], rows: usize, cols: usize) -> Result<f64> {
    let j = log_partition(u, rows, cols)?;
    let w = row_softmax(u, rows, cols)?;
    let jss = entropy_dual_objective(u, &w)?;
    Ok((j - jss).abs())
}

fn check_u(u: &[f64], rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(NcasError::param("matrix must be nonempty"));
    }
    check_len(rows * cols, u.len())?;
    if u.iter().any(|v| !v.is_finite()) {
        return Err(NcasError::Numeric("matrix has non-finite entries".into()));
    }
    Ok(())
}
