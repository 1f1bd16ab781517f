//! ROF denoising `argmin_g weight * TV(g) + |g - f|^2 / 2` on a grid, by
//! accelerated projected gradient (FISTA) on the dual
//! `min_{|q| <= 1} |f + weight div q|^2 / 2`, with `g = f + weight div q`.

use crate::error::{check_len, NcasError, Result};
use crate::spatial::{grid_divergence, grid_gradient, total_variation};

const GAP_CHECK_EVERY: usize = 10;

/// Stopping rule for [`rof_denoise_with`].
#[derive(Debug, Clone, Copy)]
pub struct RofOptions {
    /// Relative duality gap `(P - D) / max(P, tiny)`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for RofOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 20_000,
        }
    }
}

/// Result of a ROF solve.
#[derive(Debug, Clone)]
pub struct RofSolution {
    pub g: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
}

/// `weight * TV(g) + |g - f|^2 / 2`.
pub fn rof_objective(width: usize, height: usize, g: &[f64], f: &[f64], weight: f64) -> f64 {
    let fid: f64 = g.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum();
    weight * total_variation(width, height, g) + 0.5 * fid
}

/// Dual objective `(|f|^2 - |f + div p|^2) / 2` for `|p| <= weight` pointwise.
pub fn rof_dual_objective(width: usize, height: usize, f: &[f64], px: &[f64], py: &[f64]) -> f64 {
    let div = grid_divergence(width, height, px, py);
    f.iter()
        .zip(&div)
        .map(|(a, d)| 0.5 * (a * a - (a + d) * (a + d)))
        .sum()
}

/// ROF minimizer with the default tolerance (relative gap `1e-8`, at most
/// 20000 steps).
pub fn rof_denoise(width: usize, height: usize, f: &[f64], weight: f64) -> Result<Vec<f64>> {
    Ok(rof_denoise_with(width, height, f, weight, RofOptions::default())?.g)
}

pub fn rof_denoise_with(
    width: usize,
    height: usize,
    f: &[f64],
    weight: f64,
    opts: RofOptions,
) -> Result<RofSolution> {
    check_len(width * height, f.len())?;
    if !(weight.is_finite() && weight >= 0.0) {
        return Err(NcasError::param(format!("ROF weight {weight} must be >= 0")));
    }
    let n = f.len();
    if weight == 0.0 {
        return Ok(RofSolution {
            g: f.to_vec(),
            gap: 0.0,
            iterations: 0,
        });
    }
    // the dual gradient is (8 weight^2)-Lipschitz on the forward-difference grid
    let step = 1.0 / (8.0 * weight);
    let mut qx = vec![0.0; n];
    let mut qy = vec![0.0; n];
    let mut yx = qx.clone();
    let mut yy = qy.clone();
    let mut t = 1.0f64;
    let mut g = f.to_vec();
    let (mut gap, primal) = dual_gap(width, height, f, weight, &qx, &qy, &mut g);
    let mut done = converged(gap, primal, opts.tol);
    let mut it = 0;
    while !done && it < opts.max_iters {
        let div = grid_divergence(width, height, &yx, &yy);
        let u: Vec<f64> = f.iter().zip(&div).map(|(a, d)| a + weight * d).collect();
        let (gx, gy) = grid_gradient(width, height, &u);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        for i in 0..n {
            let a = yx[i] + step * gx[i];
            let b = yy[i] + step * gy[i];
            let s = a.hypot(b).max(1.0);
            let (nx, ny) = (a / s, b / s);
            yx[i] = nx + momentum * (nx - qx[i]);
            yy[i] = ny + momentum * (ny - qy[i]);
            qx[i] = nx;
            qy[i] = ny;
        }
        t = t_next;
        it += 1;
        // the gap costs about as much as a step, so it is only checked periodically
        if it % GAP_CHECK_EVERY == 0 || it == opts.max_iters {
            let (next_gap, primal) = dual_gap(width, height, f, weight, &qx, &qy, &mut g);
            gap = next_gap;
            done = converged(gap, primal, opts.tol);
        }
    }
    Ok(RofSolution {
        g,
        gap,
        iterations: it,
    })
}

/// Writes the primal point of `q` into `g` and returns its duality gap and
/// primal value.
fn dual_gap(
    w: usize,
    h: usize,
    f: &[f64],
    weight: f64,
    qx: &[f64],
    qy: &[f64],
    g: &mut [f64],
) -> (f64, f64) {
    let div = grid_divergence(w, h, qx, qy);
    let mut dual = 0.0;
    for ((gi, fi), d) in g.iter_mut().zip(f).zip(&div) {
        *gi = fi + weight * d;
        dual += 0.5 * (fi * fi - *gi * *gi);
    }
    let primal = rof_objective(w, h, g, f, weight);
    (primal - dual, primal)
}

fn converged(gap: f64, primal: f64, tol: f64) -> bool {
    gap <= tol * primal.abs().max(f64::MIN_POSITIVE)
}
