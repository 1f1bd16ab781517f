//! Fixed-similarity normalized cut and the edge-based similarity variants.

use std::sync::Arc;

use crate::eigen::ncut_eigen;
use crate::error::{check_len, NcasError, Result};
use crate::field::{Features, Input, ScalarField};
use crate::graph::{Affinity, Neighborhood};
use crate::similarity::symmetrize;
use crate::solver::threshold_labels;
use crate::spatial::{convolve_separable, gaussian_taps};

pub use crate::eigen::{ncut_eigen_with, EigenOptions, NcutSolution};

/// Default scale of the derivative-of-Gaussian edge filter, in pixels.
pub const DEFAULT_EDGE_SIGMA: f64 = 1.0;

/// `exp(-|I(x) - I(y)|^2 / (2 h^2))` on every stored pair, 1 on the diagonal.
pub fn gaussian_affinity(
    features: Features<'_>,
    graph: &Arc<Neighborhood>,
    h: f64,
) -> Result<Affinity> {
    check_h(h)?;
    check_len(graph.len(), features.len())?;
    let inv = 1.0 / (2.0 * h * h);
    Affinity::from_fn(graph.clone(), |x, y| {
        if x == y {
            1.0
        } else {
            (-features.sq_dist(x, y) * inv).exp()
        }
    })
}

/// Labels, phase and eigenvalue of a plain normalized cut.
#[derive(Debug, Clone)]
pub struct NcutResult {
    pub labels: Vec<u8>,
    pub phase: Vec<f64>,
    pub eigenvalue: f64,
}

/// Normalized cut with fixed Gaussian weights of bandwidth `h` over `graph`.
pub fn run_ncut(input: Input<'_>, graph: &Arc<Neighborhood>, h: f64) -> Result<NcutResult> {
    let w = gaussian_affinity(input.features(), graph, h)?;
    cut(&w)
}

/// Normalized cut of a given affinity.
pub fn cut(w: &Affinity) -> Result<NcutResult> {
    let sol = ncut_eigen(w)?;
    Ok(NcutResult {
        labels: threshold_labels(&sol.phase),
        phase: sol.phase,
        eigenvalue: sol.eigenvalue,
    })
}

/// Derivative-of-Gaussian taps on `[-ceil(3 sigma), ceil(3 sigma)]`, scaled so
/// that a unit ramp has unit response.
pub fn gaussian_derivative_taps(sigma: f64) -> Vec<f64> {
    let smooth = gaussian_taps(sigma);
    let r = (smooth.len() / 2) as isize;
    let mut taps: Vec<f64> = (-r..=r)
        .zip(&smooth)
        .map(|(i, g)| i as f64 * g)
        .collect();
    // with out[x] = sum_k t[k] f[x - (k - r)], a ramp f = x gives -sum_i i t_i
    let moment: f64 = (-r..=r).zip(&taps).map(|(i, t)| i as f64 * t).sum();
    taps.iter_mut().for_each(|t| *t /= -moment);
    taps
}

/// `|(grad G_sigma * I)(x)|` per pixel, replicate boundary.
pub fn gradient_magnitude(image: &ScalarField, sigma: f64) -> Result<ScalarField> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(NcasError::param(format!("sigma = {sigma} must be positive")));
    }
    let (w, h) = (image.width(), image.height());
    let smooth = gaussian_taps(sigma);
    let deriv = gaussian_derivative_taps(sigma);
    let gx = convolve_separable(image.values(), w, h, &deriv, &smooth);
    let gy = convolve_separable(image.values(), w, h, &smooth, &deriv);
    let mag = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    ScalarField::new(w, h, mag)
}

/// Edge-based weights `exp(-(S(x) - S(y))^2 / (2 h^2))`, unit diagonal, with
/// `S` the gradient magnitude at scale `sigma`.
pub fn prencut_affinity(
    image: &ScalarField,
    h: f64,
    sigma: f64,
    graph: &Arc<Neighborhood>,
) -> Result<Affinity> {
    let s = gradient_magnitude(image, sigma)?;
    gaussian_affinity(s.features(), graph, h)
}

/// Edge-based adaptive weights on precomputed edge features `S`: off-diagonal
/// entries `exp(-(S(x)-S(y))^2/(2h^2) - lambda (f(x)-f(y))^2)` divided by the
/// row sum of the same expression (self term included), the diagonal set to
/// 1, then symmetrized. Rows therefore sum to more than 1.
pub fn pre_ncastv_affinity(
    edges: Features<'_>,
    phase: &[f64],
    h: f64,
    lambda: f64,
    graph: &Arc<Neighborhood>,
) -> Result<Affinity> {
    check_h(h)?;
    check_len(graph.len(), edges.len())?;
    check_len(graph.len(), phase.len())?;
    let inv = 1.0 / (2.0 * h * h);
    let mut weights = vec![0.0; graph.nnz()];
    for x in 0..graph.len() {
        let range = graph.range(x);
        let row = &mut weights[range.clone()];
        let mut max = f64::NEG_INFINITY;
        for (slot, p) in row.iter_mut().zip(range.clone()) {
            let y = graph.column(p);
            let dp = phase[x] - phase[y];
            *slot = -edges.sq_dist(x, y) * inv - lambda * dp * dp;
            max = max.max(*slot);
        }
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for (v, p) in row.iter_mut().zip(range) {
            *v = if graph.column(p) == x { 1.0 } else { *v / sum };
        }
    }
    symmetrize(&Affinity::new(graph.clone(), weights)?)
}

fn check_h(h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(NcasError::param(format!("bandwidth h = {h} must be positive")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_no_edges() {
        let img = ScalarField::constant(7, 5, 90.0).unwrap();
        let s = gradient_magnitude(&img, 1.0).unwrap();
        assert!(s.values().iter().all(|v| v.abs() < 1e-12));
        let g = Arc::new(Neighborhood::grid_window(7, 5, 2).unwrap());
        let w = prencut_affinity(&img, 3.0, 1.0, &g).unwrap();
        assert!(w.weights().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn ramp_slope_is_recovered() {
        let img = ScalarField::from_fn(20, 20, |x, _| 2.5 * x as f64).unwrap();
        let s = gradient_magnitude(&img, 1.0).unwrap();
        for y in 4..16 {
            for x in 4..16 {
                assert!((s.get(x, y) - 2.5).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn two_pixel_edge_weight() {
        let edges = [0.0, 4.0];
        let f = Features::new(&edges, 1).unwrap();
        let g = Arc::new(Neighborhood::complete(2).unwrap());
        let w = gaussian_affinity(f, &g, 4.0).unwrap();
        assert!((w.get(0, 1) - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(w.get(0, 0), 1.0);
    }

    #[test]
    fn pre_ncastv_three_pixels() {
        let edges = [0.0, 1.0, 3.0];
        let f = Features::new(&edges, 1).unwrap();
        let g = Arc::new(Neighborhood::complete(3).unwrap());
        let phase = [0.1, -0.2, 0.4];
        let (h, lambda) = (2.0, 1.5);
        let w = pre_ncastv_affinity(f, &phase, h, lambda, &g).unwrap();
        let e = |x: usize, y: usize| {
            let ds = edges[x] - edges[y];
            let dp = phase[x] - phase[y];
            (-ds * ds / (2.0 * h * h) - lambda * dp * dp).exp()
        };
        let raw = |x: usize, y: usize| {
            if x == y {
                1.0
            } else {
                e(x, y) / (0..3).map(|z| e(x, z)).sum::<f64>()
            }
        };
        for x in 0..3 {
            for y in 0..3 {
                let expected = 0.5 * (raw(x, y) + raw(y, x));
                assert!((w.get(x, y) - expected).abs() < 1e-15);
            }
        }
    }
}
