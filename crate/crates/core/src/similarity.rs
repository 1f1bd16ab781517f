//! Adaptive similarity: the closed-form row-stochastic weights, their
//! projection onto symmetric weights, and the bandwidth update.

use std::sync::Arc;

use crate::energy::em_energy;
use crate::error::{check_len, NcasError, Result};
use crate::field::Features;
use crate::graph::{Affinity, Neighborhood};
use crate::spatial::Smoother;

/// Row-stochastic similarity
/// `w(x,y) ∝ exp(-|I(x)-I(y)|^2 / (2h^2) - lambda ((k*f)(x) - (k*f)(y))^2)`
/// over each node's window. The row maximum is subtracted before
/// exponentiating, so no row can overflow or vanish.
pub fn update_similarity(
    features: Features<'_>,
    phase: &[f64],
    h: f64,
    lambda: f64,
    graph: &Arc<Neighborhood>,
    smoother: &Smoother,
) -> Result<Affinity> {
    if !(h.is_finite() && h > 0.0) {
        return Err(NcasError::param(format!("bandwidth h = {h} must be positive")));
    }
    check_len(graph.len(), features.len())?;
    check_len(graph.len(), phase.len())?;
    let smoothed;
    let kf: &[f64] = if smoother.is_identity() {
        phase
    } else {
        smoothed = smoother.apply(phase);
        &smoothed
    };
    let inv = 1.0 / (2.0 * h * h);
    let mut weights = vec![0.0; graph.nnz()];
    for x in 0..graph.len() {
        let range = graph.range(x);
        if range.is_empty() {
            return Err(NcasError::Structural(format!("node {x} has an empty window")));
        }
        let row = &mut weights[range.clone()];
        let mut max = f64::NEG_INFINITY;
        for (slot, p) in row.iter_mut().zip(range) {
            let y = graph.column(p);
            let dp = kf[x] - kf[y];
            let e = -features.sq_dist(x, y) * inv - lambda * dp * dp;
            *slot = e;
            max = max.max(e);
        }
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Affinity::new(graph.clone(), weights)
}

/// Euclidean projection onto symmetric weights: `(w(x,y) + w(y,x)) / 2`.
pub fn symmetrize(w: &Affinity) -> Result<Affinity> {
    let g = w.graph();
    let src = w.weights();
    let weights = (0..src.len())
        .map(|p| 0.5 * (src[p] + src[g.mirror(p)]))
        .collect();
    Affinity::new(g.clone(), weights)
}

/// Divides every row by its sum.
pub fn row_normalize(w: &Affinity) -> Result<Affinity> {
    let d = degree(w)?;
    Affinity::from_fn(w.graph().clone(), |x, y| w.get(x, y) / d[x])
}

/// Row sums `d(x) = sum_y w(x,y)`; a zero row means an isolated node.
pub fn degree(w: &Affinity) -> Result<Vec<f64>> {
    let d = w.degree();
    if let Some(node) = d.iter().position(|&v| !(v > 0.0)) {
        return Err(NcasError::DegenerateGraph { node });
    }
    Ok(d.to_vec())
}

/// Largest `|d(x) - 1|`.
pub fn max_row_deviation(w: &Affinity) -> f64 {
    w.degree().iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max)
}

/// Similarity update followed by `sweeps` alternating projections
/// (row normalization, then symmetrization). The first normalization is the
/// closed form of [`update_similarity`].
pub fn project_similarity(
    features: Features<'_>,
    phase: &[f64],
    h: f64,
    lambda: f64,
    graph: &Arc<Neighborhood>,
    smoother: &Smoother,
    sweeps: usize,
) -> Result<Affinity> {
    let mut w = symmetrize(&update_similarity(features, phase, h, lambda, graph, smoother)?)?;
    for _ in 1..sweeps {
        w = symmetrize(&row_normalize(&w)?)?;
    }
    Ok(w)
}

/// `sum_xy w(x,y) |I(x) - I(y)|^2`.
pub fn weighted_spread(w: &Affinity, features: Features<'_>) -> Result<f64> {
    check_len(w.len(), features.len())?;
    let mut acc = 0.0;
    for x in 0..w.len() {
        let (idx, wt) = w.row(x);
        for (&y, &wxy) in idx.iter().zip(wt) {
            acc += wxy * features.sq_dist(x, y as usize);
        }
    }
    Ok(acc)
}

/// Bandwidth minimizing `E1(., w)`: `h^2 = sum w |dI|^2 / n`, clamped to
/// `[h_min^2, h_max^2]`.
pub fn update_bandwidth(w: &Affinity, features: Features<'_>, h_min: f64, h_max: f64) -> Result<f64> {
    if !(h_min > 0.0 && h_min <= h_max && h_max.is_finite()) {
        return Err(NcasError::param(format!(
            "bandwidth bounds [{h_min}, {h_max}] are invalid"
        )));
    }
    let h2 = weighted_spread(w, features)? / w.len() as f64;
    Ok(h2.clamp(h_min * h_min, h_max * h_max).sqrt())
}

/// Result of the alternating bandwidth fit.
#[derive(Debug, Clone)]
pub struct BandwidthFit {
    pub h: f64,
    pub w: Affinity,
    /// Bandwidth after each round, starting with `h0`.
    pub h_trace: Vec<f64>,
    /// `E1(h^t, w^t)` after each round, starting with `E1(h0, w^0)`.
    pub energy_trace: Vec<f64>,
}

/// Alternates the closed-form similarity (no phase coupling) with the
/// bandwidth update for `iters` rounds.
pub fn em_fit_bandwidth(
    features: Features<'_>,
    graph: &Arc<Neighborhood>,
    h0: f64,
    iters: usize,
    h_min: f64,
    h_max: f64,
) -> Result<BandwidthFit> {
    if !(h_min..=h_max).contains(&h0) {
        return Err(NcasError::param(format!(
            "h0 = {h0} outside [{h_min}, {h_max}]"
        )));
    }
    let phase = vec![0.0; features.len()];
    let smoother = Smoother::Identity;
    let mut h = h0;
    let mut w = update_similarity(features, &phase, h, 0.0, graph, &smoother)?;
    let mut h_trace = vec![h];
    let mut energy_trace = vec![em_energy(h, &w, features)?];
    for _ in 0..iters {
        h = update_bandwidth(&w, features, h_min, h_max)?;
        w = update_similarity(features, &phase, h, 0.0, graph, &smoother)?;
        h_trace.push(h);
        energy_trace.push(em_energy(h, &w, features)?);
    }
    Ok(BandwidthFit {
        h,
        w,
        h_trace,
        energy_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{PointSet, ScalarField};

    fn line(values: &[f64]) -> PointSet {
        PointSet::new(1, values.to_vec(), None).unwrap()
    }

    #[test]
    fn constant_features_give_uniform_rows() {
        let img = ScalarField::constant(4, 4, 30.0).unwrap();
        let g = Arc::new(Neighborhood::grid_window(4, 4, 1).unwrap());
        let w = update_similarity(
            img.features(),
            &[0.7; 16],
            5.0,
            1.0,
            &g,
            &Smoother::Identity,
        )
        .unwrap();
        for x in 0..16 {
            let (idx, wt) = w.row(x);
            for &v in wt {
                assert!((v - 1.0 / idx.len() as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_node_softmax() {
        let pts = line(&[0.0, 1.0]);
        let g = Arc::new(Neighborhood::complete(2).unwrap());
        let w = update_similarity(pts.features(), &[3.0, -2.0], 1.0, 0.0, &g, &Smoother::Identity)
            .unwrap();
        // softmax(0, -1/2) computed directly
        let a = 1.0 / (1.0 + (-0.5f64).exp());
        assert!((w.get(1, 1) - a).abs() < 1e-15);
        assert!((w.get(1, 0) - (1.0 - a)).abs() < 1e-15);
        assert!((w.get(1, 1) - 0.6225).abs() < 1e-4);
    }

    #[test]
    fn symmetrize_averages_and_is_idempotent() {
        let g = Arc::new(Neighborhood::complete(2).unwrap());
        let w = Affinity::new(g, vec![0.8, 0.2, 0.4, 0.6]).unwrap();
        let s = symmetrize(&w).unwrap();
        assert!((s.get(0, 1) - 0.3).abs() < 1e-15);
        assert_eq!(s.get(0, 1), s.get(1, 0));
        assert_eq!(symmetrize(&s).unwrap().weights(), s.weights());
    }

    #[test]
    fn zero_row_is_degenerate() {
        let g = Arc::new(Neighborhood::complete(2).unwrap());
        let w = Affinity::new(g, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(degree(&w), Err(NcasError::DegenerateGraph { node: 0 })));
    }

    #[test]
    fn bandwidth_of_two_points() {
        let pts = line(&[0.0, 10.0]);
        let g = Arc::new(Neighborhood::complete(2).unwrap());
        let w = Affinity::new(g, vec![0.5; 4]).unwrap();
        let h = update_bandwidth(&w, pts.features(), 0.1, 100.0).unwrap();
        assert!((h - 50f64.sqrt()).abs() < 1e-14);
        let h = update_bandwidth(&w, pts.features(), 0.1, 2.0).unwrap();
        assert_eq!(h, 2.0);
    }

    #[test]
    fn constant_features_collapse_to_h_min() {
        let pts = line(&[4.0; 6]);
        let g = Arc::new(Neighborhood::complete(6).unwrap());
        let fit = em_fit_bandwidth(pts.features(), &g, 3.0, 1, 0.25, 10.0).unwrap();
        assert_eq!(fit.h, 0.25);
    }

    #[test]
    fn zero_rounds_returns_initial_state() {
        let pts = line(&[0.0, 1.0, 5.0]);
        let g = Arc::new(Neighborhood::complete(3).unwrap());
        let fit = em_fit_bandwidth(pts.features(), &g, 2.0, 0, 0.1, 10.0).unwrap();
        assert_eq!(fit.h, 2.0);
        let direct =
            update_similarity(pts.features(), &[0.0; 3], 2.0, 0.0, &g, &Smoother::Identity).unwrap();
        assert_eq!(fit.w.weights(), direct.weights());
        assert!(em_fit_bandwidth(pts.features(), &g, 20.0, 1, 0.1, 10.0).is_err());
    }

    #[test]
    fn extra_sweeps_tighten_row_sums() {
        let pts = line(&[0.0, 0.5, 1.0, 4.0, 4.2, 9.0]);
        let g = Arc::new(Neighborhood::complete(6).unwrap());
        let one = project_similarity(pts.features(), &[0.0; 6], 1.0, 0.0, &g, &Smoother::Identity, 1)
            .unwrap();
        let many =
            project_similarity(pts.features(), &[0.0; 6], 1.0, 0.0, &g, &Smoother::Identity, 30)
                .unwrap();
        assert!(one.is_symmetric() && many.is_symmetric());
        assert!(max_row_deviation(&many) < max_row_deviation(&one));
    }
}
