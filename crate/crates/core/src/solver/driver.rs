//! Outer alternation of the two models: similarity, bandwidth, then the
//! phase field (and, for TV, its denoised anchor).

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::baselines::{gradient_magnitude, pre_ncastv_affinity};
use crate::config::{Regularizer, SolverConfig};
use crate::energy::total_energy;
use crate::error::{NcasError, Result};
use crate::field::{Features, Input, ScalarField};
use crate::graph::{Affinity, Neighborhood};
use crate::similarity::{degree, project_similarity, update_bandwidth};
use crate::spatial::{Smoother, SpatialDomain};

use super::dinkelbach::{dinkelbach_h1, dinkelbach_tv_inner, operator_norm_bound, InnerResult};
use super::ops::{dot, project_in_place, threshold_labels};
use super::rof::rof_denoise;

/// Fraction of the stability limit `2 / rho` used when the configured step
/// is too large for the operator at hand.
pub const STABLE_STEP_FRACTION: f64 = 0.95;

#[derive(Debug, Clone)]
pub struct SegmentationResult {
    pub labels: Vec<u8>,
    pub phase: Vec<f64>,
    /// Bandwidth after each outer iteration.
    pub h_trace: Vec<f64>,
    /// Total model energy after each outer iteration.
    pub energy_trace: Vec<f64>,
    /// Relative phase change `|f^{t+1} - f^t|^2 / |f^t|^2` per outer iteration.
    pub change_trace: Vec<f64>,
    /// Inner-loop multipliers of the last outer iteration.
    pub mu_trace: Vec<f64>,
    pub iterations_run: usize,
    /// Whether the relative phase change fell below `outer_tol`.
    pub converged: bool,
    /// Inner step actually used in the last outer iteration.
    pub step: f64,
    /// Degree of the final similarity.
    pub degree: Vec<f64>,
}

impl SegmentationResult {
    pub fn final_h(&self) -> Option<f64> {
        self.h_trace.last().copied()
    }

    pub fn final_energy(&self) -> Option<f64> {
        self.energy_trace.last().copied()
    }
}

/// Step used by the drivers: the configured `tau`, reduced to
/// `STABLE_STEP_FRACTION * 2 / rho` when that is smaller.
pub fn effective_step(tau: f64, operator_bound: f64) -> f64 {
    if operator_bound > 0.0 {
        tau.min(STABLE_STEP_FRACTION * 2.0 / operator_bound)
    } else {
        tau
    }
}

/// Starting phase for the first inner loop: the constant field projected
/// onto `sum sqrt(d) z = 0`. The constant lies entirely along `sqrt(d)`, so
/// when the projection vanishes a seeded Gaussian field is projected instead.
pub fn initial_phase(start: &[f64], d: &[f64], seed: u64) -> Result<Vec<f64>> {
    let sqrt_d: Vec<f64> = d.iter().map(|v| v.sqrt()).collect();
    let total: f64 = d.iter().sum();
    let mut z: Vec<f64> = start.iter().zip(&sqrt_d).map(|(f, s)| f * s).collect();
    let before = dot(&z, &z).sqrt();
    project_in_place(&mut z, &sqrt_d, total)?;
    if dot(&z, &z).sqrt() <= 1e-8 * before {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        z = (0..d.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        project_in_place(&mut z, &sqrt_d, total)?;
    }
    Ok(z.iter().zip(&sqrt_d).map(|(zi, s)| zi / s).collect())
}

/// Spatial graph for point-set regularization: the symmetric kNN pattern
/// with weight `1/k` on every edge and no self weight.
pub fn point_regularizer(features: Features<'_>, k: usize) -> Result<Affinity> {
    let graph = Arc::new(Neighborhood::knn(features, k)?);
    let kf = k as f64;
    Affinity::from_fn(graph, |x, y| if x == y { 0.0 } else { 1.0 / kf })
}

/// Neighborhood used by the similarity for an input.
pub fn similarity_graph(input: Input<'_>, config: &SolverConfig) -> Result<Arc<Neighborhood>> {
    Ok(Arc::new(match input {
        Input::Image(img) => {
            Neighborhood::grid_window(img.width(), img.height(), config.window_radius)?
        }
        Input::Points(p) => Neighborhood::knn(p.features(), config.knn)?,
    }))
}

enum Phase {
    H1,
    Tv,
}

enum Similarity {
    Adaptive,
    /// Edge-based weights on gradient magnitudes with unit diagonal.
    EdgeBased,
}

/// Dirichlet-regularized model on an image or a point set.
pub fn run_ncash1(input: Input<'_>, config: &SolverConfig) -> Result<SegmentationResult> {
    run(input, None, config, Phase::H1, Similarity::Adaptive)
}

/// Split-TV model on an image.
pub fn run_ncastv(input: Input<'_>, config: &SolverConfig) -> Result<SegmentationResult> {
    run(input, None, config, Phase::Tv, Similarity::Adaptive)
}

/// Split-TV model whose similarity compares gradient magnitudes (filter
/// scale `sigma`) instead of intensities.
pub fn run_pre_ncastv(
    image: &ScalarField,
    config: &SolverConfig,
    sigma: f64,
) -> Result<SegmentationResult> {
    let edges = gradient_magnitude(image, sigma)?;
    run(
        Input::Image(image),
        Some(edges),
        config,
        Phase::Tv,
        Similarity::EdgeBased,
    )
}

fn run(
    input: Input<'_>,
    edge_features: Option<ScalarField>,
    config: &SolverConfig,
    phase_kind: Phase,
    similarity: Similarity,
) -> Result<SegmentationResult> {
    config.validate()?;
    let n = input.len();
    if n < 2 {
        return Err(NcasError::param("need at least two nodes to segment"));
    }
    let grid = match input {
        Input::Image(img) => Some((img.width(), img.height())),
        Input::Points(_) => None,
    };
    if matches!(phase_kind, Phase::Tv) && grid.is_none() {
        return Err(NcasError::param("the TV model needs a pixel grid"));
    }
    let features = match &edge_features {
        Some(s) => s.features(),
        None => input.features(),
    };
    let graph = similarity_graph(input, config)?;
    let smoother = Smoother::new(config.kernel, grid)?;
    let domain = match grid {
        Some((width, height)) => SpatialDomain::Grid { width, height },
        None => SpatialDomain::Graph(point_regularizer(input.features(), config.knn)?),
    };
    let regularizer = match phase_kind {
        Phase::H1 => Regularizer::H1,
        Phase::Tv => Regularizer::Tv,
    };

    let mut f = vec![1.0; n];
    let mut g = vec![1.0; n];
    let mut h = config.initial_bandwidth();
    let mut result = SegmentationResult {
        labels: Vec::new(),
        phase: Vec::new(),
        h_trace: Vec::new(),
        energy_trace: Vec::new(),
        change_trace: Vec::new(),
        mu_trace: Vec::new(),
        iterations_run: 0,
        converged: false,
        step: config.tau,
        degree: Vec::new(),
    };

    for t in 0..config.outer_iters {
        let w = match similarity {
            Similarity::Adaptive => project_similarity(
                features,
                &f,
                h,
                config.lambda,
                &graph,
                &smoother,
                config.projection_sweeps,
            )?,
            Similarity::EdgeBased => pre_ncastv_affinity(features, &f, h, config.lambda, &graph)?,
        };
        let d = degree(&w)?;
        h = update_bandwidth(&w, features, config.h_min, config.h_max)?;

        let start = if t == 0 {
            initial_phase(&f, &d, config.seed)?
        } else {
            f.clone()
        };
        let InnerResult { phase, mu_trace } = match phase_kind {
            Phase::H1 => {
                let bound = operator_norm_bound(
                    &w,
                    &d,
                    config.lambda,
                    &smoother,
                    Some((config.eta, &domain)),
                    0.0,
                );
                result.step = effective_step(config.tau, bound);
                dinkelbach_h1(
                    &w,
                    &d,
                    &start,
                    config.lambda,
                    config.eta,
                    result.step,
                    config.inner_iters,
                    &smoother,
                    &domain,
                )?
            }
            Phase::Tv => {
                let bound = operator_norm_bound(
                    &w,
                    &d,
                    config.lambda,
                    &smoother,
                    None,
                    config.epsilon_penalty,
                );
                result.step = effective_step(config.tau, bound);
                dinkelbach_tv_inner(
                    &w,
                    &d,
                    &g,
                    &start,
                    config.lambda,
                    config.epsilon_penalty,
                    result.step,
                    config.inner_iters,
                    &smoother,
                )?
            }
        };

        let prev_norm2 = dot(&f, &f);
        let change: f64 = phase.iter().zip(&f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let rel_change = change / prev_norm2;
        f = phase;
        if let (Phase::Tv, Some((width, height))) = (&phase_kind, grid) {
            g = if config.epsilon_penalty > 0.0 {
                rof_denoise(width, height, &f, config.eta / (2.0 * config.epsilon_penalty))?
            } else {
                f.clone()
            };
        }

        let energy = total_energy(&f, &w, h, features, config, regularizer, &domain, &smoother)?;
        if !energy.is_finite() {
            return Err(NcasError::Divergence(format!(
                "energy is not finite after outer iteration {t}"
            )));
        }
        result.h_trace.push(h);
        result.energy_trace.push(energy);
        result.change_trace.push(rel_change);
        result.mu_trace = mu_trace;
        result.iterations_run = t + 1;
        result.degree = d;
        if rel_change < config.outer_tol {
            result.converged = true;
            break;
        }
    }
    result.labels = threshold_labels(&f);
    result.phase = f;
    Ok(result)
}
