//! Inner phase-field loops: a projected gradient step on the Lagrangian of
//! the normalized problem in `z = sqrt(d) f`, with the multiplier `mu` set
//! each step to the fractional (Rayleigh-quotient) value.

use crate::error::{check_len, NcasError, Result};
use crate::graph::Affinity;
use crate::spatial::{Smoother, SpatialDomain};

use super::ops::{dot, laplacian_into, project_in_place};

/// Output of one inner loop.
#[derive(Debug, Clone)]
pub struct InnerResult {
    /// `z / sqrt(d)`, rescaled so that `sum d f^2 = 1`.
    pub phase: Vec<f64>,
    /// `mu` at every inner step.
    pub mu_trace: Vec<f64>,
}

/// Shared pieces of the two inner problems.
struct Operator<'a> {
    w: &'a Affinity,
    sqrt_d: Vec<f64>,
    lambda: f64,
    smoother: &'a Smoother,
    // scratch
    f: Vec<f64>,
    lap: Vec<f64>,
}

impl<'a> Operator<'a> {
    fn new(w: &'a Affinity, d: &[f64], lambda: f64, smoother: &'a Smoother) -> Result<Self> {
        check_len(w.len(), d.len())?;
        if let Some(i) = d.iter().position(|&v| !(v > 0.0)) {
            return Err(NcasError::DegenerateGraph { node: i });
        }
        Ok(Self {
            w,
            sqrt_d: d.iter().map(|v| v.sqrt()).collect(),
            lambda,
            smoother,
            f: vec![0.0; d.len()],
            lap: vec![0.0; d.len()],
        })
    }

    /// Writes `-(lambda / sqrt d) k^ * Δ_w (k * (z / sqrt d))` into `out`
    /// and leaves `z / sqrt d` in `self.f`.
    fn coupling(&mut self, z: &[f64], out: &mut [f64]) {
        for ((f, zi), s) in self.f.iter_mut().zip(z).zip(&self.sqrt_d) {
            *f = zi / s;
        }
        if self.lambda == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        if self.smoother.is_identity() {
            laplacian_into(self.w, &self.f, &mut self.lap);
            for ((o, l), s) in out.iter_mut().zip(&self.lap).zip(&self.sqrt_d) {
                *o = -self.lambda * l / s;
            }
        } else {
            let kf = self.smoother.apply(&self.f);
            laplacian_into(self.w, &kf, &mut self.lap);
            let back = self.smoother.adjoint(&self.lap);
            for ((o, l), s) in out.iter_mut().zip(&back).zip(&self.sqrt_d) {
                *o = -self.lambda * l / s;
            }
        }
    }
}

/// Runs the projected iteration from `z0 = sqrt(d) f0`. `gradient` fills the
/// Lagrangian gradient (without the `-mu z` part) for the current `z`.
fn run_loop(
    sqrt_d: &[f64],
    f0: &[f64],
    tau: f64,
    inner_iters: usize,
    mut gradient: impl FnMut(&[f64], &mut [f64]),
) -> Result<InnerResult> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(NcasError::param(format!("step tau = {tau} must be positive")));
    }
    let n = sqrt_d.len();
    let total_degree: f64 = sqrt_d.iter().map(|s| s * s).sum();
    let mut z: Vec<f64> = f0.iter().zip(sqrt_d).map(|(f, s)| f * s).collect();
    let mut grad = vec![0.0; n];
    let mut mu_trace = Vec::with_capacity(inner_iters);
    for step in 0..inner_iters {
        gradient(&z, &mut grad);
        let norm2 = dot(&z, &z);
        let mu = dot(&z, &grad) / norm2;
        if !mu.is_finite() || !(norm2 > 0.0) {
            return Err(NcasError::Divergence(format!(
                "multiplier became non-finite at inner step {step} (|z|^2 = {norm2:e})"
            )));
        }
        mu_trace.push(mu);
        for (zi, gi) in z.iter_mut().zip(&grad) {
            *zi -= tau * (gi - mu * *zi);
        }
        project_in_place(&mut z, sqrt_d, total_degree)?;
    }
    let norm = dot(&z, &z).sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(NcasError::Divergence(format!(
            "phase collapsed or overflowed (|z| = {norm:e})"
        )));
    }
    let phase = z.iter().zip(sqrt_d).map(|(zi, s)| zi / (s * norm)).collect();
    Ok(InnerResult { phase, mu_trace })
}

/// Inner loop for the Dirichlet-regularized model: minimizes
/// `lambda sum w ((k*f)(x)-(k*f)(y))^2 + eta R_H1(f)` over the normalized,
/// degree-orthogonal phase fields.
#[allow(clippy::too_many_arguments)]
pub fn dinkelbach_h1(
    w: &Affinity,
    d: &[f64],
    f0: &[f64],
    lambda: f64,
    eta: f64,
    tau: f64,
    inner_iters: usize,
    smoother: &Smoother,
    domain: &SpatialDomain,
) -> Result<InnerResult> {
    check_len(w.len(), f0.len())?;
    check_len(w.len(), domain.len())?;
    let mut op = Operator::new(w, d, lambda, smoother)?;
    let sqrt_d = op.sqrt_d.clone();
    run_loop(&sqrt_d, f0, tau, inner_iters, |z, out| {
        op.coupling(z, out);
        if eta != 0.0 {
            let reg = domain.laplacian(&op.f);
            for ((o, r), s) in out.iter_mut().zip(&reg).zip(&op.sqrt_d) {
                *o -= eta * r / s;
            }
        }
    })
}

/// Inner loop for the split TV model: minimizes
/// `lambda sum w ((k*f)(x)-(k*f)(y))^2 + epsilon |f - g|^2` over the same set.
#[allow(clippy::too_many_arguments)]
pub fn dinkelbach_tv_inner(
    w: &Affinity,
    d: &[f64],
    anchor: &[f64],
    f0: &[f64],
    lambda: f64,
    epsilon: f64,
    tau: f64,
    inner_iters: usize,
    smoother: &Smoother,
) -> Result<InnerResult> {
    check_len(w.len(), f0.len())?;
    check_len(w.len(), anchor.len())?;
    let mut op = Operator::new(w, d, lambda, smoother)?;
    let sqrt_d = op.sqrt_d.clone();
    // epsilon g / sqrt(d) is constant over the loop
    let pull: Vec<f64> = anchor.iter().zip(&sqrt_d).map(|(g, s)| epsilon * g / s).collect();
    run_loop(&sqrt_d, f0, tau, inner_iters, |z, out| {
        op.coupling(z, out);
        if epsilon != 0.0 {
            for (((o, zi), s), p) in out.iter_mut().zip(z).zip(&op.sqrt_d).zip(&pull) {
                *o += epsilon * zi / (s * s) - p;
            }
        }
    })
}

/// Objective of the split-TV phase subproblem in terms of `f`:
/// `lambda sum w ((k*f)(x)-(k*f)(y))^2 + epsilon |f - g|^2`.
pub fn tv_phase_objective(
    w: &Affinity,
    phase: &[f64],
    anchor: &[f64],
    lambda: f64,
    epsilon: f64,
    smoother: &Smoother,
) -> Result<f64> {
    check_len(w.len(), phase.len())?;
    check_len(w.len(), anchor.len())?;
    let kf = smoother.apply(phase);
    let coupling = crate::spatial::graph_dirichlet(w, &kf);
    let fidelity: f64 = phase.iter().zip(anchor).map(|(f, g)| (f - g) * (f - g)).sum();
    Ok(lambda * coupling + epsilon * fidelity)
}

/// Upper bound on the spectral radius of the linear part of the inner
/// operator, by Gershgorin on `D^{-1/2} (D - W) D^{-1/2}` plus the
/// regularizer and penalty terms.
pub fn operator_norm_bound(
    w: &Affinity,
    d: &[f64],
    lambda: f64,
    smoother: &Smoother,
    regularizer: Option<(f64, &SpatialDomain)>,
    epsilon: f64,
) -> f64 {
    let min_d = d.iter().copied().fold(f64::INFINITY, f64::min);
    let coupling = if smoother.is_identity() {
        (0..w.len())
            .map(|x| {
                let (idx, wt) = w.row(x);
                idx.iter()
                    .zip(wt)
                    .map(|(&y, &v)| {
                        let y = y as usize;
                        if y == x {
                            (d[x] - v) / d[x]
                        } else {
                            v / (d[x] * d[y]).sqrt()
                        }
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    } else {
        // |K|^2 <= |K|_1 |K|_inf, and boundary replication at most folds
        // half the kernel onto one pixel per axis
        let gersh = (0..w.len())
            .map(|x| 2.0 * (d[x] - w.get(x, x)))
            .fold(0.0, f64::max);
        2.25 * gersh / min_d
    };
    let mut bound = 2.0 * lambda * coupling;
    if let Some((eta, domain)) = regularizer {
        bound += eta * domain.laplacian_bound() / min_d;
    }
    bound + epsilon / min_d
}
