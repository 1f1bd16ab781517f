//! Second generalized eigenvector of `(D - W) f = lambda D f`.
//!
//! Works on `M = D^{-1/2} W D^{-1/2}`, whose top eigenvector is `sqrt(d)`.
//! That vector is deflated by shifting it to the bottom of the spectrum, so the
//! wanted vector becomes the top eigenvector of the shifted matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{NcasError, Result};
use crate::graph::Affinity;

// moves the sqrt(d) eigenvalue from 1 to -2, below the spectrum of M
const DEFLATION_SHIFT: f64 = 3.0;

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Graphs up to this size use a dense decomposition.
    pub dense_limit: usize,
    /// Cap on operator applications for the iterative path.
    pub max_iters: usize,
    /// Ritz residual tolerance for the iterative path.
    pub tol: f64,
    /// Krylov basis size between restarts.
    pub krylov_dim: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            dense_limit: 512,
            max_iters: 5000,
            tol: 1e-10,
            krylov_dim: 80,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NcutSolution {
    /// `f` with `f'D1 = 0` and `f'Df = 1`.
    pub phase: Vec<f64>,
    /// Generalized eigenvalue of `phase`.
    pub eigenvalue: f64,
    /// Operator applications (0 on the dense path).
    pub iterations: usize,
}

pub fn ncut_eigen(w: &Affinity) -> Result<NcutSolution> {
    ncut_eigen_with(w, EigenOptions::default())
}

pub fn ncut_eigen_with(w: &Affinity, opts: EigenOptions) -> Result<NcutSolution> {
    let n = w.len();
    if n < 2 {
        return Err(NcasError::param("need at least two nodes"));
    }
    if !w.is_symmetric() {
        return Err(NcasError::InvariantViolation("affinity is not symmetric".into()));
    }
    let d = w.degree();
    if let Some(node) = d.iter().position(|&v| !(v > 0.0)) {
        return Err(NcasError::DegenerateGraph { node });
    }
    let sqrt_d: Vec<f64> = d.iter().map(|v| v.sqrt()).collect();
    let norm = d.iter().sum::<f64>().sqrt();
    let u: Vec<f64> = sqrt_d.iter().map(|s| s / norm).collect();

    let (theta, mut z, iterations) = if n <= opts.dense_limit {
        let (t, z) = dense_top(w, &sqrt_d, &u);
        (t, z, 0)
    } else {
        let apply = |x: &[f64], out: &mut [f64]| {
            let scaled: Vec<f64> = x.iter().zip(&sqrt_d).map(|(v, s)| v / s).collect();
            w.matvec(&scaled, out);
            let c = DEFLATION_SHIFT * dot(&u, x);
            for ((o, s), ui) in out.iter_mut().zip(&sqrt_d).zip(&u) {
                *o = *o / s - c * ui;
            }
        };
        lanczos_top(n, apply, &u, opts)?
    };
    // z is orthogonal to sqrt(d) up to rounding; remove the remainder
    let c = dot(&z, &u);
    z.iter_mut().zip(&u).for_each(|(zi, ui)| *zi -= c * ui);
    let zn = dot(&z, &z).sqrt();
    let pivot = z.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
    let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
    let phase = z
        .iter()
        .zip(&sqrt_d)
        .map(|(zi, s)| sign * zi / (zn * s))
        .collect();
    Ok(NcutSolution {
        phase,
        eigenvalue: 1.0 - theta,
        iterations,
    })
}

fn dense_top(w: &Affinity, sqrt_d: &[f64], u: &[f64]) -> (f64, Vec<f64>) {
    let n = w.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        let (idx, wt) = w.row(x);
        for (&y, &v) in idx.iter().zip(wt) {
            let y = y as usize;
            m[(x, y)] += v / (sqrt_d[x] * sqrt_d[y]);
        }
    }
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] -= DEFLATION_SHIFT * u[i] * u[j];
        }
    }
    let eig = SymmetricEigen::new(m);
    let (best, theta) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    (theta, eig.eigenvectors.column(best).iter().copied().collect())
}

/// Largest eigenpair of a symmetric operator restricted to the complement of
/// `deflate`, by restarted Lanczos with full reorthogonalization.
pub fn lanczos_top(
    n: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    deflate: &[f64],
    opts: EigenOptions,
) -> Result<(f64, Vec<f64>, usize)> {
    let m = opts.krylov_dim.clamp(2, n.max(2));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut start: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut matvecs = 0;
    let mut residual = f64::INFINITY;
    let mut out = vec![0.0; n];
    while matvecs < opts.max_iters {
        orthogonalize(&mut start, std::iter::once(deflate));
        let s = dot(&start, &start).sqrt();
        if !(s > 0.0) {
            return Err(NcasError::Numeric("Lanczos start vector vanished".into()));
        }
        start.iter_mut().for_each(|v| *v /= s);

        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut last_beta = 0.0;
        for j in 0..m {
            apply(&basis[j], &mut out);
            matvecs += 1;
            let a = dot(&basis[j], &out);
            alpha.push(a);
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                orthogonalize(&mut out, basis.iter().map(|v| v.as_slice()));
                orthogonalize(&mut out, std::iter::once(deflate));
            }
            let b = dot(&out, &out).sqrt();
            last_beta = b;
            if j + 1 == m || b < 1e-13 || matvecs >= opts.max_iters {
                break;
            }
            beta.push(b);
            basis.push(out.iter().map(|v| v / b).collect());
        }
        let k = alpha.len();
        let mut t = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (best, theta) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let s = eig.eigenvectors.column(best);
        residual = (last_beta * s[k - 1]).abs();
        let mut ritz = vec![0.0; n];
        for (i, v) in basis.iter().enumerate().take(k) {
            let c = s[i];
            ritz.iter_mut().zip(v).for_each(|(r, vi)| *r += c * vi);
        }
        if residual <= opts.tol {
            return Ok((theta, ritz, matvecs));
        }
        start = ritz;
    }
    Err(NcasError::EigenNoConvergence {
        iterations: matvecs,
        residual,
    })
}

fn orthogonalize<'a>(v: &mut [f64], against: impl Iterator<Item = &'a [f64]>) {
    for q in against {
        let c = dot(v, q);
        v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Neighborhood;
    use std::sync::Arc;

    fn blocks() -> Affinity {
        let lists = (0..8)
            .map(|x| if x < 4 { (0..4).collect() } else { (4..8).collect() })
            .collect();
        let g = Arc::new(Neighborhood::from_lists(lists).unwrap());
        Affinity::from_fn(g, |_, _| 0.5).unwrap()
    }

    #[test]
    fn disconnected_blocks_have_zero_eigenvalue() {
        let w = blocks();
        let sol = ncut_eigen(&w).unwrap();
        assert!(sol.eigenvalue.abs() < 1e-12);
        let s = sol.phase[0].signum();
        assert!(sol.phase[..4].iter().all(|v| v.signum() == s));
        assert!(sol.phase[4..].iter().all(|v| v.signum() == -s));
    }

    #[test]
    fn iterative_path_agrees_with_dense() {
        let w = blocks();
        let dense = ncut_eigen(&w).unwrap();
        let it = ncut_eigen_with(&w, EigenOptions { dense_limit: 0, ..Default::default() }).unwrap();
        assert!((dense.eigenvalue - it.eigenvalue).abs() < 1e-10);
        for (a, b) in dense.phase.iter().zip(&it.phase) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn isolated_node_is_rejected() {
        let g = Arc::new(Neighborhood::complete(3).unwrap());
        let w = Affinity::new(g, vec![0.0; 9]).unwrap();
        assert!(matches!(ncut_eigen(&w), Err(NcasError::DegenerateGraph { .. })));
    }
}
