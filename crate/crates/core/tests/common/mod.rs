//! Reference implementations used as oracles. They are deliberately written
//! from scratch and share no code with the library beyond plain data types.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Forward differences with a zero last difference on each axis.
fn grad(w: usize, h: usize, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                gx[i] = u[i + 1] - u[i];
            }
            if y + 1 < h {
                gy[i] = u[i + w] - u[i];
            }
        }
    }
    (gx, gy)
}

/// Negative adjoint of `grad`, assembled entry by entry.
fn div(w: usize, h: usize, px: &[f64], py: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if x + 1 < w {
                out[i] += px[i];
                out[i + 1] -= px[i];
            }
            if y + 1 < h {
                out[i] += py[i];
                out[i + w] -= py[i];
            }
        }
    }
    out
}

fn tv(w: usize, h: usize, u: &[f64]) -> f64 {
    let (gx, gy) = grad(w, h, u);
    gx.iter().zip(&gy).map(|(a, b)| (a * a + b * b).sqrt()).sum()
}

/// Dual ascent for `weight TV(u) + |u - f|^2 / 2`: projected gradient on
/// `min_{|p| <= 1} |f - weight div p|^2 / 2` with Nesterov momentum,
/// iterated until the duality gap drops below `rel_gap` times the primal
/// value. Returns `u = f - weight div p`.
pub fn rof_reference(w: usize, h: usize, f: &[f64], weight: f64, rel_gap: f64) -> Vec<f64> {
    let n = w * h;
    let step = 1.0 / (8.0 * weight * weight);
    let primal_of = |p: &(Vec<f64>, Vec<f64>)| -> (Vec<f64>, f64, f64) {
        let d = div(w, h, &p.0, &p.1);
        let u: Vec<f64> = (0..n).map(|i| f[i] - weight * d[i]).collect();
        let fid: f64 = u.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum();
        let primal = weight * tv(w, h, &u) + 0.5 * fid;
        let dual_obj: f64 = u.iter().map(|v| 0.5 * v * v).sum();
        (u, primal, dual_obj)
    };
    let mut p = (vec![0.0; n], vec![0.0; n]);
    let mut y = p.clone();
    let mut t = 1.0f64;
    for it in 1..=2_000_000usize {
        let d = div(w, h, &y.0, &y.1);
        let u: Vec<f64> = (0..n).map(|i| f[i] - weight * d[i]).collect();
        // gradient of |f - weight div p|^2 / 2 in p is weight * grad u
        let (gx, gy) = grad(w, h, &u);
        let mut next = (vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            let a = y.0[i] - step * weight * gx[i];
            let b = y.1[i] - step * weight * gy[i];
            let s = (a * a + b * b).sqrt().max(1.0);
            next.0[i] = a / s;
            next.1[i] = b / s;
        }
        if it % 25 == 0 {
            let (u, primal, dual_obj) = primal_of(&next);
            let dual = f.iter().map(|v| 0.5 * v * v).sum::<f64>() - dual_obj;
            if primal - dual <= rel_gap * primal.abs().max(f64::MIN_POSITIVE) {
                return u;
            }
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for i in 0..n {
            y.0[i] = next.0[i] + beta * (next.0[i] - p.0[i]);
            y.1[i] = next.1[i] + beta * (next.1[i] - p.1[i]);
        }
        t = t_next;
        p = next;
    }
    primal_of(&p).0
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in s.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// `min_{w in simplex} sum c w + sum w ln w` by projected gradient with
/// backtracking, stopped once the unit-step gradient mapping
/// `|w - P(w - grad)|_inf` is at most `tol`.
pub fn entropic_simplex_min(c: &[f64], tol: f64) -> Vec<f64> {
    let obj = |w: &[f64]| -> f64 {
        w.iter()
            .zip(c)
            .map(|(&wi, &ci)| if wi > 0.0 { wi * (ci + wi.ln()) } else { 0.0 })
            .sum()
    };
    let n = c.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut step = 1.0;
    for _ in 0..200_000 {
        let g: Vec<f64> = w.iter().zip(c).map(|(wi, ci)| ci + wi.ln() + 1.0).collect();
        let trial: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - gi).collect();
        let mapping = project_simplex(&trial)
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if mapping <= tol {
            break;
        }
        let f0 = obj(&w);
        loop {
            let trial: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - step * gi).collect();
            let cand = project_simplex(&trial);
            let moved: f64 = cand.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum();
            if cand.iter().all(|&v| v > 0.0) && obj(&cand) <= f0 - moved / (2.0 * step) {
                w = cand;
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                return w;
            }
        }
        step = (step * 2.0).min(1.0);
    }
    w
}

/// Row-major dense `-2 (D - W) f`.
pub fn dense_laplacian(n: usize, w: &[f64], f: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|x| {
            let d: f64 = (0..n).map(|y| w[x * n + y]).sum();
            let wf: f64 = (0..n).map(|y| w[x * n + y] * f[y]).sum();
            -2.0 * (d * f[x] - wf)
        })
        .collect()
}

/// Second-smallest generalized eigenpair of `(D - W) v = l D v` from a full
/// dense eigendecomposition, `v` normalized so `sum d v^2 = 1`.
pub fn dense_fiedler(n: usize, w: &[f64]) -> (f64, Vec<f64>) {
    let d: Vec<f64> = (0..n).map(|x| (0..n).map(|y| w[x * n + y]).sum()).collect();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        let l = if i == j { d[i] } else { 0.0 } - w[i * n + j];
        l / (d[i] * d[j]).sqrt()
    });
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let k = order[1];
    let u = eig.eigenvectors.column(k);
    let v: Vec<f64> = (0..n).map(|i| u[i] / d[i].sqrt()).collect();
    let norm: f64 = v.iter().zip(&d).map(|(a, b)| b * a * a).sum::<f64>().sqrt();
    (eig.eigenvalues[k], v.iter().map(|a| a / norm).collect())
}

/// Random symmetric nonnegative weights with positive diagonal so that no
/// node is isolated; roughly `density` of the off-diagonal pairs are kept.
pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Vec<f64> {
    let mut w = vec![0.0; n * n];
    for x in 0..n {
        w[x * n + x] = rng.random_range(0.1..1.0);
        for y in x + 1..n {
            if rng.random_bool(density) {
                let v = rng.random_range(0.0..1.0);
                w[x * n + y] = v;
                w[y * n + x] = v;
            }
        }
    }
    w
}
