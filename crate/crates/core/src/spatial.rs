//! Spatial operators: grid differences, the phase smoothing kernel, and the
//! regularizer that acts on the phase field.
//!
//! Grid derivatives are forward differences with a Neumann boundary, so the
//! last column (row) has zero x (y) derivative and `div = -grad^T`.

use crate::config::{Kernel, Regularizer};
use crate::error::{check_len, NcasError, Result};
use crate::graph::Affinity;

/// Forward-difference gradient; returns `(dx, dy)`.
pub fn grid_gradient(width: usize, height: usize, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; f.len()];
    let mut gy = vec![0.0; f.len()];
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            if x + 1 < width {
                gx[i] = f[i + 1] - f[i];
            }
            if y + 1 < height {
                gy[i] = f[i + width] - f[i];
            }
        }
    }
    (gx, gy)
}

/// Discrete divergence, the negative adjoint of [`grid_gradient`].
pub fn grid_divergence(width: usize, height: usize, px: &[f64], py: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; px.len()];
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            let mut v = 0.0;
            if x + 1 < width {
                v += px[i];
            }
            if x > 0 {
                v -= px[i - 1];
            }
            if y + 1 < height {
                v += py[i];
            }
            if y > 0 {
                v -= py[i - width];
            }
            out[i] = v;
        }
    }
    out
}

/// Five-point Laplacian with Neumann boundary (`div grad f`).
pub fn grid_laplacian(width: usize, height: usize, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            let c = f[i];
            let mut v = 0.0;
            if x > 0 {
                v += f[i - 1] - c;
            }
            if x + 1 < width {
                v += f[i + 1] - c;
            }
            if y > 0 {
                v += f[i - width] - c;
            }
            if y + 1 < height {
                v += f[i + width] - c;
            }
            out[i] = v;
        }
    }
    out
}

pub fn dirichlet_energy(width: usize, height: usize, f: &[f64]) -> f64 {
    let (gx, gy) = grid_gradient(width, height, f);
    gx.iter().zip(&gy).map(|(a, b)| a * a + b * b).sum()
}

pub fn total_variation(width: usize, height: usize, f: &[f64]) -> f64 {
    let (gx, gy) = grid_gradient(width, height, f);
    gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).sum()
}

/// Where the spatial regularizer lives.
#[derive(Debug, Clone)]
pub enum SpatialDomain {
    /// Pixel grid; the regularizer uses grid differences.
    Grid { width: usize, height: usize },
    /// Off-grid data; the Dirichlet term is the graph energy
    /// `1/2 sum_xy a(x,y) (f(x)-f(y))^2` of a fixed spatial graph.
    Graph(Affinity),
}

impl SpatialDomain {
    pub fn len(&self) -> usize {
        match self {
            SpatialDomain::Grid { width, height } => width * height,
            SpatialDomain::Graph(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `R(f)` for the chosen regularizer.
    pub fn energy(&self, f: &[f64], reg: Regularizer) -> Result<f64> {
        check_len(self.len(), f.len())?;
        match (self, reg) {
            (SpatialDomain::Grid { width, height }, Regularizer::H1) => {
                Ok(dirichlet_energy(*width, *height, f))
            }
            (SpatialDomain::Grid { width, height }, Regularizer::Tv) => {
                Ok(total_variation(*width, *height, f))
            }
            (SpatialDomain::Graph(a), Regularizer::H1) => Ok(0.5 * graph_dirichlet(a, f)),
            (SpatialDomain::Graph(_), Regularizer::Tv) => Err(NcasError::param(
                "the TV regularizer needs a pixel grid",
            )),
        }
    }

    /// The operator `L` with `<f, L f> = -R_H1(f)`: the grid Laplacian, or
    /// half the graph Laplacian on point sets.
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        match self {
            SpatialDomain::Grid { width, height } => grid_laplacian(*width, *height, f),
            SpatialDomain::Graph(a) => {
                let mut out = vec![0.0; f.len()];
                for (x, o) in out.iter_mut().enumerate() {
                    let (idx, w) = a.row(x);
                    let fx = f[x];
                    *o = -idx
                        .iter()
                        .zip(w)
                        .map(|(&y, &wy)| wy * (fx - f[y as usize]))
                        .sum::<f64>();
                }
                out
            }
        }
    }

    /// Upper bound on the spectral radius of [`SpatialDomain::laplacian`].
    pub fn laplacian_bound(&self) -> f64 {
        match self {
            SpatialDomain::Grid { .. } => 8.0,
            SpatialDomain::Graph(a) => {
                // Gershgorin: row x contributes 2 * (d(x) - a(x,x))
                (0..a.len())
                    .map(|x| 2.0 * (a.degree()[x] - a.get(x, x)))
                    .fold(0.0, f64::max)
            }
        }
    }
}

/// `sum_xy a(x,y) (f(x) - f(y))^2` over every stored ordered pair.
pub fn graph_dirichlet(a: &Affinity, f: &[f64]) -> f64 {
    let mut acc = 0.0;
    for x in 0..a.len() {
        let (idx, w) = a.row(x);
        let fx = f[x];
        for (&y, &wy) in idx.iter().zip(w) {
            let d = fx - f[y as usize];
            acc += wy * d * d;
        }
    }
    acc
}

/// Applies the phase smoothing kernel `k` and its adjoint.
#[derive(Debug, Clone)]
pub enum Smoother {
    Identity,
    Gaussian {
        width: usize,
        height: usize,
        taps: Vec<f64>,
    },
}

impl Smoother {
    /// Gaussian kernels are only defined on grids.
    pub fn new(kernel: Kernel, grid: Option<(usize, usize)>) -> Result<Self> {
        match (kernel, grid) {
            (Kernel::Delta, _) => Ok(Smoother::Identity),
            (Kernel::Gaussian { sigma }, Some((width, height))) => Ok(Smoother::Gaussian {
                width,
                height,
                taps: gaussian_taps(sigma),
            }),
            (Kernel::Gaussian { .. }, None) => Err(NcasError::param(
                "a Gaussian phase kernel requires grid input",
            )),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Smoother::Identity)
    }

    /// `k * f` with replicate boundary.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        match self {
            Smoother::Identity => f.to_vec(),
            Smoother::Gaussian {
                width,
                height,
                taps,
            } => {
                let tmp = conv_axis(f, *width, *height, taps, Axis::X);
                conv_axis(&tmp, *width, *height, taps, Axis::Y)
            }
        }
    }

    /// Exact adjoint of [`Smoother::apply`] (the reflected kernel, with the
    /// boundary replication transposed).
    pub fn adjoint(&self, g: &[f64]) -> Vec<f64> {
        match self {
            Smoother::Identity => g.to_vec(),
            Smoother::Gaussian {
                width,
                height,
                taps,
            } => {
                let tmp = conv_axis_adjoint(g, *width, *height, taps, Axis::Y);
                conv_axis_adjoint(&tmp, *width, *height, taps, Axis::X)
            }
        }
    }
}

/// Normalized Gaussian taps on `[-ceil(3 sigma), ceil(3 sigma)]`.
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    taps
}

/// Separable convolution with replicate boundary: `taps_x` along rows,
/// then `taps_y` along columns. Tap `k` multiplies `f[i - (k - r)]`.
pub(crate) fn convolve_separable(
    f: &[f64],
    width: usize,
    height: usize,
    taps_x: &[f64],
    taps_y: &[f64],
) -> Vec<f64> {
    let tmp = conv_axis(f, width, height, taps_x, Axis::X);
    conv_axis(&tmp, width, height, taps_y, Axis::Y)
}

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

fn conv_axis(f: &[f64], width: usize, height: usize, taps: &[f64], axis: Axis) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let mut out = vec![0.0; f.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let o = k as isize - r;
                let src = match axis {
                    Axis::X => y * width + clamp_index(x as isize - o, width),
                    Axis::Y => clamp_index(y as isize - o, height) * width + x,
                };
                acc += t * f[src];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

fn conv_axis_adjoint(g: &[f64], width: usize, height: usize, taps: &[f64], axis: Axis) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let mut out = vec![0.0; g.len()];
    for y in 0..height {
        for x in 0..width {
            let gv = g[y * width + x];
            for (k, &t) in taps.iter().enumerate() {
                let o = k as isize - r;
                let dst = match axis {
                    Axis::X => y * width + clamp_index(x as isize - o, width),
                    Axis::Y => clamp_index(y as isize - o, height) * width + x,
                };
                out[dst] += t * gv;
            }
        }
    }
    out
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}
