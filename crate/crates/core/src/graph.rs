//! Sparse neighbor structures and the weighted affinity stored on them.
//!
//! A [`Neighborhood`] is a CSR sparsity pattern that is always structurally
//! symmetric and always contains the self edge of every node. Each stored
//! entry knows the position of its transpose, so symmetrization and
//! symmetric checks are a single pass over the weights.

use std::sync::Arc;

use crate::error::{check_len, NcasError, Result};
use crate::field::Features;

#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    offsets: Vec<usize>,
    indices: Vec<u32>,
    mirror: Vec<usize>,
}

impl Neighborhood {
    /// Builds a pattern from per-node neighbor lists. Self edges are added,
    /// duplicates removed; the pattern must already be symmetric.
    pub fn from_lists(lists: Vec<Vec<usize>>) -> Result<Self> {
        let n = lists.len();
        if n == 0 {
            return Err(NcasError::Structural("graph has no nodes".into()));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        offsets.push(0);
        for (x, mut row) in lists.into_iter().enumerate() {
            row.push(x);
            row.sort_unstable();
            row.dedup();
            if let Some(&bad) = row.iter().find(|&&y| y >= n) {
                return Err(NcasError::Structural(format!(
                    "node {x} lists neighbor {bad} outside 0..{n}"
                )));
            }
            indices.extend(row.into_iter().map(|y| y as u32));
            offsets.push(indices.len());
        }
        let mut graph = Self {
            offsets,
            indices,
            mirror: Vec::new(),
        };
        graph.mirror = graph.compute_mirror()?;
        Ok(graph)
    }

    /// Like [`Neighborhood::from_lists`] but adds every missing reverse edge first.
    pub fn symmetric_closure(mut lists: Vec<Vec<usize>>) -> Result<Self> {
        let n = lists.len();
        let forward: Vec<(usize, usize)> = lists
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().map(move |&y| (x, y)))
            .collect();
        for (x, y) in forward {
            if y < n {
                lists[y].push(x);
            }
        }
        Self::from_lists(lists)
    }

    /// Square `(2r+1) x (2r+1)` spatial window on a grid, clipped at the borders.
    pub fn grid_window(width: usize, height: usize, radius: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(NcasError::param("grid dimensions must be positive"));
        }
        let n = width * height;
        let side = 2 * radius + 1;
        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(n * side.min(width) * side.min(height));
        offsets.push(0);
        for y in 0..height {
            let y0 = y.saturating_sub(radius);
            let y1 = (y + radius).min(height - 1);
            for x in 0..width {
                let x0 = x.saturating_sub(radius);
                let x1 = (x + radius).min(width - 1);
                for yy in y0..=y1 {
                    for xx in x0..=x1 {
                        indices.push((yy * width + xx) as u32);
                    }
                }
                offsets.push(indices.len());
            }
        }
        let mut graph = Self {
            offsets,
            indices,
            mirror: Vec::new(),
        };
        graph.mirror = graph.compute_mirror()?;
        Ok(graph)
    }

    /// Symmetrized k-nearest-neighbor graph (union of the directed kNN lists).
    /// Ties are broken by index, so the result is deterministic.
    pub fn knn(features: Features<'_>, k: usize) -> Result<Self> {
        let n = features.len();
        if k == 0 {
            return Err(NcasError::param("k must be positive"));
        }
        let mut lists = Vec::with_capacity(n);
        let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(n);
        for x in 0..n {
            scratch.clear();
            scratch.extend((0..n).filter(|&y| y != x).map(|y| (features.sq_dist(x, y), y)));
            let take = k.min(scratch.len());
            if take > 0 && take < scratch.len() {
                scratch.select_nth_unstable_by(take - 1, |a, b| {
                    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
                });
            }
            lists.push(scratch[..take].iter().map(|&(_, y)| y).collect());
        }
        Self::symmetric_closure(lists)
    }

    /// Every node connected to every node.
    pub fn complete(n: usize) -> Result<Self> {
        Self::from_lists((0..n).map(|_| (0..n).collect()).collect())
    }

    fn compute_mirror(&self) -> Result<Vec<usize>> {
        let mut mirror = vec![0; self.indices.len()];
        for x in 0..self.len() {
            for p in self.offsets[x]..self.offsets[x + 1] {
                let y = self.indices[p] as usize;
                let row = &self.indices[self.offsets[y]..self.offsets[y + 1]];
                match row.binary_search(&(x as u32)) {
                    Ok(q) => mirror[p] = self.offsets[y] + q,
                    Err(_) => {
                        return Err(NcasError::Structural(format!(
                            "edge ({x},{y}) has no reverse edge ({y},{x})"
                        )))
                    }
                }
            }
        }
        Ok(mirror)
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn range(&self, x: usize) -> std::ops::Range<usize> {
        self.offsets[x]..self.offsets[x + 1]
    }

    #[inline]
    pub fn neighbors(&self, x: usize) -> &[u32] {
        &self.indices[self.offsets[x]..self.offsets[x + 1]]
    }

    #[inline]
    pub fn column(&self, p: usize) -> usize {
        self.indices[p] as usize
    }

    /// Storage position of the transpose of entry `p`.
    #[inline]
    pub fn mirror(&self, p: usize) -> usize {
        self.mirror[p]
    }

    pub fn position(&self, x: usize, y: usize) -> Option<usize> {
        self.neighbors(x)
            .binary_search(&(y as u32))
            .ok()
            .map(|q| self.offsets[x] + q)
    }

    pub fn max_row_len(&self) -> usize {
        (0..self.len()).map(|x| self.range(x).len()).max().unwrap_or(0)
    }
}

/// Nonnegative weights on a [`Neighborhood`] with the cached row sums.
#[derive(Debug, Clone)]
pub struct Affinity {
    graph: Arc<Neighborhood>,
    weights: Vec<f64>,
    degree: Vec<f64>,
}

impl Affinity {
    pub fn new(graph: Arc<Neighborhood>, weights: Vec<f64>) -> Result<Self> {
        check_len(graph.nnz(), weights.len())?;
        if let Some(p) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(NcasError::InvariantViolation(format!(
                "weight {} at entry {p} is negative or not finite",
                weights[p]
            )));
        }
        let degree = row_sums(&graph, &weights);
        Ok(Self {
            graph,
            weights,
            degree,
        })
    }

    /// Builds the weights entry by entry from `f(x, y)`.
    pub fn from_fn(graph: Arc<Neighborhood>, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut weights = Vec::with_capacity(graph.nnz());
        for x in 0..graph.len() {
            for p in graph.range(x) {
                weights.push(f(x, graph.column(p)));
            }
        }
        Self::new(graph, weights)
    }

    /// Dense row-major matrix; zero entries are simply left out of the pattern.
    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self> {
        check_len(n * n, dense.len())?;
        let lists = (0..n)
            .map(|x| {
                (0..n)
                    .filter(|&y| dense[x * n + y] != 0.0 || dense[y * n + x] != 0.0)
                    .collect()
            })
            .collect();
        let graph = Arc::new(Neighborhood::from_lists(lists)?);
        Self::from_fn(graph, |x, y| dense[x * n + y])
    }

    pub fn graph(&self) -> &Arc<Neighborhood> {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self) -> &[f64] {
        &self.degree
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.graph.position(x, y).map_or(0.0, |p| self.weights[p])
    }

    #[inline]
    pub fn row(&self, x: usize) -> (&[u32], &[f64]) {
        let r = self.graph.range(x);
        (&self.graph.indices[r.clone()], &self.weights[r])
    }

    /// `out = W v`.
    pub fn matvec(&self, v: &[f64], out: &mut [f64]) {
        for (x, o) in out.iter_mut().enumerate() {
            let (idx, w) = self.row(x);
            let mut acc = 0.0;
            for (&y, &wy) in idx.iter().zip(w) {
                acc += wy * v[y as usize];
            }
            *o = acc;
        }
    }

    /// Largest `|w(x,y) - w(y,x)|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        (0..self.weights.len())
            .map(|p| (self.weights[p] - self.weights[self.graph.mirror(p)]).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        self.asymmetry() == 0.0
    }

    /// Multiplies every weight by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.graph.clone(),
            self.weights.iter().map(|w| w * c).collect(),
        )
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut dense = vec![0.0; n * n];
        for x in 0..n {
            let (idx, w) = self.row(x);
            for (&y, &wy) in idx.iter().zip(w) {
                dense[x * n + y as usize] = wy;
            }
        }
        dense
    }
}

fn row_sums(graph: &Neighborhood, weights: &[f64]) -> Vec<f64> {
    (0..graph.len())
        .map(|x| weights[graph.range(x)].iter().sum())
        .collect()
}
