//! Partition comparison: variation of information, Rand index, and the
//! permutation-invariant error count for two-class labels.

use std::collections::HashMap;

use crate::error::{check_len, NcasError, Result};

/// Joint and marginal label counts of two partitions.
struct Contingency {
    joint: HashMap<(u32, u32), usize>,
    left: HashMap<u32, usize>,
    right: HashMap<u32, usize>,
    n: usize,
}

impl Contingency {
    fn new<A: Copy + Into<u32>, B: Copy + Into<u32>>(a: &[A], b: &[B]) -> Result<Self> {
        check_len(a.len(), b.len())?;
        if a.is_empty() {
            return Err(NcasError::param("partitions must be nonempty"));
        }
        let mut c = Contingency {
            joint: HashMap::new(),
            left: HashMap::new(),
            right: HashMap::new(),
            n: a.len(),
        };
        for (&x, &y) in a.iter().zip(b) {
            let (x, y) = (x.into(), y.into());
            *c.joint.entry((x, y)).or_default() += 1;
            *c.left.entry(x).or_default() += 1;
            *c.right.entry(y).or_default() += 1;
        }
        Ok(c)
    }
}

fn pairs(c: usize) -> f64 {
    let c = c as f64;
    c * (c - 1.0) / 2.0
}

/// `H(a) + H(b) - 2 I(a; b)` in nats.
pub fn variation_of_information<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Copy + Into<u32>,
    B: Copy + Into<u32>,
{
    let c = Contingency::new(a, b)?;
    let n = c.n as f64;
    // H(a|b) + H(b|a) term by term; identical partitions give exact zeros
    let mut vi = 0.0;
    for (&(x, y), &nxy) in &c.joint {
        let joint = nxy as f64;
        let given_b = (joint / c.right[&y] as f64).ln();
        let given_a = (joint / c.left[&x] as f64).ln();
        vi -= joint / n * (given_a + given_b);
    }
    Ok(vi.max(0.0))
}

/// Fraction of element pairs on which `a` and `b` agree (both together or
/// both apart).
pub fn rand_index_single<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Copy + Into<u32>,
    B: Copy + Into<u32>,
{
    let c = Contingency::new(a, b)?;
    let total = pairs(c.n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let same_both: f64 = c.joint.values().map(|&v| pairs(v)).sum();
    let same_a: f64 = c.left.values().map(|&v| pairs(v)).sum();
    let same_b: f64 = c.right.values().map(|&v| pairs(v)).sum();
    let apart_both = total - same_a - same_b + same_both;
    Ok((same_both + apart_both) / total)
}

/// Rand index of `pred` averaged over several ground truths.
pub fn rand_index<A, B>(pred: &[A], truths: &[&[B]]) -> Result<f64>
where
    A: Copy + Into<u32>,
    B: Copy + Into<u32>,
{
    if truths.is_empty() {
        return Err(NcasError::param("at least one ground truth is required"));
    }
    let mut acc = 0.0;
    for t in truths {
        acc += rand_index_single(pred, t)?;
    }
    Ok(acc / truths.len() as f64)
}

/// Hamming distance to `truth` under the better of the two matchings of
/// binary labels.
pub fn misclassification_count(pred: &[u8], truth: &[u8]) -> Result<usize> {
    check_len(truth.len(), pred.len())?;
    if let Some(&v) = pred.iter().chain(truth).find(|&&v| v > 1) {
        return Err(NcasError::param(format!("label {v} is not binary")));
    }
    let direct = pred.iter().zip(truth).filter(|(a, b)| a != b).count();
    Ok(direct.min(pred.len() - direct))
}

/// Total number of 4-neighbor pixel pairs with different labels.
pub fn boundary_length(labels: &[u8], width: usize, height: usize) -> Result<usize> {
    check_len(width * height, labels.len())?;
    let mut count = 0;
    for y in 0..height {
        for x in 0..width {
            let l = labels[y * width + x];
            if x + 1 < width && labels[y * width + x + 1] != l {
                count += 1;
            }
            if y + 1 < height && labels[(y + 1) * width + x] != l {
                count += 1;
            }
        }
    }
    Ok(count)
}
