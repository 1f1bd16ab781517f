use crate::error::{check_len, NcasError, Result};
use crate::graph::Affinity;

/// Nonlocal graph Laplacian `Δ_w f(x) = -2 sum_y w(x,y) (f(x) - f(y))`,
/// i.e. `-2 (D - W) f` in matrix form.
pub fn laplacian_apply(w: &Affinity, f: &[f64]) -> Result<Vec<f64>> {
    check_len(w.len(), f.len())?;
    let mut out = vec![0.0; f.len()];
    laplacian_into(w, f, &mut out);
    Ok(out)
}

pub(crate) fn laplacian_into(w: &Affinity, f: &[f64], out: &mut [f64]) {
    for (x, o) in out.iter_mut().enumerate() {
        let (idx, wt) = w.row(x);
        let fx = f[x];
        let mut acc = 0.0;
        for (&y, &wxy) in idx.iter().zip(wt) {
            acc += wxy * (fx - f[y as usize]);
        }
        *o = -2.0 * acc;
    }
}

/// Projection onto `{z : sum sqrt(d) z = 0}`:
/// `z - (sum z sqrt(d) / sum d) sqrt(d)`.
pub fn project_orthogonal(z: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    check_len(d.len(), z.len())?;
    if d.iter().any(|&v| !(v > 0.0)) {
        return Err(NcasError::param("degree must be strictly positive"));
    }
    let sqrt_d: Vec<f64> = d.iter().map(|v| v.sqrt()).collect();
    let mut out = z.to_vec();
    project_in_place(&mut out, &sqrt_d, d.iter().sum())?;
    Ok(out)
}

pub(crate) fn project_in_place(z: &mut [f64], sqrt_d: &[f64], total_degree: f64) -> Result<()> {
    if !(total_degree > 0.0) {
        return Err(NcasError::Numeric("total degree is zero".into()));
    }
    let c = dot(z, sqrt_d) / total_degree;
    for (zi, s) in z.iter_mut().zip(sqrt_d) {
        *zi -= c * s;
    }
    Ok(())
}

/// `1` where `f > 0`, else `0` (ties go to class 0).
pub fn threshold_labels(f: &[f64]) -> Vec<u8> {
    f.iter().map(|&v| u8::from(v > 0.0)).collect()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Neighborhood;
    use std::sync::Arc;

    #[test]
    fn laplacian_two_nodes() {
        let g = Arc::new(Neighborhood::complete(2).unwrap());
        let w = Affinity::new(g, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(laplacian_apply(&w, &[1.0, 0.0]).unwrap(), vec![-2.0, 2.0]);
        assert_eq!(laplacian_apply(&w, &[5.0, 5.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn projection_removes_sqrt_degree() {
        let d = [1.0, 4.0, 9.0];
        let z = [1.0, 2.0, 3.0];
        let p = project_orthogonal(&z, &d).unwrap();
        assert!(p.iter().all(|v| v.abs() < 1e-15));
        let already = [2.0, -1.0, 0.0];
        assert_eq!(project_orthogonal(&already, &d).unwrap(), already.to_vec());
        assert!(project_orthogonal(&z, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn thresholds() {
        assert_eq!(threshold_labels(&[1.0, -1.0, 1.0]), vec![1, 0, 1]);
        assert_eq!(threshold_labels(&[0.0, 0.0]), vec![0, 0]);
        assert_eq!(threshold_labels(&[-0.5, 2.0]), vec![0, 1]);
    }
}
