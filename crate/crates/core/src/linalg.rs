//! Small dense matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Spectral norm (largest singular value).
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].abs();
    }
    let g = m.transpose() * m;
    g.symmetric_eigen().eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b)).sqrt()
}

/// `h^T xi` without allocating a transpose.
pub fn transpose_apply(h: &DMatrix<f64>, xi: &[f64]) -> Vec<f64> {
    let d = h.nrows();
    (0..d).map(|j| (0..d).map(|i| h[(i, j)] * xi[i]).sum()).collect()
}

pub fn apply(h: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let d = h.nrows();
    (0..d).map(|i| (0..d).map(|j| h[(i, j)] * x[j]).sum()).collect()
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn norm_max(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn is_strictly_upper(m: &DMatrix<f64>, tol: f64) -> bool {
    (0..m.nrows()).all(|i| (0..=i.min(m.ncols() - 1)).all(|j| m[(i, j)].abs() <= tol))
}

/// Coordinates of `target` in the span of `basis` (matrices viewed as vectors),
/// or `None` when the least-squares residual exceeds `tol * max(1, |target|)`.
pub fn span_coords(basis: &[DMatrix<f64>], target: &DMatrix<f64>, tol: f64) -> Option<Vec<f64>> {
    let n = target.len();
    if basis.is_empty() {
        return (target.amax() <= tol).then(Vec::new);
    }
    let a = DMatrix::from_fn(n, basis.len(), |i, j| basis[j].as_slice()[i]);
    let b = DVector::from_column_slice(target.as_slice());
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-12).ok()?;
    let res = (&a * &x - &b).amax();
    (res <= tol * target.amax().max(1.0)).then(|| x.iter().copied().collect())
}

/// Numerical rank of a family of matrices viewed as vectors.
pub fn span_rank(family: &[DMatrix<f64>], tol: f64) -> usize {
    if family.is_empty() {
        return 0;
    }
    let n = family[0].len();
    let a = DMatrix::from_fn(n, family.len(), |i, j| family[j].as_slice()[i]);
    a.svd(false, false).rank(tol)
}

/// Orthonormal basis (as matrices) of the span of a family.
pub fn span_basis(family: &[DMatrix<f64>], tol: f64) -> Vec<DMatrix<f64>> {
    if family.is_empty() {
        return vec![];
    }
    let (r, c) = family[0].shape();
    let n = r * c;
    let a = DMatrix::from_fn(n, family.len(), |i, j| family[j].as_slice()[i]);
    let svd = a.svd(true, false);
    let u = svd.u.unwrap();
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > tol)
        .map(|(k, _)| DMatrix::from_column_slice(r, c, u.column(k).as_slice()))
        .collect()
}

/// `exp(X)` for nilpotent `X` by the terminating series.
pub fn exp_nilpotent(x: &DMatrix<f64>) -> DMatrix<f64> {
    let d = x.nrows();
    let mut out = DMatrix::identity(d, d);
    let mut term = DMatrix::identity(d, d);
    for k in 1..=d {
        term = &term * x / k as f64;
        if term.amax() == 0.0 {
            break;
        }
        out += &term;
    }
    out
}

/// `(I + X)^{-1}` for nilpotent `X` by the terminating Neumann series
/// `sum_{j < n} (-X)^j`, where `n` is the nilpotency index bound.
pub fn unipotent_inverse(x: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let d = x.nrows();
    let mut out = DMatrix::identity(d, d);
    let mut term = DMatrix::identity(d, d);
    for _ in 1..n.max(1) {
        term = -(&term * x);
        out += &term;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_norm_of_shear() {
        // singular values of [[1,1],[0,1]] are the golden ratio and its inverse
        let m = DMatrix::from_row_slice(2, 2, &[1., 1., 0., 1.]);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((op_norm(&m) - phi).abs() < 1e-12);
    }

    #[test]
    fn unipotent_inverse_terminates() {
        let x = DMatrix::from_row_slice(3, 3, &[0., 2., 3., 0., 0., 2., 0., 0., 0.]);
        let inv = unipotent_inverse(&x, 3);
        let direct = (DMatrix::identity(3, 3) + &x).try_inverse().unwrap();
        assert!((inv - direct).amax() < 1e-12);
    }

    #[test]
    fn exp_matches_pade() {
        let x = DMatrix::from_row_slice(3, 3, &[0., 0.7, -1.3, 0., 0., 0.4, 0., 0., 0.]);
        assert!((exp_nilpotent(&x) - x.clone().exp()).amax() < 1e-12);
    }

    #[test]
    fn span_coordinates() {
        let a = DMatrix::from_row_slice(2, 2, &[0., 1., 0., 0.]);
        let b = DMatrix::from_row_slice(2, 2, &[1., 0., 0., 1.]);
        let t = &a * 2.0 - &b * 3.0;
        let c = span_coords(&[a.clone(), b.clone()], &t, 1e-10).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12 && (c[1] + 3.0).abs() < 1e-12);
        assert!(span_coords(&[a], &b, 1e-10).is_none());
    }
}
