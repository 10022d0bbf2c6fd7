//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

use crate::dists::sample_std_normal;

/// Relative eigenvalue floor used when factoring positive semi-definite
/// matrices: eigenvalues below `EIG_FLOOR * trace` are treated as zero.
pub const EIG_FLOOR: f64 = 1e-12;

/// A square system matrix that is either diagonal or dense.
#[derive(Debug, Clone, PartialEq)]
pub enum SysMatrix {
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl SysMatrix {
    pub fn identity(n: usize) -> Self {
        SysMatrix::Diagonal(DVector::from_element(n, 1.0))
    }

    pub fn zeros(n: usize) -> Self {
        SysMatrix::Diagonal(DVector::zeros(n))
    }

    pub fn dim(&self) -> usize {
        match self {
            SysMatrix::Diagonal(d) => d.len(),
            SysMatrix::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            SysMatrix::Diagonal(d) => DMatrix::from_diagonal(d),
            SysMatrix::Dense(m) => m.clone(),
        }
    }

    /// `M v`
    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            SysMatrix::Diagonal(d) => d.component_mul(v),
            SysMatrix::Dense(m) => m * v,
        }
    }

    /// `M' v`
    pub fn tr_mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            SysMatrix::Diagonal(d) => d.component_mul(v),
            SysMatrix::Dense(m) => m.tr_mul(v),
        }
    }

    /// `M X`
    pub fn mul_mat(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            SysMatrix::Diagonal(d) => {
                let mut out = x.clone();
                for (i, mut row) in out.row_iter_mut().enumerate() {
                    row *= d[i];
                }
                out
            }
            SysMatrix::Dense(m) => m * x,
        }
    }

    /// `X M'`
    pub fn mul_mat_right_tr(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            SysMatrix::Diagonal(d) => {
                let mut out = x.clone();
                for (j, mut col) in out.column_iter_mut().enumerate() {
                    col *= d[j];
                }
                out
            }
            SysMatrix::Dense(m) => x * m.transpose(),
        }
    }

    /// `M' X`
    pub fn tr_mul_mat(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            SysMatrix::Diagonal(_) => self.mul_mat(x),
            SysMatrix::Dense(m) => m.tr_mul(x),
        }
    }

    /// `X M`
    pub fn right_mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            SysMatrix::Diagonal(_) => self.mul_mat_right_tr(x),
            SysMatrix::Dense(m) => x * m,
        }
    }

    /// `M X M'`
    pub fn sandwich(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            SysMatrix::Diagonal(d) => {
                let n = d.len();
                DMatrix::from_fn(n, n, |i, j| d[i] * x[(i, j)] * d[j])
            }
            SysMatrix::Dense(m) => m * x * m.transpose(),
        }
    }

    /// `M' X M`
    pub fn tr_sandwich(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            SysMatrix::Diagonal(_) => self.sandwich(x),
            SysMatrix::Dense(m) => m.transpose() * x * m,
        }
    }

    /// `M M'`
    pub fn gram(&self) -> DMatrix<f64> {
        match self {
            SysMatrix::Diagonal(d) => DMatrix::from_diagonal(&d.map(|v| v * v)),
            SysMatrix::Dense(m) => m * m.transpose(),
        }
    }
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// A factor `T` with `T T' = m` for a symmetric PSD `m`.
///
/// Tries a Cholesky factorization first; if `m` is singular or indefinite
/// to rounding, falls back to a symmetric eigendecomposition that drops
/// eigenvalues below `EIG_FLOOR * trace`, so the factor is either empty
/// (zero columns) or has full column rank.
pub fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = m.clone().cholesky() {
        let l = ch.unpack();
        if l.diagonal().iter().all(|d| d.is_finite() && *d > 0.0) {
            return l;
        }
    }
    eigen_factor(m)
}

pub fn eigen_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let trace = m.trace().abs();
    if trace == 0.0 {
        return DMatrix::zeros(n, 0);
    }
    let eig = SymmetricEigen::new(m.clone());
    let floor = EIG_FLOOR * trace;
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > floor).collect();
    let mut t = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let s = eig.eigenvalues[i].sqrt();
        t.set_column(c, &(eig.eigenvectors.column(i) * s));
    }
    t
}

/// Moore–Penrose inverse of a symmetric PSD matrix.
pub fn psd_pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let trace = m.trace().abs();
    if trace == 0.0 {
        return DMatrix::zeros(n, n);
    }
    let eig = SymmetricEigen::new(m.clone());
    let floor = EIG_FLOOR * trace;
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let l = eig.eigenvalues[i];
        if l > floor {
            let v = eig.eigenvectors.column(i);
            out += (v * v.transpose()) / l;
        }
    }
    out
}

/// Draw from `N(mean, T T')` given a factor `T` (possibly with fewer columns
/// than rows).
pub fn sample_with_factor<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    factor: &DMatrix<f64>,
    rng: &mut R,
) -> DVector<f64> {
    let z = DVector::from_fn(factor.ncols(), |_, _| sample_std_normal(rng));
    mean + factor * z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_of_singular_matrix() {
        let v = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let m = &v * v.transpose();
        let t = psd_factor(&m);
        assert!((&t * t.transpose() - &m).norm() < 1e-12);
        assert_eq!(t.ncols(), 1);
        let z = psd_factor(&DMatrix::zeros(3, 3));
        assert_eq!(z.ncols(), 0);
    }

    #[test]
    fn diagonal_and_dense_agree() {
        let d = DVector::from_vec(vec![0.5, -2.0, 3.0]);
        let dense = SysMatrix::Dense(DMatrix::from_diagonal(&d));
        let diag = SysMatrix::Diagonal(d);
        let x = DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64 - 2.5);
        let v = DVector::from_vec(vec![1.0, -1.0, 0.25]);
        assert!((diag.sandwich(&x) - dense.sandwich(&x)).norm() < 1e-14);
        assert!((diag.tr_sandwich(&x) - dense.tr_sandwich(&x)).norm() < 1e-14);
        assert!((diag.mul_mat(&x) - dense.mul_mat(&x)).norm() < 1e-14);
        assert!((diag.mul_mat_right_tr(&x) - dense.mul_mat_right_tr(&x)).norm() < 1e-14);
        assert!((diag.gram() - dense.gram()).norm() < 1e-14);
        assert!((diag.mul_vec(&v) - dense.mul_vec(&v)).norm() < 1e-14);
        assert!((diag.tr_mul_vec(&v) - dense.tr_mul_vec(&v)).norm() < 1e-14);
    }

    #[test]
    fn pinv_inverts_on_range() {
        let v = DVector::from_vec(vec![1.0, 1.0]);
        let m = &v * v.transpose();
        let p = psd_pinv(&m);
        assert!((&m * &p * &m - &m).norm() < 1e-12);
    }
}
