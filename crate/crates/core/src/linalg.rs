//! Small dense linear-algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Largest dimension for which operator norms are computed exactly from
/// singular values. Larger matrices fall back to the Frobenius norm, which is
/// an upper bound.
pub const EXACT_NORM_MAX_DIM: usize = 8;

/// Operator (spectral) norm of `m`.
pub fn op_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows().max(m.ncols()) > EXACT_NORM_MAX_DIM {
        return m.norm();
    }
    if m.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Singular values sorted in descending order.
pub fn singular_values_desc(m: &Matrix) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn outer(u: &Vector, v: &Vector) -> Matrix {
    u * v.transpose()
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// `I - u u^T` for a unit vector `u`.
pub fn complement_projector(u: &Vector) -> Matrix {
    Matrix::identity(u.len(), u.len()) - outer(u, u)
}

pub fn from_slice(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

/// Row-major flattening, the order used by every CSV writer.
pub fn row_major(m: &Matrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_norm_of_diagonal_is_max_abs_entry() {
        let m = Matrix::from_diagonal(&from_slice(&[0.5, -3.0, 2.0]));
        assert!((op_norm(&m) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn op_norm_of_rank_one_projector_is_one() {
        let u = from_slice(&[0.6, 0.8]);
        assert!((op_norm(&outer(&u, &u)) - 1.0).abs() < 1e-12);
        assert_eq!(op_norm(&Matrix::zeros(3, 3)), 0.0);
    }

    #[test]
    fn large_matrices_use_frobenius_bound() {
        let m = Matrix::identity(10, 10);
        assert!((op_norm(&m) - 10f64.sqrt()).abs() < 1e-12);
    }
}
