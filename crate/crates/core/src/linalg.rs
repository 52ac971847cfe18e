//! Small dense linear-algebra helpers on top of `nalgebra`.

use alloc::vec::Vec;

use libm::{log, sqrt};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Inverse and log-determinant of a symmetric positive-definite matrix.
///
/// Returns `None` when the Cholesky factorization fails. The inverse is
/// symmetrized by averaging with its transpose.
pub fn spd_inverse_logdet(p: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let chol = p.clone().cholesky()?;
    let logdet_p = 2.0 * chol.l_dirty().diagonal().iter().map(|d| log(*d)).sum::<f64>();
    let mut inv = chol.inverse();
    symmetrize(&mut inv);
    Some((inv, -logdet_p))
}

/// `ln det` of a symmetric positive-definite matrix, `None` if not SPD.
pub fn spd_logdet(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    Some(2.0 * chol.l_dirty().diagonal().iter().map(|d| log(*d)).sum::<f64>())
}

/// `m ← (m + mᵀ)/2`.
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

/// Copy of `m` keeping only the flagged columns.
pub fn select_columns(m: &DMatrix<f64>, keep: &[bool]) -> DMatrix<f64> {
    let idx: Vec<usize> = keep.iter().enumerate().filter(|(_, &k)| k).map(|(i, _)| i).collect();
    m.select_columns(idx.iter())
}

/// Copy of a square `m` keeping the flagged rows and columns.
pub fn select_square(m: &DMatrix<f64>, keep: &[bool]) -> DMatrix<f64> {
    let idx: Vec<usize> = keep.iter().enumerate().filter(|(_, &k)| k).map(|(i, _)| i).collect();
    m.select_rows(idx.iter()).select_columns(idx.iter())
}

/// Left singular vectors of `m` with singular values in decreasing order.
///
/// Computed from the eigendecomposition of `m mᵀ`, which is small for the
/// unfoldings this crate handles (`J_n × Π_{k≠n} J_k` with modest `J_n`).
pub fn left_singular(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let gram = m * m.transpose();
    let eig = SymmetricEigen::new(gram);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let u = eig.eigenvectors.select_columns(order.iter());
    let s = DVector::from_iterator(n, order.iter().map(|&i| sqrt(eig.eigenvalues[i].max(0.0))));
    (u, s)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_diagonal() {
        let p = DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![2.0, 4.0]));
        let (inv, logdet) = spd_inverse_logdet(&p).unwrap();
        assert!((inv[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((inv[(1, 1)] - 0.25).abs() < 1e-15);
        assert!((logdet + log(8.0)).abs() < 1e-15);
    }

    #[test]
    fn indefinite_matrix_fails() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(spd_inverse_logdet(&p).is_none());
    }

    #[test]
    fn singular_values_sorted() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 3.0, 0.0]);
        let (u, s) = left_singular(&m);
        assert!((s[0] - 3.0).abs() < 1e-12 && (s[1] - 1.0).abs() < 1e-12);
        assert!((u[(1, 0)].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn selection_drops_rows_and_columns() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let s = select_square(&m, &[true, false, true]);
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 7.0, 9.0]));
        let c = select_columns(&m, &[false, true, false]);
        assert_eq!(c.as_slice(), &[2.0, 5.0, 8.0]);
    }
}
