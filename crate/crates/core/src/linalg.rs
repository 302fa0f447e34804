//! Small dense kernels, evaluated in `f64` through nalgebra whatever the field scalar is.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

/// Eigen-decomposition of a Hermitian matrix given row-major; eigenvalues ascending,
/// eigenvectors as columns `vecs[k]`.
pub(crate) fn hermitian_eigen<T: Real>(n: usize, entries: &[C<T>]) -> (Vec<f64>, Vec<Vec<Complex<f64>>>) {
    let m = DMatrix::<Complex<f64>>::from_fn(n, n, |i, j| {
        let a = entries[i * n + j];
        let b = entries[j * n + i];
        // symmetrize against rounding
        Complex::new(
            0.5 * (a.re.to_f64_lossy() + b.re.to_f64_lossy()),
            0.5 * (a.im.to_f64_lossy() - b.im.to_f64_lossy()),
        )
    });
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = order
        .iter()
        .map(|&k| (0..n).map(|i| eig.eigenvectors[(i, k)]).collect())
        .collect();
    (vals, vecs)
}

/// Solves the dense real system `a x = b` by LU with partial pivoting.
pub(crate) fn solve_real(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    a.lu()
        .solve(&b)
        .ok_or_else(|| Error::Domain("singular linear system".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_hermitian() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2
        let e = [C::new(1.0, 0.0), C::new(0.0, 1.0), C::new(0.0, -1.0), C::new(1.0, 0.0)];
        let (vals, vecs) = hermitian_eigen::<f64>(2, &e);
        assert!((vals[0] - 0.0).abs() < 1e-14 && (vals[1] - 2.0).abs() < 1e-14);
        // check A v = lambda v for the lower one
        let v = &vecs[0];
        let av0 = e[0] * v[0] + e[1] * v[1];
        assert!(av0.norm() < 1e-14);
    }

    #[test]
    fn lu_solves() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 1.0, 1.0]);
        let x = solve_real(a, DVector::from_vec(vec![4.0, 3.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }
}
