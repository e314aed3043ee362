//! Dense complex matrices and the handful of helpers the models need on top
//! of nalgebra.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Dense complex square matrix: operators, density matrices, superoperators.
pub type ComplexMatrix = DMatrix<Complex64>;

#[inline]
pub const fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub const I: Complex64 = c64(0.0, 1.0);

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn zeros(dim: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(dim, dim)
}

/// `|i><j|` in a `dim`-dimensional space.
pub fn matrix_unit(dim: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = zeros(dim);
    m[(i, j)] = c64(1.0, 0.0);
    m
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b + b * a
}

/// Largest entry of `|A - A†|`.
pub fn hermiticity_defect(a: &ComplexMatrix) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..=j.min(a.nrows() - 1) {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// Largest entry modulus; used as a cheap matrix norm in tolerances.
pub fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

pub fn trace(a: &ComplexMatrix) -> Complex64 {
    a.trace()
}

pub fn ensure_square(a: &ComplexMatrix, what: &str) -> Result<usize> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::validation(alloc::format!(
            "{what} must be a non-empty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// Hermitian part `(A + A†)/2`; strips round-off before an eigensolve.
pub fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues ascending.
/// Column `k` of the returned matrix is the eigenvector of `values[k]`.
pub fn hermitian_eigen(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(a.nrows(), a.ncols(), |i, k| {
        eig.eigenvectors[(i, order[k])]
    });
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = hermitian_part(a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

pub fn min_eigenvalue(a: &ComplexMatrix) -> f64 {
    hermitian_eigenvalues(a)
        .first()
        .copied()
        .unwrap_or(f64::NAN)
}

/// Trace distance `||A - B||_1 / 2` between Hermitian matrices.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b))
        .iter()
        .map(|x| x.abs())
        .sum::<f64>()
}

/// Column-stacking vectorization.
pub fn vectorize(a: &ComplexMatrix) -> DVector<Complex64> {
    // nalgebra storage is column-major, so the raw slice is already stacked.
    DVector::from_column_slice(a.as_slice())
}

pub fn unvectorize(v: &DVector<Complex64>, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(dim, dim, v.as_slice())
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectorize_is_column_stacking() {
        let m = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c64(1.0, 0.0), c64(2.0, 0.0), c64(3.0, 0.0), c64(4.0, 0.0)],
        );
        let v = vectorize(&m);
        let re: Vec<f64> = v.iter().map(|z| z.re).collect();
        assert_eq!(re, [1.0, 3.0, 2.0, 4.0]);
        assert_eq!(unvectorize(&v, 2), m);
    }

    #[test]
    fn kron_vec_identity() {
        // vec(A X B) = (B^T ⊗ A) vec(X)
        let a = ComplexMatrix::from_fn(3, 3, |i, j| c64(i as f64 + 0.5, j as f64 - 1.0));
        let b = ComplexMatrix::from_fn(3, 3, |i, j| c64((i * j) as f64, 0.3 * i as f64));
        let x = ComplexMatrix::from_fn(3, 3, |i, j| c64(1.0 / (1.0 + (i + 2 * j) as f64), 0.1));
        let lhs = vectorize(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vectorize(&x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn trace_of_adjoint_is_conjugate_trace() {
        let a = ComplexMatrix::from_fn(4, 4, |i, j| c64(i as f64 - j as f64, (i * j) as f64 + 0.25));
        assert!((trace(&a.adjoint()) - trace(&a).conj()).norm() < 1e-15);
    }

    #[test]
    fn hermitian_eigen_sorted_and_reconstructs() {
        let a = ComplexMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                c64(3.0 - i as f64, 0.0)
            } else if i < j {
                c64(0.2, 0.1 * (i + j) as f64)
            } else {
                c64(0.2, -0.1 * (i + j) as f64)
            }
        });
        let (vals, vecs) = hermitian_eigen(&a);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let diag = ComplexMatrix::from_diagonal(&DVector::from_iterator(
            3,
            vals.iter().map(|&x| c64(x, 0.0)),
        ));
        let back = &vecs * diag * vecs.adjoint();
        assert!(max_abs(&(back - a)) < 1e-12);
    }

    #[test]
    fn ensure_square_rejects_rectangular() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(ensure_square(&a, "op").is_err());
    }
}
