//! Cyclic Jacobi eigensolver for small dense Hermitian matrices.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;

/// Sweep cap for the cyclic Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Off-diagonal Frobenius mass, relative to `‖A‖_F`, at which the
/// iteration stops.
pub const OFF_DIAGONAL_TOL: f64 = 1e-14;

/// Eigenvalues (ascending) and the matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: CMatrix<T>,
    pub sweeps: usize,
}

fn off_diagonal_norm<T: Real>(a: &CMatrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += a[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Diagonalizes a Hermitian matrix `A = Q Λ Q*`.
///
/// Only the Hermitian part of the input is meaningful; the diagonal is
/// taken as real.
pub fn eig_hermitian<T: Real>(matrix: &CMatrix<T>) -> Result<HermitianEigen<T>> {
    let n = matrix.rows();
    if matrix.cols() != n {
        return Err(Error::invalid("eigensolver needs a square matrix"));
    }
    let mut a = matrix.clone();
    for i in 0..n {
        a[(i, i)] = Complex::new(a[(i, i)].re, T::zero());
    }
    let mut q = CMatrix::<T>::identity(n);
    let norm = a.frobenius_norm();
    let threshold = T::tol(OFF_DIAGONAL_TOL) * norm;

    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&a);
    while off > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::ConvergenceFailure {
                solver: "Hermitian Jacobi",
                iterations: sweeps,
                residual: (off / norm).to_f64_lossy(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for r in (p + 1)..n {
                rotate(&mut a, &mut q, p, r);
            }
        }
        off = off_diagonal_norm(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |row, col| q[(row, order[col])]);
    Ok(HermitianEigen {
        values,
        vectors,
        sweeps,
    })
}

/// Annihilates `a[p][q]` with a unitary plane rotation `G`, applying
/// `A ← G* A G` and `Q ← Q G`.
fn rotate<T: Real>(a: &mut CMatrix<T>, qm: &mut CMatrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag.is_zero() {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Phase that makes the (p, q) entry real and positive.
    let phase = Complex::new(apq.re / mag, -apq.im / mag);
    let zeta = (aqq - app) / (mag + mag);
    let t = if zeta >= T::zero() {
        T::one() / (zeta + (T::one() + zeta * zeta).sqrt())
    } else {
        -T::one() / (-zeta + (T::one() + zeta * zeta).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = c * t;
    let g_pp = Complex::new(c, T::zero());
    let g_pq = Complex::new(s, T::zero());
    let g_qp = phase * (-s);
    let g_qq = phase * c;

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = Complex::zero();
    a[(q, p)] = Complex::zero();
    a[(p, p)] = Complex::new(a[(p, p)].re, T::zero());
    a[(q, q)] = Complex::new(a[(q, q)].re, T::zero());

    for k in 0..n {
        let qkp = qm[(k, p)];
        let qkq = qm[(k, q)];
        qm[(k, p)] = qkp * g_pp + qkq * g_qp;
        qm[(k, q)] = qkp * g_pq + qkq * g_qq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn reconstruction_error(m: &CMatrix<f64>, e: &HermitianEigen<f64>) -> f64 {
        let n = m.rows();
        let lambda = CMatrix::from_fn(n, n, |r, col| {
            if r == col {
                c(e.values[r], 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let rec = e
            .vectors
            .matmul(&lambda)
            .matmul(&e.vectors.conj_transpose());
        m.sub(&rec).frobenius_norm()
    }

    #[test]
    fn two_by_two_complex() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let m = CMatrix::from_fn(2, 2, |r, col| match (r, col) {
            (0, 0) | (1, 1) => c(2.0, 0.0),
            (0, 1) => c(0.0, 1.0),
            _ => c(0.0, -1.0),
        });
        let e = eig_hermitian(&m).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        assert!(reconstruction_error(&m, &e) < 1e-13);
    }

    #[test]
    fn zero_matrix_is_already_diagonal() {
        let m = CMatrix::<f64>::zeros(3, 3);
        let e = eig_hermitian(&m).unwrap();
        assert_eq!(e.sweeps, 0);
        assert!(e.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let m = CMatrix::from_fn(4, 4, |r, col| {
            let (r, col) = (r as f64, col as f64);
            if r == col {
                c(r + 1.0, 0.0)
            } else {
                c(0.3 * (r + col), 0.1 * (r - col))
            }
        });
        let e = eig_hermitian(&m).unwrap();
        let gram = e.vectors.conj_transpose().matmul(&e.vectors);
        assert!(gram.sub(&CMatrix::identity(4)).frobenius_norm() < 1e-13);
        assert!(reconstruction_error(&m, &e) < 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn single_precision_converges() {
        let m = CMatrix::from_fn(3, 3, |r, col| {
            if r == col {
                Complex::new(1.0f32, 0.0)
            } else {
                Complex::new(0.25f32, 0.0)
            }
        });
        let e = eig_hermitian(&m).unwrap();
        assert!((e.values[2] - 1.5).abs() < 1e-5);
    }
}
