//! Small dense linear algebra: a row-major matrix type and a min-norm
//! least-squares solver built on a one-sided Jacobi SVD.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

pub type CMatrix<T> = Matrix<Complex<T>>;

impl<S: Copy + Zero> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<S> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &S {
        &self.data[r * self.cols + c]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Real> Matrix<T> {
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }
}

impl<T: Real> CMatrix<T> {
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| {
            if r == c {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::zero()
            }
        })
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(x)
                    .fold(Complex::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |r, c| self[(r, c)] - other[(r, c)])
    }
}

/// Result of [`lstsq_min_norm`].
#[derive(Debug, Clone)]
pub struct LstsqSolution<T> {
    pub x: Vec<T>,
    /// Numerical rank at the requested relative threshold.
    pub rank: usize,
    pub singular_values: Vec<T>,
}

/// Singular values and right/left factors of a tall matrix (rows >= cols),
/// from the one-sided Jacobi method.
struct TallSvd<T> {
    /// Columns `σ_i u_i` (length rows each).
    scaled_left: Vec<Vec<T>>,
    /// Columns `v_i` (length cols each).
    right: Vec<Vec<T>>,
    sigma: Vec<T>,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn tall_svd<T: Real>(columns: Vec<Vec<T>>) -> Result<TallSvd<T>> {
    let n = columns.len();
    let mut u = columns;
    let mut v: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    let eps = T::epsilon();
    const MAX_SWEEPS: usize = 80;
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha = dot(&u[i], &u[i]);
                let beta = dot(&u[j], &u[j]);
                let gamma = dot(&u[i], &u[j]);
                if gamma.is_zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (ui, uj) = split_pair(&mut u, i, j);
                for (a, b) in ui.iter_mut().zip(uj.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
                let (vi, vj) = split_pair(&mut v, i, j);
                for (a, b) in vi.iter_mut().zip(vj.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure {
            solver: "one-sided Jacobi SVD",
            iterations: MAX_SWEEPS,
            residual: f64::NAN,
        });
    }
    let sigma = u.iter().map(|col| dot(col, col).sqrt()).collect();
    Ok(TallSvd {
        scaled_left: u,
        right: v,
        sigma,
    })
}

fn split_pair<S>(v: &mut [S], i: usize, j: usize) -> (&mut S, &mut S) {
    debug_assert!(i < j);
    let (lo, hi) = v.split_at_mut(j);
    (&mut lo[i], &mut hi[0])
}

/// Minimum-norm least-squares solution of `a x = b`.
///
/// Singular values below `rcond * σ_max` are treated as zero.
pub fn lstsq_min_norm<T: Real>(a: &Matrix<T>, b: &[T], rcond: T) -> Result<LstsqSolution<T>> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::invalid(format!(
            "right-hand side has length {}, expected {m}",
            b.len()
        )));
    }
    if n == 0 {
        return Ok(LstsqSolution {
            x: Vec::new(),
            rank: 0,
            singular_values: Vec::new(),
        });
    }
    let tall = m >= n;
    let columns: Vec<Vec<T>> = if tall {
        (0..n).map(|c| a.column(c)).collect()
    } else {
        (0..m).map(|r| a.row(r).to_vec()).collect()
    };
    let svd = tall_svd(columns)?;
    let smax = svd.sigma.iter().fold(T::zero(), |acc, &s| acc.max(s));
    let cutoff = rcond * smax;
    let mut x = vec![T::zero(); n];
    let mut rank = 0;
    for (i, &s) in svd.sigma.iter().enumerate() {
        if s <= cutoff || s.is_zero() {
            continue;
        }
        rank += 1;
        let s2 = s * s;
        if tall {
            // a = U Σ Vᵀ; x = Σ v_i (σ_i u_i · b) / σ_i²
            let coef = dot(&svd.scaled_left[i], b) / s2;
            for (xk, &vk) in x.iter_mut().zip(&svd.right[i]) {
                *xk += coef * vk;
            }
        } else {
            // aᵀ = U Σ Vᵀ; x = Σ σ_i u_i (v_i · b) / σ_i²
            let coef = dot(&svd.right[i], b) / s2;
            for (xk, &uk) in x.iter_mut().zip(&svd.scaled_left[i]) {
                *xk += coef * uk;
            }
        }
    }
    let mut singular_values = svd.sigma;
    singular_values.sort_by(|p, q| q.partial_cmp(p).unwrap_or(std::cmp::Ordering::Equal));
    Ok(LstsqSolution {
        x,
        rank,
        singular_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_system_is_solved_exactly() {
        let a: Matrix<f64> = Matrix::from_fn(3, 3, |r, c| {
            [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]][r][c]
        });
        let x_true = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let sol = lstsq_min_norm(&a, &b, 1e-12).unwrap();
        assert_eq!(sol.rank, 3);
        for (x, t) in sol.x.iter().zip(&x_true) {
            assert!((x - t).abs() < 1e-12);
        }
    }

    #[test]
    fn underdetermined_system_gives_min_norm() {
        // x + y = 2 has min-norm solution (1, 1).
        let a: Matrix<f64> = Matrix::from_fn(1, 2, |_, _| 1.0);
        let sol = lstsq_min_norm(&a, &[2.0], 1e-12).unwrap();
        assert_eq!(sol.rank, 1);
        assert!((sol.x[0] - 1.0).abs() < 1e-14);
        assert!((sol.x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn overdetermined_system_gives_least_squares() {
        // Fit a constant to [1, 2, 3]: mean 2.
        let a: Matrix<f64> = Matrix::from_fn(3, 1, |_, _| 1.0);
        let sol = lstsq_min_norm(&a, &[1.0, 2.0, 3.0], 1e-12).unwrap();
        assert!((sol.x[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_square_system() {
        let a: Matrix<f64> = Matrix::from_fn(2, 2, |_, _| 1.0);
        let sol = lstsq_min_norm(&a, &[2.0, 2.0], 1e-12).unwrap();
        assert_eq!(sol.rank, 1);
        assert!((sol.x[0] - 1.0).abs() < 1e-14 && (sol.x[1] - 1.0).abs() < 1e-14);
    }
}
