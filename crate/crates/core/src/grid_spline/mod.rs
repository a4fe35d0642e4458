//! Exact B-spline discretization of the `D^M`-regularized reconstruction
//! problem on a uniform periodic grid, its ℓ¹ solver, and the grid
//! convergence experiment.
//!
//! A function on the grid of `P` knots is `f = Σ_l c[l] β(· − l h)` with
//! `h = 2π/P` and `β` the periodized scaled B-spline of order `M`. Its
//! innovation `D^M f` is a sum of Diracs on the grid with weights
//! `(P/2π)^{M−1} (d_M ∗ c)`.

mod experiment;
mod polish;
mod solver;

pub use experiment::{
    convergence_experiment, fit_loglog_slope, truncated_fourier, ErrorTable, ExperimentConfig,
    ExperimentResult, ExperimentRow, GroundTruth, Reference, EVAL_POINTS,
};
pub use solver::{solve_grid, solve_grid_with, GridSolution, GridSolverConfig, TraceRow};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::measures::ObservationVector;
use crate::scalar::{wrap_angle, Real};

/// Relative tolerance of the build-time quadrature cross-check.
pub const QUADRATURE_TOL: f64 = 1e-6;

/// Periodic B-spline tables for `P` knots, order `M` and cutoff `K_c`.
#[derive(Debug, Clone)]
pub struct SplineGrid<T> {
    pub p: usize,
    pub m: usize,
    pub kc: usize,
    /// `β̂[k]`, `0 ≤ k ≤ K_c`.
    pub bspline_fourier: Vec<Complex<T>>,
    /// `D_M[k] = (1 − e^{−ik2π/P})^M`, `0 ≤ k < P`.
    pub dm_dft: Vec<Complex<T>>,
    /// `d_M`, the `P`-periodized filter with taps `(−1)^j C(M, j)`.
    pub dm_taps: Vec<T>,
    /// Largest relative deviation of the closed form from quadrature.
    pub quadrature_error: T,
}

impl<T: Real> SplineGrid<T> {
    pub fn h(&self) -> T {
        T::two_pi() / T::of_usize(self.p)
    }

    /// `(P/2π)^{M−1}`.
    pub fn reg_scale(&self) -> T {
        (T::of_usize(self.p) / T::two_pi()).powi(self.m as i32 - 1)
    }

    /// Periodized B-spline `β(x)`.
    pub fn bspline(&self, x: T) -> T {
        let u = wrap_angle(x) / self.h();
        cardinal_bspline(self.m, u)
    }

    /// Cyclic convolution `d_M ∗ c`.
    pub fn apply_filter(&self, c: &[T]) -> Vec<T> {
        let p = self.p;
        (0..p)
            .map(|i| {
                (0..=self.m.min(p - 1))
                    .filter(|&j| !self.dm_taps[j].is_zero())
                    .map(|j| self.dm_taps[j] * c[(i + p - j) % p])
                    .sum()
            })
            .collect()
    }

    /// Adjoint of [`apply_filter`](Self::apply_filter) (cyclic correlation).
    pub fn apply_filter_adjoint(&self, v: &[T]) -> Vec<T> {
        let p = self.p;
        (0..p)
            .map(|i| {
                (0..=self.m.min(p - 1))
                    .filter(|&j| !self.dm_taps[j].is_zero())
                    .map(|j| self.dm_taps[j] * v[(i + j) % p])
                    .sum()
            })
            .collect()
    }

    /// Innovation weights `(P/2π)^{M−1} (d_M ∗ c)`.
    pub fn innovation(&self, c: &[T]) -> Vec<T> {
        let s = self.reg_scale();
        self.apply_filter(c).into_iter().map(|v| v * s).collect()
    }
}

/// Cardinal B-spline of order `m` (degree `m − 1`) supported on `[0, m]`,
/// by the Cox–de Boor recursion.
pub fn cardinal_bspline<T: Real>(m: usize, u: T) -> T {
    if u < T::zero() || u >= T::of_usize(m) {
        return T::zero();
    }
    if m == 1 {
        return T::one();
    }
    let mf = T::of_usize(m);
    (u * cardinal_bspline(m - 1, u) + (mf - u) * cardinal_bspline(m - 1, u - T::one()))
        / (mf - T::one())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Closed-form `β̂[k] = P^{M−1} ((1 − e^{−ik2π/P}) / (2πik))^M`, `β̂[0] = 1/P`.
fn bspline_coefficient<T: Real>(p: usize, m: usize, k: usize) -> Complex<T> {
    if k == 0 {
        return Complex::new(T::one() / T::of_usize(p), T::zero());
    }
    // Reduce the phase mod P for accuracy.
    let theta = T::two_pi() * T::of_usize(k % p) / T::of_usize(p);
    let num = Complex::new(T::one(), T::zero()) - Complex::from_polar(T::one(), -theta);
    let den = Complex::new(T::zero(), T::two_pi() * T::of_usize(k));
    (num / den).powi(m as i32) * T::of_usize(p).powi(m as i32 - 1)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `(1/2π) ∫ β(x) e^{−ikx} dx` by Gauss–Legendre panels on the knot cells of
/// the support, using at most `64·P` nodes in total.
pub fn quadrature_coefficient<T: Real>(p: usize, m: usize, k: usize) -> Complex<T> {
    let h = std::f64::consts::TAU / p as f64;
    let per_cell = (64 * p / m).clamp(2, 64);
    let rule = gauss_legendre(per_cell);
    let mut acc = Complex::new(0.0, 0.0);
    for cell in 0..m {
        let (a, b) = (cell as f64 * h, (cell + 1) as f64 * h);
        let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
        for &(node, w) in &rule {
            let x = mid + half * node;
            let beta = cardinal_bspline(m, x / h);
            acc += Complex::from_polar(beta * w * half, -(k as f64) * x);
        }
    }
    acc /= std::f64::consts::TAU;
    Complex::new(T::of(acc.re), T::of(acc.im))
}

/// Builds the tables for `P` knots, order `M`, cutoff `K_c`, and
/// cross-checks `β̂` against quadrature of the time-domain B-spline.
pub fn build_grid<T: Real>(p: usize, m: usize, kc: usize) -> Result<SplineGrid<T>> {
    if m == 0 {
        return Err(Error::invalid("derivative order must be at least 1"));
    }
    if p < m {
        return Err(Error::invalid(format!(
            "grid size {p} is below the order {m}"
        )));
    }
    let bspline_fourier: Vec<Complex<T>> = (0..=kc).map(|k| bspline_coefficient(p, m, k)).collect();
    let dm_dft = (0..p)
        .map(|k| {
            if k == 0 {
                return Complex::new(T::zero(), T::zero());
            }
            let theta = T::two_pi() * T::of_usize(k) / T::of_usize(p);
            (Complex::new(T::one(), T::zero()) - Complex::from_polar(T::one(), -theta))
                .powi(m as i32)
        })
        .collect();
    let mut dm_taps = vec![T::zero(); p];
    for j in 0..=m {
        let v = binomial(m, j) * if j % 2 == 0 { 1.0 } else { -1.0 };
        dm_taps[j % p] += T::of(v);
    }

    let floor = T::of(1e-12) / T::of_usize(p);
    let quadrature_error = bspline_fourier
        .iter()
        .enumerate()
        .map(|(k, &b)| {
            let q: Complex<T> = quadrature_coefficient(p, m, k);
            (q - b).norm() / b.norm().max(floor)
        })
        .fold(T::zero(), T::max);
    if quadrature_error > T::tol(QUADRATURE_TOL) {
        return Err(Error::ValidationFailure(format!(
            "B-spline coefficients deviate from quadrature by {quadrature_error} (P = {p}, M = {m})"
        )));
    }
    Ok(SplineGrid {
        p,
        m,
        kc,
        bspline_fourier,
        dm_dft,
        dm_taps,
        quadrature_error,
    })
}

/// Data, regularization weight and system matrix of the discrete problem
/// `min_c ½‖Hc − y‖² + λ (P/2π)^{M−1} ‖d_M ∗ c‖₁`.
#[derive(Debug, Clone)]
pub struct GridProblem<T> {
    pub y: ObservationVector<T>,
    pub lambda: T,
    pub grid: SplineGrid<T>,
    /// Real `(2K_c+1) × P` matrix: rows `Re/Im` of `e^{−ik l h} β̂[k]`,
    /// stacked like [`ObservationVector::stacked`].
    pub h_matrix: Matrix<T>,
    pub reg_scale: T,
}

impl<T: Real> GridProblem<T> {
    pub fn new(y: ObservationVector<T>, lambda: T, grid: SplineGrid<T>) -> Result<Self> {
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda = {lambda} must be positive"
            )));
        }
        if y.kc() != grid.kc {
            return Err(Error::invalid(format!(
                "data cutoff {} does not match grid cutoff {}",
                y.kc(),
                grid.kc
            )));
        }
        let p = grid.p;
        let h = grid.h();
        let mut hm = Matrix::zeros(2 * grid.kc + 1, p);
        for l in 0..p {
            hm[(0, l)] = grid.bspline_fourier[0].re;
            for k in 1..=grid.kc {
                let phase = -h * T::of_usize((k * l) % p);
                let v = Complex::from_polar(T::one(), phase) * grid.bspline_fourier[k];
                hm[(2 * k - 1, l)] = v.re;
                hm[(2 * k, l)] = v.im;
            }
        }
        let reg_scale = grid.reg_scale();
        Ok(Self {
            y,
            lambda,
            grid,
            h_matrix: hm,
            reg_scale,
        })
    }

    /// `½‖Hc − y‖² + λ (P/2π)^{M−1} ‖d_M ∗ c‖₁`.
    pub fn objective(&self, c: &[T]) -> T {
        let b = self.y.stacked();
        let hc = self.h_matrix.mul_vec(c);
        let fit: T = hc.iter().zip(&b).map(|(&u, &v)| (u - v) * (u - v)).sum();
        let reg: T = self.grid.apply_filter(c).iter().map(|v| v.abs()).sum();
        T::of(0.5) * fit + self.lambda * self.reg_scale * reg
    }
}

/// Evaluates `f(t) = Σ_l c[l] β(t − l h)`.
pub fn reconstruct<T: Real>(c: &[T], grid: &SplineGrid<T>, t: T) -> T {
    let p = grid.p;
    let u = wrap_angle(t) / grid.h();
    let base = u.floor();
    let frac = u - base;
    let cell = base.to_usize().unwrap_or(0) % p;
    (0..grid.m)
        .map(|j| {
            let l = (cell + p - j % p) % p;
            c[l] * cardinal_bspline(grid.m, frac + T::of_usize(j))
        })
        .sum()
}

/// Samples `f` at `n` equispaced points of `[0, 2π)`.
pub fn reconstruct_samples<T: Real>(c: &[T], grid: &SplineGrid<T>, n: usize) -> Vec<T> {
    (0..n)
        .map(|i| reconstruct(c, grid, T::two_pi() * T::of_usize(i) / T::of_usize(n)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn box_spline_coefficients() {
        let g = build_grid::<f64>(4, 1, 2).unwrap();
        assert!((g.bspline_fourier[0].re - 0.25).abs() < 1e-15);
        let expected = (2.0f64).sqrt() / TAU;
        assert!((g.bspline_fourier[1].norm() - expected).abs() < 1e-15);
    }

    #[test]
    fn filter_dft() {
        let g = build_grid::<f64>(4, 2, 1).unwrap();
        assert!((g.dm_dft[2] - Complex::new(4.0, 0.0)).norm() < 1e-14);
        assert_eq!(g.dm_dft[0], Complex::new(0.0, 0.0));
        assert_eq!(g.dm_taps, vec![1.0, -2.0, 1.0, 0.0]);
    }

    #[test]
    fn quadrature_agrees_with_closed_form() {
        for m in 1..=4 {
            for p in [8, 16, 64] {
                let g = build_grid::<f64>(p, m, 3).unwrap();
                assert!(
                    g.quadrature_error < 1e-6,
                    "m={m} p={p}: {}",
                    g.quadrature_error
                );
            }
        }
    }

    #[test]
    fn rejects_small_grid() {
        assert!(matches!(
            build_grid::<f64>(2, 3, 1),
            Err(Error::InvalidInput(_))
        ));
        assert!(build_grid::<f64>(3, 3, 1).is_ok());
    }

    #[test]
    fn partition_of_unity() {
        for m in 1..=4 {
            let g = build_grid::<f64>(16, m, 2).unwrap();
            let ones = vec![1.0; 16];
            for i in 0..200 {
                let t = i as f64 * TAU / 200.0 + 0.001;
                assert!((reconstruct(&ones, &g, t) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn box_spline_is_piecewise_constant() {
        let g = build_grid::<f64>(8, 1, 1).unwrap();
        let c: Vec<f64> = (0..8).map(|i| i as f64).collect();
        for l in 0..8 {
            let t = (l as f64 + 0.5) * TAU / 8.0;
            assert_eq!(reconstruct(&c, &g, t), l as f64);
        }
    }

    #[test]
    fn system_matrix_matches_sampled_fourier_coefficients() {
        let g = build_grid::<f64>(16, 2, 3).unwrap();
        let c: Vec<f64> = (0..16).map(|i| (i as f64 * 0.7).sin()).collect();
        let y = ObservationVector::from_real(&[0.0, 0.0, 0.0, 0.0]).unwrap();
        let prob = GridProblem::new(y, 1.0, g.clone()).unwrap();
        let hc = prob.h_matrix.mul_vec(&c);
        let n = 1 << 14;
        let samples = reconstruct_samples(&c, &g, n);
        for k in 0..=3usize {
            let mut acc = Complex::new(0.0, 0.0);
            for (i, &v) in samples.iter().enumerate() {
                acc += Complex::from_polar(v, -(k as f64) * TAU * i as f64 / n as f64);
            }
            acc /= n as f64;
            let (re, im) = if k == 0 {
                (hc[0], 0.0)
            } else {
                (hc[2 * k - 1], hc[2 * k])
            };
            assert!((acc - Complex::new(re, im)).norm() < 1e-6, "k={k}");
        }
    }

    #[test]
    fn innovation_sums_to_zero() {
        let g = build_grid::<f64>(32, 3, 2).unwrap();
        let c: Vec<f64> = (0..32).map(|i| ((i * i) as f64 * 0.37).cos()).collect();
        let a = g.innovation(&c);
        assert!(a.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn filter_adjoint() {
        let g = build_grid::<f64>(8, 3, 1).unwrap();
        let u: Vec<f64> = (0..8).map(|i| i as f64 - 3.0).collect();
        let v: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
        let lhs: f64 = g.apply_filter(&u).iter().zip(&v).map(|(a, b)| a * b).sum();
        let rhs: f64 = u
            .iter()
            .zip(g.apply_filter_adjoint(&v))
            .map(|(a, b)| a * b)
            .sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
