//! Exact refinement of an approximate grid solution.
//!
//! With the mean pinned to `y₀`, the grid problem is a lasso in the
//! innovation weights `a` (zero-sum) against the columns
//! `ψ_j[k] = β̂[k] e^{−ikjh} / (s D_M[k])`, `1 ≤ k ≤ K_c`. A feature-sign
//! search started from a support guess solves it to KKT accuracy.

use num_complex::Complex;

use super::GridProblem;
use crate::linalg::{lstsq_min_norm, Matrix};
use crate::scalar::Real;

fn sign_of<T: Real>(v: T) -> T {
    if v < T::zero() {
        -T::one()
    } else {
        T::one()
    }
}

enum FaceStep<T> {
    Minimizer(Vec<T>),
    Ray(Vec<T>),
}

pub(super) struct Lasso<T> {
    p: usize,
    kc: usize,
    lambda: T,
    /// `β̂[k] / (s D_M[k])` for `k = 1..=K_c`.
    weights: Vec<Complex<T>>,
    phases: Vec<Complex<T>>,
    target: Vec<T>,
    pub(super) tol: T,
}

impl<T: Real> Lasso<T> {
    /// `None` when some measured frequency aliases to the filter's null
    /// frequency.
    pub(super) fn new(prob: &GridProblem<T>) -> Option<Self> {
        let g = &prob.grid;
        let (p, kc) = (g.p, g.kc);
        let mut weights = Vec::with_capacity(kc);
        for k in 1..=kc {
            let d = g.dm_dft[k % p];
            if k % p == 0 || d.norm().is_zero() {
                return None;
            }
            weights.push(g.bspline_fourier[k] / (d * prob.reg_scale));
        }
        let phases = (0..p)
            .map(|j| Complex::from_polar(T::one(), -g.h() * T::of_usize(j)))
            .collect();
        let target = prob.y.stacked()[1..].to_vec();
        let scale = target.iter().map(|v| v.abs()).fold(T::zero(), T::max)
            * weights.iter().map(|w| w.norm()).fold(T::zero(), T::max);
        Some(Self {
            p,
            kc,
            lambda: prob.lambda,
            weights,
            phases,
            target,
            tol: prob.lambda * T::tol(1e-6) + T::of(64.0) * T::epsilon() * scale,
        })
    }

    fn column(&self, j: usize) -> Vec<T> {
        let mut col = Vec::with_capacity(2 * self.kc);
        for k in 1..=self.kc {
            let v = self.weights[k - 1] * self.phases[(k * j) % self.p];
            col.push(v.re);
            col.push(v.im);
        }
        col
    }

    fn residual(&self, support: &[usize], a: &[T]) -> Vec<T> {
        let mut r = self.target.clone();
        for (&j, &aj) in support.iter().zip(a) {
            for (ri, ci) in r.iter_mut().zip(self.column(j)) {
                *ri -= aj * ci;
            }
        }
        r
    }

    fn objective(&self, support: &[usize], a: &[T]) -> T {
        let r = self.residual(support, a);
        T::of(0.5) * r.iter().map(|v| *v * *v).sum::<T>()
            + self.lambda * a.iter().map(|v| v.abs()).sum::<T>()
    }

    /// Either the minimizer on the face `{a_S : sign(a_S) = σ, Σ a = 0}`
    /// ignoring sign constraints, or, when the face objective is unbounded
    /// below, a direction along which it decreases linearly.
    fn face_step(&self, support: &[usize], sigma: &[T]) -> Option<FaceStep<T>> {
        let n = support.len();
        let rows = 2 * self.kc;
        let cols: Vec<Vec<T>> = support.iter().map(|&j| self.column(j)).collect();
        let constraint = Matrix::from_fn(
            rows + 1,
            n,
            |r, c| if r < rows { cols[c][r] } else { T::one() },
        );
        let image = constraint.mul_vec(sigma);
        let row_part = lstsq_min_norm(&constraint, &image, T::tol(1e-13)).ok()?.x;
        let null_part: Vec<T> = sigma.iter().zip(&row_part).map(|(&s, &r)| s - r).collect();
        if null_part.iter().map(|v| v.abs()).fold(T::zero(), T::max) > T::tol(1e-9) {
            return Some(FaceStep::Ray(null_part.into_iter().map(|v| -v).collect()));
        }
        let dot = |u: &[T], v: &[T]| u.iter().zip(v).map(|(&x, &y)| x * y).sum::<T>();
        let mut kkt = Matrix::zeros(n + 1, n + 1);
        let mut rhs = vec![T::zero(); n + 1];
        for i in 0..n {
            for j in 0..n {
                kkt[(i, j)] = dot(&cols[i], &cols[j]);
            }
            kkt[(i, n)] = T::one();
            kkt[(n, i)] = T::one();
            rhs[i] = dot(&cols[i], &self.target) - self.lambda * sigma[i];
        }
        let sol = lstsq_min_norm(&kkt, &rhs, T::tol(1e-13)).ok()?;
        Some(FaceStep::Minimizer(sol.x[..n].to_vec()))
    }

    /// Best point on the segment `a → target` among the sign-change
    /// crossings and the endpoint.
    fn sign_line_search(&self, support: &[usize], sigma: &[T], a: &[T], target: &[T]) -> Vec<T> {
        let mut best_t = T::one();
        let mut best_obj = self.objective(support, target);
        for i in 0..a.len() {
            if target[i] * sigma[i] <= T::zero() && !a[i].is_zero() {
                let t = a[i] / (a[i] - target[i]);
                let trial: Vec<T> = a
                    .iter()
                    .zip(target)
                    .map(|(&x, &y)| x + (y - x) * t)
                    .collect();
                let obj = self.objective(support, &trial);
                if obj < best_obj {
                    best_obj = obj;
                    best_t = t;
                }
            }
        }
        a.iter()
            .zip(target)
            .map(|(&x, &y)| x + (y - x) * best_t)
            .collect()
    }

    /// Feature-sign search from the given signed support. Returns the
    /// optimal innovation on the full grid, or `None` when the KKT
    /// conditions cannot be met within the iteration budget.
    pub(super) fn solve(&self, start: &[(usize, T)], max_iter: usize) -> Option<Vec<T>> {
        let mut support: Vec<usize> = start.iter().map(|s| s.0).collect();
        let mut sigma: Vec<T> = start.iter().map(|s| s.1.signum()).collect();
        let mut a = vec![T::zero(); support.len()];
        for _ in 0..max_iter {
            // Optimize on the current face.
            if !support.is_empty() {
                let next = match self.face_step(&support, &sigma)? {
                    FaceStep::Minimizer(target) => {
                        if target.iter().zip(&sigma).all(|(&t, &s)| t * s > T::zero()) {
                            a = target;
                            None
                        } else {
                            Some(self.sign_line_search(&support, &sigma, &a, &target))
                        }
                    }
                    FaceStep::Ray(dir) => {
                        // Ratio test: advance until the first coordinate
                        // reaches zero.
                        let mut step: Option<(usize, T)> = None;
                        for i in 0..a.len() {
                            if dir[i] * sigma[i] < T::zero() {
                                let t = -a[i] / dir[i];
                                if step.is_none_or(|(_, s)| t < s) {
                                    step = Some((i, t));
                                }
                            }
                        }
                        let (hit, t) = step?;
                        let mut next: Vec<T> =
                            a.iter().zip(&dir).map(|(&x, &d)| x + d * t).collect();
                        next[hit] = T::zero();
                        Some(next)
                    }
                };
                if let Some(next) = next {
                    let zero_tol =
                        T::tol(1e-13) * next.iter().map(|v| v.abs()).fold(T::zero(), T::max);
                    let keep: Vec<usize> = (0..next.len())
                        .filter(|&i| next[i].abs() > zero_tol)
                        .collect();
                    support = keep.iter().map(|&i| support[i]).collect();
                    a = keep.iter().map(|&i| next[i]).collect();
                    sigma = a.iter().map(|v| v.signum()).collect();
                    continue;
                }
            }

            // Dual feasibility off the support.
            let r = self.residual(&support, &a);
            let corr: Vec<T> = (0..self.p)
                .map(|j| self.column(j).iter().zip(&r).map(|(&c, &v)| c * v).sum())
                .collect();
            let gamma = if support.is_empty() {
                let hi = corr.iter().copied().fold(T::neg_infinity(), T::max);
                let lo = corr.iter().copied().fold(T::infinity(), T::min);
                (hi + lo) / T::of(2.0)
            } else {
                support
                    .iter()
                    .zip(&sigma)
                    .map(|(&j, &s)| corr[j] - self.lambda * s)
                    .sum::<T>()
                    / T::of_usize(support.len())
            };
            let mut worst: Option<(usize, T)> = None;
            for (j, &cj) in corr.iter().enumerate() {
                if support.contains(&j) {
                    continue;
                }
                let excess = (cj - gamma).abs() - self.lambda;
                if excess > self.tol && worst.is_none_or(|(_, w)| excess > w) {
                    worst = Some((j, excess));
                }
            }
            let on_support_ok = support
                .iter()
                .zip(&sigma)
                .all(|(&j, &s)| (corr[j] - gamma - self.lambda * s).abs() <= self.tol);
            match worst {
                None if on_support_ok => {
                    let mut full = vec![T::zero(); self.p];
                    for (&j, &aj) in support.iter().zip(&a) {
                        full[j] = aj;
                    }
                    return Some(full);
                }
                None => return None,
                Some((j, _)) if support.is_empty() => {
                    // A lone weight cannot move under the zero-sum
                    // constraint, so enter the extreme pair together.
                    let other = (0..self.p).filter(|&i| i != j).max_by(|&u, &v| {
                        let (cu, cv) = (
                            (gamma - corr[u]) * sign_of(corr[j] - gamma),
                            (gamma - corr[v]) * sign_of(corr[j] - gamma),
                        );
                        cu.partial_cmp(&cv).unwrap_or(std::cmp::Ordering::Equal)
                    })?;
                    support = vec![j, other];
                    sigma = vec![sign_of(corr[j] - gamma), -sign_of(corr[j] - gamma)];
                    a = vec![T::zero(); 2];
                }
                Some((j, _)) => {
                    support.push(j);
                    sigma.push(sign_of(corr[j] - gamma));
                    a.push(T::zero());
                }
            }
        }
        None
    }
}
