//! ADMM for `min_c ½‖Hc − y‖² + λ s ‖d_M ∗ c‖₁` with the splitting
//! `z = d_M ∗ c`. Both `HᵀH` and the filter are circulant, so the
//! `c`-update is a pointwise division in the DFT basis. The sparsity
//! pattern of the final `z` seeds an exact active-set polish.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::polish::Lasso;
use super::GridProblem;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSolverConfig<T> {
    pub rho: T,
    /// Residuals must fall below `tol · √P`.
    pub tol: T,
    pub max_iter: usize,
    /// Iterations between residual-balancing updates of `ρ`.
    pub balance_every: usize,
    pub record_trace: bool,
    /// Refine the ADMM iterate by an exact active-set solve.
    pub polish: bool,
}

impl<T: Real> Default for GridSolverConfig<T> {
    fn default() -> Self {
        Self {
            rho: T::one(),
            tol: T::accuracy(1e-9),
            max_iter: 200_000,
            balance_every: 50,
            record_trace: false,
            polish: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct TraceRow<T> {
    pub iter: usize,
    /// Best objective so far.
    pub objective: T,
    pub primal_res: T,
    pub dual_res: T,
}

#[derive(Debug, Clone)]
pub struct GridSolution<T> {
    /// B-spline coefficients.
    pub c: Vec<T>,
    /// `(P/2π)^{M−1} (d_M ∗ c)`.
    pub innovation: Vec<T>,
    pub objective: T,
    pub iterations: usize,
    pub trace: Vec<TraceRow<T>>,
    /// Whether `c` satisfies the optimality conditions exactly (up to
    /// rounding) after polishing.
    pub polished: bool,
}

pub fn solve_grid<T: Real>(prob: &GridProblem<T>) -> Result<GridSolution<T>> {
    solve_grid_with(prob, &GridSolverConfig::default())
}

pub(super) struct Spectral<T: Real> {
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Real> Spectral<T> {
    pub(super) fn new(p: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(p);
        let inv = planner.plan_fft_inverse(p);
        let len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        Self {
            fwd,
            inv,
            scratch: vec![Complex::new(T::zero(), T::zero()); len],
        }
    }

    pub(super) fn forward(&mut self, x: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = x.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.fwd.process_with_scratch(&mut buf, &mut self.scratch);
        buf
    }

    /// Real part of the normalized inverse transform.
    pub(super) fn inverse_real(&mut self, mut buf: Vec<Complex<T>>) -> Vec<T> {
        self.inv.process_with_scratch(&mut buf, &mut self.scratch);
        let n = T::of_usize(buf.len());
        buf.into_iter().map(|v| v.re / n).collect()
    }
}

fn norm<T: Real>(v: impl Iterator<Item = T>) -> T {
    v.map(|x| x * x).sum::<T>().sqrt()
}

pub fn solve_grid_with<T: Real>(
    prob: &GridProblem<T>,
    cfg: &GridSolverConfig<T>,
) -> Result<GridSolution<T>> {
    let grid = &prob.grid;
    let p = grid.p;
    let kc = grid.kc;
    let pf = T::of_usize(p);
    let two = T::of(2.0);
    let mut fft = Spectral::new(p);

    // Eigenvalues of HᵀH.
    let mut mu = vec![T::zero(); p];
    mu[0] += pf * grid.bspline_fourier[0].norm_sqr();
    for k in 1..=kc {
        let v = pf * grid.bspline_fourier[k].norm_sqr() / two;
        mu[k % p] += v;
        mu[(p - k % p) % p] += v;
    }
    let d2: Vec<T> = grid.dm_dft.iter().map(|d| d.norm_sqr()).collect();

    // Hᵀy.
    let b = prob.y.stacked();
    let mut hty = vec![T::zero(); p];
    for (row, &bv) in b.iter().enumerate() {
        if bv.is_zero() {
            continue;
        }
        for (l, h) in hty.iter_mut().enumerate() {
            *h += prob.h_matrix[(row, l)] * bv;
        }
    }
    let hty_hat = fft.forward(&hty);

    let weight = prob.lambda * prob.reg_scale;
    let objective_of = |c_hat: &[Complex<T>], dc: &[T]| -> T {
        let mut fit = (grid.bspline_fourier[0].re * c_hat[0].re - b[0]).powi(2);
        for k in 1..=kc {
            let v = grid.bspline_fourier[k] * c_hat[k % p];
            fit += (v.re - b[2 * k - 1]).powi(2) + (v.im - b[2 * k]).powi(2);
        }
        T::of(0.5) * fit + weight * dc.iter().map(|v| v.abs()).sum::<T>()
    };

    let mut rho = cfg.rho;
    let mut c = vec![T::zero(); p];
    let mut z = vec![T::zero(); p];
    let mut u = vec![T::zero(); p];
    let mut best_c = c.clone();
    let mut best_obj = T::infinity();
    let mut trace = Vec::new();
    let eps = cfg.tol * pf.sqrt();

    for iter in 1..=cfg.max_iter {
        // c-update in the DFT basis.
        let v: Vec<T> = z.iter().zip(&u).map(|(&a, &b)| a - b).collect();
        let dtv_hat = fft.forward(&grid.apply_filter_adjoint(&v));
        let c_hat: Vec<Complex<T>> = (0..p)
            .map(|j| (hty_hat[j] + dtv_hat[j] * rho) / (mu[j] + rho * d2[j]))
            .collect();
        c = fft.inverse_real(c_hat.clone());

        let dc = grid.apply_filter(&c);
        let z_old = std::mem::take(&mut z);
        let kappa = weight / rho;
        z = dc
            .iter()
            .zip(&u)
            .map(|(&a, &b)| {
                let s = a + b;
                s.signum() * (s.abs() - kappa).max(T::zero())
            })
            .collect();
        for j in 0..p {
            u[j] += dc[j] - z[j];
        }

        let obj = objective_of(&c_hat, &dc);
        if obj < best_obj {
            best_obj = obj;
            best_c.copy_from_slice(&c);
        }
        let r = norm(dc.iter().zip(&z).map(|(&a, &b)| a - b));
        let dz: Vec<T> = z.iter().zip(&z_old).map(|(&a, &b)| a - b).collect();
        let s = rho * norm(grid.apply_filter_adjoint(&dz).into_iter());
        if cfg.record_trace {
            trace.push(TraceRow {
                iter,
                objective: best_obj,
                primal_res: r,
                dual_res: s,
            });
        }
        if r <= eps && s <= eps {
            return Ok(finish(
                prob, cfg, &z, best_c, best_obj, iter, trace, &mut fft,
            ));
        }
        if iter % cfg.balance_every == 0 {
            let ten = T::of(10.0);
            if r > ten * s {
                rho *= two;
                u.iter_mut().for_each(|v| *v /= two);
            } else if s > ten * r {
                rho /= two;
                u.iter_mut().for_each(|v| *v *= two);
            }
        }
    }
    let sol = finish(
        prob,
        cfg,
        &z,
        best_c,
        best_obj,
        cfg.max_iter,
        trace,
        &mut fft,
    );
    if sol.polished {
        return Ok(sol);
    }
    Err(Error::ConvergenceFailure {
        solver: "grid spline ADMM",
        iterations: cfg.max_iter,
        residual: best_obj.to_f64_lossy(),
    })
}

/// Coefficients with the given innovation and mean `y₀`.
fn coefficients_from_innovation<T: Real>(
    prob: &GridProblem<T>,
    a: &[T],
    fft: &mut Spectral<T>,
) -> Vec<T> {
    let g = &prob.grid;
    let pf = T::of_usize(g.p);
    let mut hat = fft.forward(a);
    hat[0] = Complex::new(prob.y.coeffs()[0].re * pf, T::zero());
    for (h, d) in hat.iter_mut().zip(&g.dm_dft).skip(1) {
        *h /= *d * prob.reg_scale;
    }
    fft.inverse_real(hat)
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Real>(
    prob: &GridProblem<T>,
    cfg: &GridSolverConfig<T>,
    z: &[T],
    best_c: Vec<T>,
    best_obj: T,
    iterations: usize,
    trace: Vec<TraceRow<T>>,
    fft: &mut Spectral<T>,
) -> GridSolution<T> {
    let admm = |trace| GridSolution {
        innovation: prob.grid.innovation(&best_c),
        c: best_c.clone(),
        objective: best_obj,
        iterations,
        trace,
        polished: false,
    };
    if !cfg.polish {
        return admm(trace);
    }
    let Some(lasso) = Lasso::new(prob) else {
        return admm(trace);
    };
    let mut start: Vec<(usize, T)> = z
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .map(|(j, &v)| (j, v))
        .collect();
    if start.len() > 2 * prob.grid.kc + 1 {
        start.clear();
    }
    match lasso.solve(&start, 20 * prob.grid.p + 100) {
        Some(a) => {
            let c = coefficients_from_innovation(prob, &a, fft);
            GridSolution {
                objective: prob.objective(&c),
                innovation: a,
                c,
                iterations,
                trace,
                polished: true,
            }
        }
        None => admm(trace),
    }
}
