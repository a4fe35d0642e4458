//! Grid-convergence experiment: random `D^M`-splines with off-grid knots
//! are observed through their low frequencies and reconstructed on
//! successively finer grids.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{build_grid, reconstruct, solve_grid_with, GridProblem, GridSolverConfig};
use crate::bpc::solve_bpc;
use crate::error::{Error, Result};
use crate::measures::ObservationVector;

/// Number of evaluation points for the sup-norm error.
pub const EVAL_POINTS: usize = 4096;

/// `f(t) = mean + Σ a_n G(t − x_n)` with `Σ a_n = 0`, where `G` is the
/// zero-mean periodic Green's function of `D^M`.
#[derive(Debug, Clone, Serialize)]
pub struct GroundTruth {
    pub m: usize,
    pub mean: f64,
    pub knots: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Bernoulli numbers `B_0..=B_n` with `B_1 = −1/2`.
fn bernoulli_numbers(n: usize) -> Vec<f64> {
    let mut b = vec![1.0];
    for j in 1..=n {
        let s: f64 = (0..j).map(|k| binomial(j + 1, k) * b[k]).sum();
        b.push(-s / (j + 1) as f64);
    }
    b
}

impl GroundTruth {
    /// `n` knots, one uniformly placed in each arc of length `2π/n`,
    /// Gaussian amplitudes projected to zero mean, Gaussian mean value.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize) -> Self {
        let arc = std::f64::consts::TAU / n as f64;
        let knots = (0..n)
            .map(|i| (i as f64 + rng.random::<f64>()) * arc)
            .collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let avg = raw.iter().sum::<f64>() / n as f64;
        Self {
            m,
            mean: rng.sample(StandardNormal),
            knots,
            amplitudes: raw.iter().map(|a| a - avg).collect(),
        }
    }

    /// `G(t) = −(2π)^{M−1} B_M(t/2π) / M!` on `[0, 2π)`.
    fn green(&self, t: f64) -> f64 {
        let tau = std::f64::consts::TAU;
        let x = t.rem_euclid(tau) / tau;
        let b = bernoulli_numbers(self.m);
        let poly: f64 = (0..=self.m)
            .map(|k| binomial(self.m, k) * b[self.m - k] * x.powi(k as i32))
            .sum();
        let fact: f64 = (1..=self.m).map(|v| v as f64).product();
        -tau.powi(self.m as i32 - 1) * poly / fact
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.mean
            + self
                .knots
                .iter()
                .zip(&self.amplitudes)
                .map(|(&x, &a)| a * self.green(t - x))
                .sum::<f64>()
    }

    /// `ŷ[0] = mean`, `ŷ[k] = Σ a_n e^{−ikx_n} / (2π (ik)^M)`.
    pub fn observations(&self, kc: usize) -> ObservationVector<f64> {
        let mut coeffs = vec![Complex::new(self.mean, 0.0)];
        for k in 1..=kc {
            let kf = k as f64;
            let sum: Complex<f64> = self
                .knots
                .iter()
                .zip(&self.amplitudes)
                .map(|(&x, &a)| Complex::from_polar(a, -kf * x))
                .sum();
            let denom = Complex::new(0.0, kf).powi(self.m as i32) * std::f64::consts::TAU;
            coeffs.push(sum / denom);
        }
        ObservationVector::new(coeffs).expect("finite coefficients")
    }
}

impl GroundTruth {
    /// The unique minimizer of `‖D^M f‖_M` among functions sharing this
    /// spline's low-frequency data, obtained by certified recovery of its
    /// innovation `ŵ[k] = 2π (ik)^M ŷ[k]` (with `ŵ[0] = 0`). `None` when
    /// recovery is not certified.
    pub fn minimizer(&self, kc: usize) -> Option<GroundTruth> {
        let y = self.observations(kc);
        let mut w = vec![Complex::new(0.0, 0.0)];
        for k in 1..=kc {
            w.push(
                y.coeffs()[k]
                    * Complex::new(0.0, k as f64).powi(self.m as i32)
                    * std::f64::consts::TAU,
            );
        }
        let report = solve_bpc(&ObservationVector::new(w).ok()?).ok()?;
        if !report.kind.is_unique() {
            return None;
        }
        let sol = report.solution?;
        Some(GroundTruth {
            m: self.m,
            mean: self.mean,
            knots: sol.locations(),
            amplitudes: sol.weights(),
        })
    }

    pub fn tv(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.abs()).sum()
    }
}

/// Truncated Fourier series `y₀ + 2 Re Σ_{k≥1} y_k e^{ikt}`.
pub fn truncated_fourier(y: &ObservationVector<f64>, t: f64) -> f64 {
    let c = y.coeffs();
    c[0].re
        + 2.0
            * c[1..]
                .iter()
                .enumerate()
                .map(|(i, v)| (v * Complex::from_polar(1.0, (i + 1) as f64 * t)).re)
                .sum::<f64>()
}

/// Function the grid reconstructions are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// The randomly drawn spline.
    Truth,
    /// The certified continuous-domain minimizer for the same data.
    #[default]
    Minimizer,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub m: usize,
    pub kc: usize,
    pub lambda: f64,
    pub p_list: Vec<usize>,
    pub runs: usize,
    pub knots: usize,
    pub seed: u64,
    #[serde(skip)]
    pub solver: GridSolverConfig<f64>,
}

impl ExperimentConfig {
    pub fn new(
        m: usize,
        kc: usize,
        lambda: f64,
        p_list: Vec<usize>,
        runs: usize,
        seed: u64,
    ) -> Self {
        Self {
            m,
            kc,
            lambda,
            p_list,
            runs,
            knots: 2,
            seed,
            solver: GridSolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    pub p: usize,
    pub mean_linf_error: f64,
    pub std_linf_error: f64,
    /// Runs contributing at this `P`.
    pub runs: usize,
}

/// Sup-norm errors against one reference.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorTable {
    pub rows: Vec<ExperimentRow>,
    /// Least-squares slope of `log(mean error)` against `log P`.
    pub slope: Option<f64>,
    /// `errors[run][i]` for `P = p_list[i]`; `None` where unavailable.
    pub errors: Vec<Vec<Option<f64>>>,
    /// Steps per run where the error grew by more than 10%.
    pub monotonicity_violations: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub truth: ErrorTable,
    pub minimizer: ErrorTable,
    /// Runs whose drawn spline is itself the minimizer.
    pub truth_is_minimizer: Vec<Option<bool>>,
    /// Mean sup-norm error of the truncated Fourier series.
    pub baseline_linf_error: f64,
}

impl ExperimentResult {
    pub fn table(&self, reference: Reference) -> &ErrorTable {
        match reference {
            Reference::Truth => &self.truth,
            Reference::Minimizer => &self.minimizer,
        }
    }
}

fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run as u64);
    rng
}

fn sample(points: &[f64], g: &GroundTruth) -> Vec<f64> {
    points.iter().map(|&t| g.eval(t)).collect()
}

fn sup_error(points: &[f64], values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    points
        .iter()
        .zip(values)
        .map(|(&t, &v)| (f(t) - v).abs())
        .fold(0.0, f64::max)
}

fn tabulate(p_list: &[usize], errors: Vec<Vec<Option<f64>>>) -> ErrorTable {
    let rows: Vec<ExperimentRow> = p_list
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let vals: Vec<f64> = errors.iter().filter_map(|e| e[i]).collect();
            let n = vals.len();
            let mean = if n > 0 {
                vals.iter().sum::<f64>() / n as f64
            } else {
                f64::NAN
            };
            let var = if n > 1 {
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            ExperimentRow {
                p,
                mean_linf_error: mean,
                std_linf_error: var.sqrt(),
                runs: n,
            }
        })
        .collect();
    let monotonicity_violations = errors
        .iter()
        .map(|e| {
            e.windows(2)
                .filter(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b > 1.1 * a))
                .count()
        })
        .collect();
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.runs > 0 && r.mean_linf_error > 0.0)
        .map(|r| (r.p as f64, r.mean_linf_error))
        .collect();
    ErrorTable {
        slope: fit_loglog_slope(&pairs),
        rows,
        errors,
        monotonicity_violations,
    }
}

/// Sup-norm reconstruction errors for every `(run, P)` cell, solved in
/// parallel. Each run's ground truth is drawn from its own stream of the
/// seeded generator, so results do not depend on scheduling.
pub fn convergence_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    if cfg.m < 2 {
        return Err(Error::invalid("the convergence experiment needs M ≥ 2"));
    }
    if cfg.runs == 0 || cfg.p_list.is_empty() {
        return Err(Error::invalid("need at least one run and one grid size"));
    }
    if cfg.knots < 2 {
        return Err(Error::invalid("ground truth needs at least two knots"));
    }
    let grids = cfg
        .p_list
        .iter()
        .map(|&p| build_grid::<f64>(p, cfg.m, cfg.kc))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<f64> = (0..EVAL_POINTS)
        .map(|i| std::f64::consts::TAU * i as f64 / EVAL_POINTS as f64)
        .collect();
    let truths: Vec<GroundTruth> = (0..cfg.runs)
        .map(|r| GroundTruth::random(&mut run_rng(cfg.seed, r), cfg.m, cfg.knots))
        .collect();
    let minimizers: Vec<Option<GroundTruth>> =
        truths.par_iter().map(|g| g.minimizer(cfg.kc)).collect();
    let truth_values: Vec<Vec<f64>> = truths.iter().map(|g| sample(&points, g)).collect();
    let minimizer_values: Vec<Option<Vec<f64>>> = minimizers
        .iter()
        .map(|g| g.as_ref().map(|g| sample(&points, g)))
        .collect();

    let cells: Vec<(usize, usize)> = (0..cfg.runs)
        .flat_map(|r| (0..cfg.p_list.len()).map(move |i| (r, i)))
        .collect();
    let results: Vec<Option<(f64, Option<f64>)>> = cells
        .par_iter()
        .map(|&(r, i)| {
            let y = truths[r].observations(cfg.kc);
            let prob = GridProblem::new(y, cfg.lambda, grids[i].clone()).ok()?;
            let sol = solve_grid_with(&prob, &cfg.solver).ok()?;
            let f = |t| reconstruct(&sol.c, &grids[i], t);
            let vs_truth = sup_error(&points, &truth_values[r], f);
            let vs_min = minimizer_values[r]
                .as_ref()
                .map(|v| sup_error(&points, v, f));
            Some((vs_truth, vs_min))
        })
        .collect();

    let np = cfg.p_list.len();
    let truth_errors = results
        .chunks(np)
        .map(|c| c.iter().map(|e| e.map(|e| e.0)).collect())
        .collect();
    let minimizer_errors = results
        .chunks(np)
        .map(|c| c.iter().map(|e| e.and_then(|e| e.1)).collect())
        .collect();
    let truth_is_minimizer = truths
        .iter()
        .zip(&minimizers)
        .map(|(g, s)| {
            s.as_ref()
                .map(|s| (s.tv() - g.tv()).abs() <= 1e-8 * (1.0 + g.tv()))
        })
        .collect();
    let baseline_linf_error = truths
        .iter()
        .zip(&truth_values)
        .map(|(g, v)| {
            let y = g.observations(cfg.kc);
            sup_error(&points, v, |t| truncated_fourier(&y, t))
        })
        .sum::<f64>()
        / cfg.runs as f64;

    Ok(ExperimentResult {
        truth: tabulate(&cfg.p_list, truth_errors),
        minimizer: tabulate(&cfg.p_list, minimizer_errors),
        truth_is_minimizer,
        baseline_linf_error,
    })
}

/// Least-squares slope of `log y` against `log x`; `None` below two points.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn green_function_matches_fourier_series() {
        let g = GroundTruth {
            m: 2,
            mean: 0.3,
            knots: vec![1.0, 4.0],
            amplitudes: vec![0.8, -0.8],
        };
        // Compare against a long partial Fourier sum.
        let y = g.observations(4000);
        for t in [0.2, 1.7, 3.3, 5.9] {
            let direct = g.eval(t);
            let series = truncated_fourier(&y, t);
            assert!((direct - series).abs() < 1e-3, "{direct} {series}");
        }
    }

    #[test]
    fn piecewise_linear_truth() {
        let g = GroundTruth {
            m: 2,
            mean: 0.0,
            knots: vec![1.0, 4.0],
            amplitudes: vec![1.0, -1.0],
        };
        // The second derivative vanishes away from the knots.
        let (a, b, c) = (g.eval(2.0), g.eval(2.5), g.eval(3.0));
        assert!((a - 2.0 * b + c).abs() < 1e-12);
        // Zero mean over the circle.
        let n = 10_000;
        let avg: f64 = (0..n)
            .map(|i| g.eval(i as f64 * std::f64::consts::TAU / n as f64))
            .sum::<f64>()
            / n as f64;
        assert!(avg.abs() < 1e-6);
    }

    #[test]
    fn separated_dipole_is_its_own_minimizer() {
        let g = GroundTruth {
            m: 2,
            mean: -0.4,
            knots: vec![0.5, 3.6],
            amplitudes: vec![0.7, -0.7],
        };
        let s = g.minimizer(3).unwrap();
        assert!((s.tv() - g.tv()).abs() < 1e-9);
        for t in [0.1, 2.0, 4.4] {
            assert!((s.eval(t) - g.eval(t)).abs() < 1e-8);
        }
    }

    #[test]
    fn close_dipole_is_not_minimal() {
        let g = GroundTruth {
            m: 2,
            mean: 0.0,
            knots: vec![3.1, 3.3],
            amplitudes: vec![0.5, -0.5],
        };
        let s = g.minimizer(3).unwrap();
        assert!(s.tv() < 0.5 * g.tv());
        // Same data.
        assert!(s.observations(3).max_abs_diff(&g.observations(3)) < 1e-9);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [16.0, 32.0, 64.0].iter().map(|&p| (p, 3.0 / p)).collect();
        assert!((fit_loglog_slope(&pts).unwrap() + 1.0).abs() < 1e-12);
        assert!(fit_loglog_slope(&pts[..1]).is_none());
    }

    #[test]
    fn knots_on_coarsest_grid() {
        let p = 16;
        let h = std::f64::consts::TAU / p as f64;
        let g = GroundTruth {
            m: 2,
            mean: 0.1,
            knots: vec![3.0 * h, 11.0 * h],
            amplitudes: vec![0.9, -0.9],
        };
        let grid = build_grid::<f64>(p, 2, 3).unwrap();
        let prob = GridProblem::new(g.observations(3), 1e-7, grid.clone()).unwrap();
        let sol = super::super::solve_grid(&prob).unwrap();
        let err = (0..EVAL_POINTS)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / EVAL_POINTS as f64;
                (reconstruct(&sol.c, &grid, t) - g.eval(t)).abs()
            })
            .fold(0.0, f64::max);
        assert!(err <= 1e-5, "{err}");
    }
}
