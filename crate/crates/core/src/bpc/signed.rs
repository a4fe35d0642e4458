//! Recovery of the unique signed minimizer in the indefinite regime.
//!
//! A grid basis pursuit gives a provisional support and an approximate dual
//! polynomial. Both are then refined jointly by a damped Gauss-Newton
//! iteration on the continuous optimality system
//!
//! ```text
//! η(x_j) = s_j,   η'(x_j) = 0,   Σ_j a_j ν(δ_{x_j}) = y
//! ```
//!
//! in the unknowns `(η, x, a)`. Atoms whose amplitude vanishes are pruned
//! and the iteration restarted. The result is accepted only with a verified
//! dual polynomial: the refined one, else the interpolant with the widest
//! margin below one away from the support, else the minimum-norm one.
//! Failing that, the weakest atom is dropped and the refinement repeated.

use num_complex::Complex;

use super::grid_lp::{solve_grid_basis_pursuit, GridLpConfig, GridLpSolution};
use super::simplex::{solve_lp, Lp, LpStatus};
use crate::certificates::{construct_certificate, verify_certificate, TrigPoly, FEASIBILITY_TOL};
use crate::error::{Error, RecoveryStage, Result};
use crate::linalg::{lstsq_min_norm, Matrix};
use crate::measures::{Atom, ObservationVector, SparseMeasure};
use crate::scalar::{circular_distance, wrap_angle, Real};
use crate::toeplitz::{
    build_toeplitz, classify_regime, fourier_dictionary, solve_amplitudes, Regime,
};

/// Weights below this magnitude are dropped after the final amplitude solve.
pub const PRUNE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct SignedRecoveryConfig<T> {
    pub grid: GridLpConfig<T>,
    pub newton_iterations: usize,
    /// Rounds of refinement followed by pruning of vanishing atoms.
    pub max_rounds: usize,
}

impl<T: Real> SignedRecoveryConfig<T> {
    pub fn for_kc(kc: usize) -> Self {
        Self {
            grid: GridLpConfig::for_kc(kc),
            newton_iterations: 40,
            max_rounds: 20,
        }
    }
}

/// Unique signed minimizer and its certificate, for indefinite `T_y`.
pub fn recover_signed<T: Real>(
    y: &ObservationVector<T>,
) -> Result<(SparseMeasure<T>, TrigPoly<T>)> {
    recover_signed_with(y, &SignedRecoveryConfig::for_kc(y.kc()))
}

pub fn recover_signed_with<T: Real>(
    y: &ObservationVector<T>,
    cfg: &SignedRecoveryConfig<T>,
) -> Result<(SparseMeasure<T>, TrigPoly<T>)> {
    let kc = y.kc();
    let report = classify_regime(&build_toeplitz(y), None)?;
    if report.regime != Regime::Indefinite {
        return Err(Error::invalid(format!(
            "signed recovery needs an indefinite Toeplitz matrix, got {}",
            report.regime
        )));
    }

    let grid = solve_grid_basis_pursuit(y, &cfg.grid)?;
    if !grid.optimal {
        return Err(Error::recovery(
            RecoveryStage::GridSolve,
            format!(
                "no optimal grid vertex after {} pivots (feasibility error {})",
                grid.iterations, grid.feasibility_error
            ),
        ));
    }
    let clusters = cluster(&grid, 2 * kc);
    if clusters.is_empty() {
        return Err(Error::recovery(
            RecoveryStage::Clustering,
            "grid solution is empty",
        ));
    }

    let mut state = KktState::new(poly_from_dual(kc, &grid.dual), &clusters);
    state.refine(y, cfg);
    // Spurious weak atoms from the grid can block certification of the true
    // support; retry with the weakest atom removed while any remain.
    let mut first_failure = None;
    while !state.locations.is_empty() {
        let outcome = final_amplitudes(y, &state.locations).and_then(|w| {
            let p = certify(&w, &state.poly(), y)?;
            Ok((w, p))
        });
        match outcome {
            Ok(found) => return Ok(found),
            Err(e) => {
                first_failure.get_or_insert(e);
            }
        }
        if state.locations.len() <= 2 {
            break;
        }
        state.drop_weakest();
        state.refine(y, cfg);
    }
    Err(first_failure
        .unwrap_or_else(|| Error::recovery(RecoveryStage::Refinement, "every atom was pruned")))
}

/// Checks a candidate measure and returns the first polynomial that
/// certifies it: the refined dual, the widest-margin interpolant, or the
/// minimum-norm interpolant.
fn certify<T: Real>(
    w: &SparseMeasure<T>,
    refined: &TrigPoly<T>,
    y: &ObservationVector<T>,
) -> Result<TrigPoly<T>> {
    let kc = y.kc();
    let feas = w.forward(kc).max_abs_diff(y);
    if feas > T::accuracy(FEASIBILITY_TOL) {
        return Err(Error::recovery(
            RecoveryStage::Feasibility,
            format!("‖ν(w) − y‖∞ = {feas}"),
        ));
    }
    if w.len() > 2 * kc {
        return Err(Error::recovery(
            RecoveryStage::AtomCount,
            format!("{} atoms exceed the bound {}", w.len(), 2 * kc),
        ));
    }
    if !w.has_mixed_signs() {
        return Err(Error::recovery(
            RecoveryStage::SignPattern,
            "recovered measure has a single sign",
        ));
    }

    let mut details = Vec::new();
    let check = verify_certificate(refined, w, y);
    if check.certifies_uniqueness() {
        return Ok(refined.clone());
    }
    details.push(format!(
        "refined dual: excess {}, saturation gap {}",
        check.worst_excess, check.worst_saturation_gap
    ));
    match margin_certificate(w, kc) {
        Some(p) => {
            let check = verify_certificate(&p, w, y);
            if check.certifies_uniqueness() {
                return Ok(p);
            }
            details.push(format!(
                "margin program: excess {}, saturation gap {}",
                check.worst_excess, check.worst_saturation_gap
            ));
        }
        None => details.push("margin program: infeasible".to_string()),
    }
    match construct_certificate(w, kc) {
        Ok(p) => {
            let check = verify_certificate(&p, w, y);
            if check.certifies_uniqueness() {
                return Ok(p);
            }
            details.push(format!(
                "min-norm interpolant: excess {}, saturation gap {}",
                check.worst_excess, check.worst_saturation_gap
            ));
        }
        Err(e) => details.push(format!("min-norm interpolant: {e}")),
    }
    Err(Error::recovery(
        RecoveryStage::Certification,
        details.join("; "),
    ))
}

/// Groups the grid support into clusters separated by more than three grid
/// cells (cyclically) or by a sign change, and returns one atom per cluster
/// at the `|a|`-weighted circular mean carrying the cluster mass. At most
/// `max_atoms` clusters are kept, the heaviest first.
fn cluster<T: Real>(grid: &GridLpSolution<T>, max_atoms: usize) -> Vec<Atom<T>> {
    let n = grid.weights.len();
    let peak = grid.weights.iter().fold(T::zero(), |m, w| m.max(w.abs()));
    if peak.is_zero() {
        return Vec::new();
    }
    let cut = peak * T::tol(1e-7);
    let support: Vec<usize> = (0..n).filter(|&j| grid.weights[j].abs() > cut).collect();

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &j in &support {
        match groups.last_mut() {
            Some(g)
                if j - *g.last().unwrap() <= 3
                    && grid.weights[j].signum() == grid.weights[g[0]].signum() =>
            {
                g.push(j)
            }
            _ => groups.push(vec![j]),
        }
    }
    if groups.len() > 1 {
        let first = groups[0][0];
        let last = *groups.last().unwrap().last().unwrap();
        let same_sign = grid.weights[first].signum() == grid.weights[last].signum();
        if first + n - last <= 3 && same_sign {
            let head = groups.remove(0);
            groups.last_mut().unwrap().extend(head);
        }
    }

    let mut atoms: Vec<Atom<T>> = groups
        .iter()
        .map(|g| {
            let (mut s, mut c, mut mass) = (T::zero(), T::zero(), T::zero());
            for &j in g {
                let w = grid.weights[j];
                let (sn, cs) = grid.grid_point(j).sin_cos();
                s += w.abs() * sn;
                c += w.abs() * cs;
                mass += w;
            }
            Atom::new(s.atan2(c), mass)
        })
        .collect();
    atoms.sort_by(|a, b| b.weight.abs().partial_cmp(&a.weight.abs()).unwrap());
    atoms.truncate(max_atoms);
    atoms
}

/// Gradients of `η(t)` and `η'(t)` with respect to `(c₀, α₁, β₁, …)`.
fn eta_gradients<T: Real>(kc: usize, t: T) -> (Vec<T>, Vec<T>) {
    let two = T::of(2.0);
    let mut g = vec![T::one()];
    let mut d = vec![T::zero()];
    for k in 1..=kc {
        let kf = T::of_usize(k);
        let (s, c) = (kf * t).sin_cos();
        g.extend([two * c, two * s]);
        d.extend([-two * kf * s, two * kf * c]);
    }
    (g, d)
}

/// The interpolating polynomial (`η(x_j) = sign a_j`, `η'(x_j) = 0`) that
/// maximizes `δ` subject to `|η(t)| ≤ 1 − δ·min(1, (K_c·dist(t, supp))²)`
/// on a fine grid, found through its dual in standard form.
fn margin_certificate<T: Real>(w: &SparseMeasure<T>, kc: usize) -> Option<TrigPoly<T>> {
    let nv = 2 * kc + 1;
    let n = 64 * (kc + 1);
    let locs = w.locations();
    let kcf = T::of_usize(kc);
    let mut cols = Vec::with_capacity(2 * n + 4 * locs.len());
    let mut cost = Vec::with_capacity(cols.capacity());
    for i in 0..n {
        let t = T::two_pi() * T::of_usize(i) / T::of_usize(n);
        let dist = locs
            .iter()
            .fold(T::PI(), |m, &x| m.min(circular_distance(t, x)));
        let weight = (kcf * dist).powi(2).min(T::one());
        let (g, _) = eta_gradients(kc, t);
        for sign in [T::one(), -T::one()] {
            let mut col: Vec<T> = g.iter().map(|&v| sign * v).collect();
            col.push(weight);
            cols.push(col);
            cost.push(T::one());
        }
    }
    for atom in w.atoms() {
        let (g, d) = eta_gradients(kc, atom.location);
        let target = atom.weight.signum();
        for sign in [T::one(), -T::one()] {
            let mut col: Vec<T> = g.iter().map(|&v| sign * v).collect();
            col.push(T::zero());
            cols.push(col);
            cost.push(sign * target);
            let mut col: Vec<T> = d.iter().map(|&v| sign * v).collect();
            col.push(T::zero());
            cols.push(col);
            cost.push(T::zero());
        }
    }
    let mut b = vec![T::zero(); nv + 1];
    b[nv] = T::one();
    let sol = solve_lp(&Lp { cols, cost, b }, T::tol(1e-12), 20_000);
    if sol.status != LpStatus::Optimal {
        return None;
    }
    let v = &sol.pi[..nv];
    let mut coeffs = vec![Complex::new(v[0], T::zero())];
    for k in 1..=kc {
        coeffs.push(Complex::new(v[2 * k - 1], v[2 * k]));
    }
    TrigPoly::new(coeffs).ok()
}

/// Dual polynomial `Fᵀλ` written in certificate coefficients.
fn poly_from_dual<T: Real>(kc: usize, lam: &[T]) -> TrigPoly<T> {
    let half = T::of(0.5);
    let mut coeffs = vec![Complex::new(lam[0], T::zero())];
    for k in 1..=kc {
        coeffs.push(Complex::new(lam[2 * k - 1] * half, -lam[2 * k] * half));
    }
    TrigPoly::new(coeffs).expect("real constant term")
}

/// Unknowns of the optimality system. The dual polynomial is
/// `η(t) = c₀ + 2 Σ_k (α_k cos kt + β_k sin kt)`, stored as
/// `(c₀, α₁, β₁, …)`.
struct KktState<T> {
    kc: usize,
    dual: Vec<T>,
    locations: Vec<T>,
    weights: Vec<T>,
    signs: Vec<T>,
}

impl<T: Real> KktState<T> {
    fn new(p: TrigPoly<T>, atoms: &[Atom<T>]) -> Self {
        let kc = p.kc();
        let mut dual = vec![p.coeffs()[0].re];
        for c in &p.coeffs()[1..] {
            dual.push(c.re);
            dual.push(c.im);
        }
        Self {
            kc,
            dual,
            locations: atoms.iter().map(|a| a.location).collect(),
            weights: atoms.iter().map(|a| a.weight).collect(),
            signs: atoms.iter().map(|a| a.weight.signum()).collect(),
        }
    }

    fn poly(&self) -> TrigPoly<T> {
        let mut coeffs = vec![Complex::new(self.dual[0], T::zero())];
        for k in 1..=self.kc {
            coeffs.push(Complex::new(self.dual[2 * k - 1], self.dual[2 * k]));
        }
        TrigPoly::new(coeffs).expect("real constant term")
    }

    /// `(η, η', η'')` at `t`.
    fn eta(dual: &[T], kc: usize, t: T) -> (T, T, T) {
        let two = T::of(2.0);
        let (mut v, mut d1, mut d2) = (dual[0], T::zero(), T::zero());
        for k in 1..=kc {
            let kf = T::of_usize(k);
            let (s, c) = (kf * t).sin_cos();
            let (al, be) = (dual[2 * k - 1], dual[2 * k]);
            v += two * (al * c + be * s);
            d1 += two * kf * (be * c - al * s);
            d2 -= two * kf * kf * (al * c + be * s);
        }
        (v, d1, d2)
    }

    fn residual(&self, y: &[T], dual: &[T], x: &[T], a: &[T]) -> Vec<T> {
        let kc = self.kc;
        let mut r = Vec::with_capacity(2 * x.len() + y.len());
        for (&xj, &sj) in x.iter().zip(&self.signs) {
            r.push(Self::eta(dual, kc, xj).0 - sj);
        }
        for &xj in x {
            r.push(Self::eta(dual, kc, xj).1);
        }
        let f = fourier_dictionary(kc, x).mul_vec(a);
        r.extend(f.iter().zip(y).map(|(&u, &v)| u - v));
        r
    }

    fn jacobian(&self) -> Matrix<T> {
        let kc = self.kc;
        let kk = self.locations.len();
        let nv = 2 * kc + 1;
        let rows = 2 * kk + nv;
        let cols = nv + 2 * kk;
        let two = T::of(2.0);
        let mut j = Matrix::zeros(rows, cols);
        for (i, &x) in self.locations.iter().enumerate() {
            let (_, d1, d2) = Self::eta(&self.dual, kc, x);
            j[(i, 0)] = T::one();
            for k in 1..=kc {
                let kf = T::of_usize(k);
                let (s, c) = (kf * x).sin_cos();
                j[(i, 2 * k - 1)] = two * c;
                j[(i, 2 * k)] = two * s;
                j[(kk + i, 2 * k - 1)] = -two * kf * s;
                j[(kk + i, 2 * k)] = two * kf * c;
            }
            j[(i, nv + i)] = d1;
            j[(kk + i, nv + i)] = d2;

            let a = self.weights[i];
            let base = 2 * kk;
            j[(base, nv + kk + i)] = T::one();
            for k in 1..=kc {
                let kf = T::of_usize(k);
                let (s, c) = (kf * x).sin_cos();
                j[(base + 2 * k - 1, nv + kk + i)] = c;
                j[(base + 2 * k, nv + kk + i)] = -s;
                j[(base + 2 * k - 1, nv + i)] = -a * kf * s;
                j[(base + 2 * k, nv + i)] = -a * kf * c;
            }
        }
        j
    }

    /// Newton rounds, each followed by pruning of vanished atoms.
    fn refine(&mut self, y: &ObservationVector<T>, cfg: &SignedRecoveryConfig<T>) {
        for _ in 0..cfg.max_rounds {
            self.solve(y, cfg.newton_iterations);
            if !self.prune(T::tol(PRUNE_TOL)) {
                break;
            }
        }
    }

    fn drop_weakest(&mut self) {
        let Some(i) = (0..self.weights.len()).min_by(|&a, &b| {
            self.weights[a]
                .abs()
                .partial_cmp(&self.weights[b].abs())
                .unwrap()
        }) else {
            return;
        };
        self.locations.remove(i);
        self.weights.remove(i);
        self.signs.remove(i);
    }

    /// Drops atoms whose amplitude fell below `tol`; true if any were dropped.
    fn prune(&mut self, tol: T) -> bool {
        let keep: Vec<bool> = self.weights.iter().map(|a| a.abs() >= tol).collect();
        if keep.iter().all(|&k| k) {
            return false;
        }
        let filter = |v: &[T]| {
            v.iter()
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(&x, _)| x)
                .collect()
        };
        self.locations = filter(&self.locations);
        self.weights = filter(&self.weights);
        self.signs = filter(&self.signs);
        true
    }

    fn solve(&mut self, y: &ObservationVector<T>, max_iter: usize) {
        let b = y.stacked();
        let nv = 2 * self.kc + 1;
        let kk = self.locations.len();
        let floor = T::epsilon() * T::of(64.0) * b.iter().fold(T::one(), |m, v| m.max(v.abs()));
        let mut r = self.residual(&b, &self.dual, &self.locations, &self.weights);
        let mut rn = norm(&r);
        for _ in 0..max_iter {
            if rn <= floor {
                break;
            }
            let jac = self.jacobian();
            let neg: Vec<T> = r.iter().map(|&v| -v).collect();
            let Ok(step) = lstsq_min_norm(&jac, &neg, T::tol(1e-12)) else {
                break;
            };
            let d = step.x;
            let mut t = T::one();
            let mut accepted = false;
            for _ in 0..30 {
                let dual: Vec<T> = (0..nv).map(|i| self.dual[i] + t * d[i]).collect();
                let x: Vec<T> = (0..kk).map(|i| self.locations[i] + t * d[nv + i]).collect();
                let a: Vec<T> = (0..kk)
                    .map(|i| self.weights[i] + t * d[nv + kk + i])
                    .collect();
                let r_new = self.residual(&b, &dual, &x, &a);
                let n_new = norm(&r_new);
                if n_new < rn {
                    self.dual = dual;
                    self.locations = x.into_iter().map(wrap_angle).collect();
                    self.weights = a;
                    r = r_new;
                    rn = n_new;
                    accepted = true;
                    break;
                }
                t *= T::of(0.5);
            }
            if !accepted {
                break;
            }
        }
    }
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Least-squares amplitudes on the refined support, with negligible atoms
/// dropped and the remaining amplitudes re-solved.
fn final_amplitudes<T: Real>(
    y: &ObservationVector<T>,
    locations: &[T],
) -> Result<SparseMeasure<T>> {
    let mut locs: Vec<T> = locations.to_vec();
    for _ in 0..=locations.len() {
        let a = solve_amplitudes(y, &locs)
            .map_err(|e| Error::recovery(RecoveryStage::Refinement, e.to_string()))?;
        let keep: Vec<bool> = a.iter().map(|v| v.abs() >= T::tol(PRUNE_TOL)).collect();
        if keep.iter().all(|&k| k) {
            return Ok(SparseMeasure::from_pairs(locs.into_iter().zip(a)));
        }
        locs = locs
            .into_iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(l, _)| l)
            .collect();
        if locs.is_empty() {
            break;
        }
    }
    Err(Error::recovery(
        RecoveryStage::Refinement,
        "every amplitude vanished",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn alternating_four_atoms() {
        let y = ObservationVector::from_real(&[0.0, 0.0, 4.0]).unwrap();
        let (w, p): (SparseMeasure<f64>, _) = recover_signed(&y).unwrap();
        assert_eq!(w.len(), 4);
        assert!((w.tv_norm() - 4.0).abs() < 1e-8);
        let expected = [0.0, PI / 2.0, PI, 3.0 * PI / 2.0];
        for (atom, (&x, s)) in w
            .atoms()
            .iter()
            .zip(expected.iter().zip([1.0, -1.0, 1.0, -1.0]))
        {
            assert!(crate::scalar::circular_distance(atom.location, x) < 1e-6);
            assert!((atom.weight - s).abs() < 1e-6);
        }
        let cos2 = TrigPoly::<f64>::cosine(2, 2);
        assert!(p.max_coeff_diff(&cos2) < 1e-6);
    }

    #[test]
    fn dipole() {
        let w0 = SparseMeasure::from_pairs([(1.0, 1.0), (1.0 + PI, -0.7)]);
        let y = w0.forward(3);
        let (w, _) = recover_signed(&y).unwrap();
        let (dx, da) = w.max_atom_error(&w0).unwrap();
        assert!(dx < 1e-6 && da < 1e-6, "{dx} {da}");
    }

    #[test]
    fn well_separated_pair() {
        let w0 = SparseMeasure::from_pairs([(0.7, 0.9), (3.9, -0.5)]);
        let (w, p) = recover_signed(&w0.forward(4)).unwrap();
        let (dx, da) = w.max_atom_error(&w0).unwrap();
        assert!(dx < 1e-6 && da < 1e-6, "{dx} {da}");
        assert!(p.is_nonconstant());
    }

    #[test]
    fn margin_program_certifies_alternating_measure() {
        let w = crate::generate::alternating_measure::<f64>(3);
        let p = margin_certificate(&w, 3).unwrap();
        assert!(p.max_coeff_diff(&TrigPoly::cosine(3, 3)) < 1e-9);
    }

    #[test]
    fn weak_grid_atoms_are_discarded() {
        let w0 = SparseMeasure::from_pairs([
            (2.4194908599738882, -0.6985779648721652),
            (3.688581784367716, -0.41268779541908956),
            (5.034516689165638, 0.9127595404383755),
        ]);
        let (w, p) = recover_signed(&w0.forward(3)).unwrap();
        let (dx, da) = w.max_atom_error(&w0).unwrap();
        assert!(dx < 1e-9 && da < 1e-9, "{dx} {da}");
        assert!(p.is_nonconstant());
    }

    #[test]
    fn rejects_psd_data() {
        let y = ObservationVector::from_real(&[1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(recover_signed(&y), Err(Error::InvalidInput(_))));
    }
}
