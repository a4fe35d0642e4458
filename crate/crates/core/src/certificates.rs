//! Real trigonometric polynomials used as dual certificates, their
//! construction by Hermite interpolation and their verification.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lstsq_min_norm, Matrix};
use crate::measures::{ObservationVector, SparseMeasure};
use crate::scalar::Real;

/// Tolerance on `|η(x_j) − sign(a_j)|` and on `sup|η| − 1`.
pub const CERTIFICATE_TOL: f64 = 1e-7;
/// Tolerance on `‖ν(w) − y‖∞` for the candidate measure.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// `η(t) = c₀ + 2 Σ_{k=1}^{K_c} Re(c_k e^{-ikt})`, real valued.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly<T> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> TrigPoly<T> {
    pub fn new(coeffs: Vec<Complex<T>>) -> Result<Self> {
        match coeffs.first() {
            None => Err(Error::invalid("trigonometric polynomial needs c_0")),
            Some(c) if !c.im.is_zero() => Err(Error::invalid("c_0 must be real")),
            Some(_) => Ok(Self { coeffs }),
        }
    }

    pub fn constant(kc: usize, value: T) -> Self {
        let mut coeffs = vec![Complex::zero(); kc + 1];
        coeffs[0] = Complex::new(value, T::zero());
        Self { coeffs }
    }

    /// `cos(k t)` as a degree-`kc` polynomial.
    pub fn cosine(kc: usize, k: usize) -> Self {
        assert!(k <= kc);
        if k == 0 {
            return Self::constant(kc, T::one());
        }
        let mut coeffs = vec![Complex::zero(); kc + 1];
        coeffs[k] = Complex::new(T::of(0.5), T::zero());
        Self { coeffs }
    }

    pub fn kc(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn eval(&self, t: T) -> T {
        let two = T::of(2.0);
        let mut v = self.coeffs[0].re;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            let (s, co) = (T::of_usize(k) * t).sin_cos();
            // Re((a + ib)(cos − i sin)) = a cos + b sin
            v += two * (c.re * co + c.im * s);
        }
        v
    }

    /// Analytic derivative: `c_k ↦ −ik c_k`.
    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex::new(T::zero(), -T::of_usize(k)))
            .collect::<Vec<_>>();
        let mut coeffs = coeffs;
        coeffs[0] = Complex::zero();
        Self { coeffs }
    }

    pub fn eval_derivative(&self, t: T) -> T {
        let two = T::of(2.0);
        let mut v = T::zero();
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            let kf = T::of_usize(k);
            let (s, co) = (kf * t).sin_cos();
            v += two * kf * (c.im * co - c.re * s);
        }
        v
    }

    /// Upper bound on `sup |η^{(order)}|` from the coefficients.
    fn derivative_bound(&self, order: i32) -> T {
        let two = T::of(2.0);
        let base = if order == 0 {
            self.coeffs[0].re.abs()
        } else {
            T::zero()
        };
        base + self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| two * T::of_usize(k).powi(order) * c.norm())
            .sum::<T>()
    }

    pub fn is_nonconstant(&self) -> bool {
        let high = self.coeffs[1..]
            .iter()
            .fold(T::zero(), |m, c| m.max(c.norm()));
        high > T::tol(1e-12) * T::one().max(self.coeffs[0].re.abs())
    }

    /// `⟨w, η⟩ = Σ_j a_j η(x_j)`.
    pub fn pairing(&self, w: &SparseMeasure<T>) -> T {
        w.atoms()
            .iter()
            .map(|a| a.weight * self.eval(a.location))
            .sum()
    }

    pub fn max_coeff_diff(&self, other: &Self) -> T {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|k| {
                let a = self.coeffs.get(k).copied().unwrap_or_else(Complex::zero);
                let b = other.coeffs.get(k).copied().unwrap_or_else(Complex::zero);
                (a - b).norm()
            })
            .fold(T::zero(), T::max)
    }

    pub fn neg(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    /// Zeros of `η'` located by sign changes on an `n`-point grid.
    pub fn derivative_sign_changes(&self, n: usize) -> usize {
        let tau = T::two_pi();
        let vals: Vec<T> = (0..n)
            .map(|i| self.eval_derivative(tau * T::of_usize(i) / T::of_usize(n)))
            .collect();
        (0..n)
            .filter(|&i| {
                let (a, b) = (vals[i], vals[(i + 1) % n]);
                (a > T::zero() && b <= T::zero()) || (a < T::zero() && b >= T::zero())
            })
            .count()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct TrigPolyJson<T> {
    kc: usize,
    c: Vec<[T; 2]>,
}

impl<T: Real> Serialize for TrigPoly<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TrigPolyJson {
            kc: self.kc(),
            c: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for TrigPoly<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = TrigPolyJson::<T>::deserialize(d)?;
        if raw.c.len() != raw.kc + 1 {
            return Err(D::Error::custom(format!(
                "expected {} coefficients for kc = {}",
                raw.kc + 1,
                raw.kc
            )));
        }
        TrigPoly::new(raw.c.iter().map(|p| Complex::new(p[0], p[1])).collect())
            .map_err(D::Error::custom)
    }
}

pub fn eval<T: Real>(p: &TrigPoly<T>, t: T) -> T {
    p.eval(t)
}

pub fn eval_derivative<T: Real>(p: &TrigPoly<T>, t: T) -> T {
    p.eval_derivative(t)
}

pub fn is_nonconstant<T: Real>(p: &TrigPoly<T>) -> bool {
    p.is_nonconstant()
}

/// Minimum-norm degree-`kc` polynomial with `η(x_j) = sign(a_j)` and
/// `η'(x_j) = 0` at every atom. The norm minimized is `Σ_{|k|≤K_c} |c_k|²`.
///
/// The result is only a candidate; run [`verify_certificate`] on it.
pub fn construct_certificate<T: Real>(w: &SparseMeasure<T>, kc: usize) -> Result<TrigPoly<T>> {
    let k_atoms = w.len();
    if k_atoms > 2 * kc.max(1) {
        return Err(Error::invalid(format!(
            "{k_atoms} atoms exceed the 2·K_c = {} interpolation limit",
            2 * kc
        )));
    }
    if k_atoms == 0 {
        return Ok(TrigPoly::constant(kc, T::zero()));
    }
    let sqrt2 = T::of(2.0).sqrt();
    let unknowns = 2 * kc + 1;
    let rows = 2 * k_atoms;
    let mut a = Matrix::zeros(rows, unknowns);
    let mut b = vec![T::zero(); rows];
    for (j, atom) in w.atoms().iter().enumerate() {
        let x = atom.location;
        a[(2 * j, 0)] = T::one();
        for k in 1..=kc {
            let kf = T::of_usize(k);
            let (s, c) = (kf * x).sin_cos();
            a[(2 * j, 2 * k - 1)] = sqrt2 * c;
            a[(2 * j, 2 * k)] = sqrt2 * s;
            a[(2 * j + 1, 2 * k - 1)] = -sqrt2 * kf * s;
            a[(2 * j + 1, 2 * k)] = sqrt2 * kf * c;
        }
        b[2 * j] = atom.weight.signum();
    }
    let sol = lstsq_min_norm(&a, &b, T::tol(1e-12))?;
    let full = rows.min(unknowns);
    if sol.rank < full {
        return Err(Error::SingularSystem(format!(
            "interpolation system has rank {} < {full}",
            sol.rank
        )));
    }
    let u = sol.x;
    let mut coeffs = vec![Complex::new(u[0], T::zero())];
    for k in 1..=kc {
        coeffs.push(Complex::new(u[2 * k - 1] / sqrt2, u[2 * k] / sqrt2));
    }
    Ok(TrigPoly { coeffs })
}

/// Outcome of [`verify_certificate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct CertificateCheck<T> {
    pub sup_norm_ok: bool,
    pub saturation_ok: bool,
    /// `max |η| − 1` over the grid samples and every refined local maximum.
    pub worst_excess: T,
    /// `max_j |η(x_j) − sign(a_j)|`.
    pub worst_saturation_gap: T,
    pub nonconstant: bool,
    pub feasible: bool,
    pub feasibility_error: T,
}

impl<T: Real> CertificateCheck<T> {
    /// Optimality of `w` holds: feasible, `‖η‖∞ ≤ 1`, signed support saturated.
    pub fn certifies_optimality(&self) -> bool {
        self.feasible && self.sup_norm_ok && self.saturation_ok
    }

    /// Optimality plus a nonconstant certificate, which forces uniqueness.
    pub fn certifies_uniqueness(&self) -> bool {
        self.certifies_optimality() && self.nonconstant
    }
}

/// Checks the optimality conditions for `w` with data `y` and certificate `η`.
///
/// The sup-norm test samples `max(4096, 64(K_c+1))` equispaced points and
/// treats every cell soundly: cells whose Lipschitz-padded bound clears the
/// tolerance pass directly, monotone cells are bounded by their endpoints,
/// cells with a single critical point have it located and evaluated, and
/// anything else is bisected.
pub fn verify_certificate<T: Real>(
    p: &TrigPoly<T>,
    w: &SparseMeasure<T>,
    y: &ObservationVector<T>,
) -> CertificateCheck<T> {
    let tol = T::accuracy(CERTIFICATE_TOL);
    let feasibility_error = if y.kc() == p.kc() {
        w.forward(y.kc()).max_abs_diff(y)
    } else {
        T::infinity()
    };
    let feasible = feasibility_error <= T::accuracy(FEASIBILITY_TOL);

    let worst_saturation_gap = w
        .atoms()
        .iter()
        .map(|a| (p.eval(a.location) - a.weight.signum()).abs())
        .fold(T::zero(), T::max);

    let (worst, certified) = sup_norm_analysis(p, T::one() + tol);
    CertificateCheck {
        sup_norm_ok: certified,
        saturation_ok: worst_saturation_gap <= tol,
        worst_excess: worst - T::one(),
        worst_saturation_gap,
        nonconstant: p.is_nonconstant(),
        feasible,
        feasibility_error,
    }
}

struct Bounds<T> {
    d1: T,
    d2: T,
    d3: T,
}

/// Returns `(largest |η| found, sup|η| ≤ limit proven)`.
fn sup_norm_analysis<T: Real>(p: &TrigPoly<T>, limit: T) -> (T, bool) {
    let n = 4096usize.max(64 * (p.kc() + 1));
    let bounds = Bounds {
        d1: p.derivative_bound(1),
        d2: p.derivative_bound(2),
        d3: p.derivative_bound(3),
    };
    let tau = T::two_pi();
    let grid: Vec<T> = (0..=n)
        .map(|i| tau * T::of_usize(i) / T::of_usize(n))
        .collect();
    let vals: Vec<T> = grid.iter().map(|&t| p.eval(t)).collect();
    let ders: Vec<T> = grid.iter().map(|&t| p.eval_derivative(t)).collect();
    let mut worst = vals.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let mut ok = true;
    for i in 0..n {
        let (found, cell_ok) = analyze_cell(
            p,
            &bounds,
            limit,
            (grid[i], vals[i], ders[i]),
            (grid[i + 1], vals[i + 1], ders[i + 1]),
            0,
        );
        worst = worst.max(found);
        ok &= cell_ok;
    }
    (worst, ok)
}

fn analyze_cell<T: Real>(
    p: &TrigPoly<T>,
    bounds: &Bounds<T>,
    limit: T,
    (a, fa, da): (T, T, T),
    (b, fb, db): (T, T, T),
    depth: usize,
) -> (T, bool) {
    let half = T::of(0.5);
    let width = b - a;
    let ends = fa.abs().max(fb.abs());
    if ends + half * width * bounds.d1 <= limit {
        return (ends, true);
    }
    // η' keeps one sign on the cell: η is monotone, the endpoints bound it.
    let same_sign = (da > T::zero() && db > T::zero()) || (da < T::zero() && db < T::zero());
    if same_sign && da.abs().min(db.abs()) > width * bounds.d2 {
        return (ends, ends <= limit);
    }
    // Exactly one critical point when η'' cannot vanish on the cell.
    let opposite = (da >= T::zero()) != (db >= T::zero());
    if opposite {
        let sa = second_derivative(p, a);
        let sb = second_derivative(p, b);
        let convex_sign = (sa > T::zero() && sb > T::zero()) || (sa < T::zero() && sb < T::zero());
        if convex_sign && sa.abs().min(sb.abs()) > width * bounds.d3 {
            let t = critical_point(p, a, b, da);
            let v = p.eval(t).abs().max(ends);
            return (v, v <= limit);
        }
    }
    if depth >= 40 {
        let bound = ends + half * width * bounds.d1;
        return (ends, bound <= limit);
    }
    let m = half * (a + b);
    let mid = (m, p.eval(m), p.eval_derivative(m));
    let (v1, ok1) = analyze_cell(p, bounds, limit, (a, fa, da), mid, depth + 1);
    let (v2, ok2) = analyze_cell(p, bounds, limit, mid, (b, fb, db), depth + 1);
    (v1.max(v2), ok1 && ok2)
}

fn second_derivative<T: Real>(p: &TrigPoly<T>, t: T) -> T {
    let two = T::of(2.0);
    let mut v = T::zero();
    for (k, c) in p.coeffs.iter().enumerate().skip(1) {
        let kf = T::of_usize(k);
        let (s, co) = (kf * t).sin_cos();
        v -= two * kf * kf * (c.re * co + c.im * s);
    }
    v
}

/// Root of `η'` in `[a, b]` where `η'(a)` and `η'(b)` differ in sign;
/// safeguarded Newton with a bisection fallback.
fn critical_point<T: Real>(p: &TrigPoly<T>, mut a: T, mut b: T, da: T) -> T {
    let a_positive = da >= T::zero();
    let mut t = T::of(0.5) * (a + b);
    for _ in 0..100 {
        let d = p.eval_derivative(t);
        if d.is_zero() {
            return t;
        }
        if (d >= T::zero()) == a_positive {
            a = t;
        } else {
            b = t;
        }
        let dd = second_derivative(p, t);
        let newton = if dd.is_zero() {
            a - T::one()
        } else {
            t - d / dd
        };
        t = if newton > a && newton < b {
            newton
        } else {
            T::of(0.5) * (a + b)
        };
        if b - a <= T::epsilon() * T::of(8.0) * T::one().max(t.abs()) {
            break;
        }
    }
    t
}
