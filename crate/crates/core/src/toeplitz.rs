//! The Hermitian Toeplitz matrix `T_y`, its spectrum, the regime it
//! induces on the solution set, and Carathéodory–Fejér–Pisarenko (CFP)
//! Vandermonde decompositions.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::eigen::{eig_hermitian, HermitianEigen};
use crate::error::{Error, Result};
use crate::linalg::{lstsq_min_norm, CMatrix, Matrix};
use crate::measures::{Atom, ObservationVector, SparseMeasure};
use crate::poly;
use crate::scalar::{circular_distance, wrap_angle, Real};

/// Relative eigenvalue threshold used for the numerical rank.
pub const DEFAULT_REL_TOL_EIG: f64 = 1e-9;
/// Maximum distance of an accepted root from the unit circle.
pub const DEFAULT_TOL_ROOT: f64 = 1e-6;
/// Bound on `‖T − sign·V D V*‖_F / max(1, ‖T‖_F)` for an accepted
/// decomposition.
pub const DECOMPOSITION_RESIDUAL_TOL: f64 = 1e-8;

/// Hermitian Toeplitz matrix with `dense[m][n] = y_{n-m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzMatrix<T> {
    first_row: Vec<Complex<T>>,
}

impl<T: Real> ToeplitzMatrix<T> {
    pub fn new(y: &ObservationVector<T>) -> Self {
        Self {
            first_row: y.coeffs().to_vec(),
        }
    }

    pub fn kc(&self) -> usize {
        self.first_row.len() - 1
    }

    pub fn size(&self) -> usize {
        self.first_row.len()
    }

    pub fn first_row(&self) -> &[Complex<T>] {
        &self.first_row
    }

    pub fn observations(&self) -> ObservationVector<T> {
        ObservationVector::new(self.first_row.clone()).expect("first row has a real leading entry")
    }

    /// Entry `y_{n-m}`.
    pub fn entry(&self, m: usize, n: usize) -> Complex<T> {
        if n >= m {
            self.first_row[n - m]
        } else {
            self.first_row[m - n].conj()
        }
    }

    pub fn dense(&self) -> CMatrix<T> {
        let n = self.size();
        CMatrix::from_fn(n, n, |r, c| self.entry(r, c))
    }

    pub fn frobenius_norm(&self) -> T {
        toeplitz_frobenius(&self.first_row)
    }

    pub fn negated(&self) -> Self {
        Self {
            first_row: self.first_row.iter().map(|c| -c).collect(),
        }
    }

    pub fn spectrum(&self) -> Result<Spectrum<T>> {
        eig_hermitian_toeplitz(self)
    }
}

/// `‖T‖_F` of the Hermitian Toeplitz matrix with the given first row.
fn toeplitz_frobenius<T: Real>(row: &[Complex<T>]) -> T {
    let n = row.len();
    let mut s = T::of_usize(n) * row[0].norm_sqr();
    for (k, c) in row.iter().enumerate().skip(1) {
        s += T::of(2.0) * T::of_usize(n - k) * c.norm_sqr();
    }
    s.sqrt()
}

pub fn build_toeplitz<T: Real>(y: &ObservationVector<T>) -> ToeplitzMatrix<T> {
    ToeplitzMatrix::new(y)
}

/// Eigendecomposition of `T_y` with a zero threshold attached.
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    /// Ascending.
    pub eigenvalues: Vec<T>,
    /// Column `j` pairs with `eigenvalues[j]`.
    pub eigenvectors: CMatrix<T>,
    pub tol_eig: T,
}

impl<T: Real> Spectrum<T> {
    fn from_eigen(e: HermitianEigen<T>) -> Self {
        let radius = e.values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        Self {
            tol_eig: T::tol(DEFAULT_REL_TOL_EIG) * radius,
            eigenvalues: e.values,
            eigenvectors: e.vectors,
        }
    }

    pub fn spectral_radius(&self) -> T {
        self.eigenvalues
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn with_tolerance(mut self, tol_eig: T) -> Self {
        self.tol_eig = tol_eig;
        self
    }

    pub fn min_eig(&self) -> T {
        self.eigenvalues[0]
    }

    pub fn max_eig(&self) -> T {
        *self.eigenvalues.last().unwrap()
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues
            .iter()
            .filter(|v| v.abs() > self.tol_eig)
            .count()
    }

    /// Spectrum of the negated matrix.
    pub fn negated(&self) -> Self {
        let n = self.eigenvalues.len();
        Self {
            eigenvalues: self.eigenvalues.iter().rev().map(|v| -*v).collect(),
            eigenvectors: CMatrix::from_fn(n, n, |r, c| self.eigenvectors[(r, n - 1 - c)]),
            tol_eig: self.tol_eig,
        }
    }

    pub fn eigenvector(&self, j: usize) -> Vec<Complex<T>> {
        self.eigenvectors.column(j)
    }

    /// `‖T − QΛQ*‖_F`.
    pub fn reconstruction_residual(&self, t: &ToeplitzMatrix<T>) -> T {
        let n = self.eigenvalues.len();
        let mut rec = CMatrix::<T>::zeros(n, n);
        for j in 0..n {
            let lam = self.eigenvalues[j];
            for r in 0..n {
                let qr = self.eigenvectors[(r, j)] * lam;
                for c in 0..n {
                    rec[(r, c)] += qr * self.eigenvectors[(c, j)].conj();
                }
            }
        }
        t.dense().sub(&rec).frobenius_norm()
    }

    /// `‖Q*Q − I‖_F`.
    pub fn orthonormality_defect(&self) -> T {
        let n = self.eigenvalues.len();
        let gram = self
            .eigenvectors
            .conj_transpose()
            .matmul(&self.eigenvectors);
        gram.sub(&CMatrix::identity(n)).frobenius_norm()
    }

    /// Solves `T x = b` through the spectrum. Fails when any eigenvalue is
    /// within the zero threshold.
    pub fn solve(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let n = self.eigenvalues.len();
        if let Some(v) = self.eigenvalues.iter().find(|v| v.abs() <= self.tol_eig) {
            return Err(Error::SingularSystem(format!(
                "eigenvalue {} within zero threshold {}",
                v, self.tol_eig
            )));
        }
        let mut x = vec![Complex::zero(); n];
        for j in 0..n {
            let proj: Complex<T> = (0..n).fold(Complex::zero(), |acc, r| {
                acc + self.eigenvectors[(r, j)].conj() * b[r]
            }) / self.eigenvalues[j];
            for (r, xr) in x.iter_mut().enumerate() {
                *xr += self.eigenvectors[(r, j)] * proj;
            }
        }
        Ok(x)
    }
}

pub fn eig_hermitian_toeplitz<T: Real>(t: &ToeplitzMatrix<T>) -> Result<Spectrum<T>> {
    Ok(Spectrum::from_eigen(eig_hermitian(&t.dense())?))
}

/// Spectral regime of `T_y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Indefinite,
    PsdRankDeficient,
    NsdRankDeficient,
    PositiveDefinite,
    NegativeDefinite,
    Zero,
}

impl Regime {
    /// Sign-mirrored regime (`y ↦ −y`).
    pub fn mirrored(self) -> Self {
        match self {
            Regime::PsdRankDeficient => Regime::NsdRankDeficient,
            Regime::NsdRankDeficient => Regime::PsdRankDeficient,
            Regime::PositiveDefinite => Regime::NegativeDefinite,
            Regime::NegativeDefinite => Regime::PositiveDefinite,
            other => other,
        }
    }

    /// Whether the minimization has a unique solution in this regime.
    pub fn has_unique_solution(self) -> bool {
        !matches!(self, Regime::PositiveDefinite | Regime::NegativeDefinite)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Indefinite => "Indefinite",
            Regime::PsdRankDeficient => "PsdRankDeficient",
            Regime::NsdRankDeficient => "NsdRankDeficient",
            Regime::PositiveDefinite => "PositiveDefinite",
            Regime::NegativeDefinite => "NegativeDefinite",
            Regime::Zero => "Zero",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct RegimeReport<T> {
    pub regime: Regime,
    pub rank: usize,
    pub min_eig: T,
    pub max_eig: T,
    pub tol_eig: T,
}

/// Classifies an already computed spectrum.
pub fn classify_spectrum<T: Real>(spectrum: &Spectrum<T>) -> RegimeReport<T> {
    let tol = spectrum.tol_eig;
    let n = spectrum.eigenvalues.len();
    let (lo, hi) = (spectrum.min_eig(), spectrum.max_eig());
    let rank = spectrum.rank();
    let regime = if rank == 0 {
        Regime::Zero
    } else if lo < -tol && hi > tol {
        Regime::Indefinite
    } else if lo >= -tol {
        if rank < n {
            Regime::PsdRankDeficient
        } else {
            Regime::PositiveDefinite
        }
    } else if rank < n {
        Regime::NsdRankDeficient
    } else {
        Regime::NegativeDefinite
    };
    RegimeReport {
        regime,
        rank,
        min_eig: lo,
        max_eig: hi,
        tol_eig: tol,
    }
}

/// Classifies `T_y`. `tol_eig` defaults to `1e-9 · max|λ|`.
pub fn classify_regime<T: Real>(
    t: &ToeplitzMatrix<T>,
    tol_eig: Option<T>,
) -> Result<RegimeReport<T>> {
    let mut spectrum = t.spectrum()?;
    if let Some(tol) = tol_eig {
        spectrum = spectrum.with_tolerance(tol);
    }
    Ok(classify_spectrum(&spectrum))
}

/// `T = sign · V_x D_a V_x*` with strictly positive amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct VandermondeDecomposition<T> {
    pub locations: Vec<T>,
    pub amplitudes: Vec<T>,
    /// `+1` for PSD input, `−1` when an NSD matrix was decomposed as `−(VDV*)`.
    pub sign: T,
}

impl<T: Real> VandermondeDecomposition<T> {
    pub fn empty() -> Self {
        Self {
            locations: Vec::new(),
            amplitudes: Vec::new(),
            sign: T::one(),
        }
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// The signed measure `sign · Σ a_k δ_{x_k}`.
    pub fn to_measure(&self) -> SparseMeasure<T> {
        SparseMeasure::new(
            self.locations
                .iter()
                .zip(&self.amplitudes)
                .map(|(&x, &a)| Atom::new(x, self.sign * a)),
        )
    }

    /// `‖T − sign·V D V*‖_F`. The product is itself Toeplitz, built from the
    /// Fourier coefficients of the represented measure.
    pub fn residual(&self, t: &ToeplitzMatrix<T>) -> T {
        let rep = self.to_measure().forward(t.kc());
        let diff: Vec<Complex<T>> = t
            .first_row()
            .iter()
            .zip(rep.coeffs())
            .map(|(a, b)| a - b)
            .collect();
        toeplitz_frobenius(&diff)
    }
}

/// Which null vector seeds the root polynomial in the rank-deficient case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NullVector {
    /// Eigenvector of the smallest-magnitude eigenvalue.
    #[default]
    Smallest,
    /// Sum of all null-space eigenvectors.
    Sum,
}

/// Unique CFP decomposition of a rank-deficient semi-definite `T`.
pub fn cfp_decompose_deficient<T: Real>(
    t: &ToeplitzMatrix<T>,
    spectrum: &Spectrum<T>,
) -> Result<VandermondeDecomposition<T>> {
    cfp_decompose_deficient_with(t, spectrum, NullVector::Smallest)
}

pub fn cfp_decompose_deficient_with<T: Real>(
    t: &ToeplitzMatrix<T>,
    spectrum: &Spectrum<T>,
    choice: NullVector,
) -> Result<VandermondeDecomposition<T>> {
    let report = classify_spectrum(spectrum);
    match report.regime {
        Regime::Zero => Ok(VandermondeDecomposition::empty()),
        Regime::PsdRankDeficient => decompose_psd(t, spectrum, report.rank, choice),
        Regime::NsdRankDeficient => {
            let mut d = decompose_psd(&t.negated(), &spectrum.negated(), report.rank, choice)?;
            d.sign = -T::one();
            Ok(d)
        }
        other => Err(Error::DecompositionFailure(format!(
            "rank-deficient decomposition requested for a {other} matrix"
        ))),
    }
}

/// `e(x) = (1, e^{ix}, …, e^{i K_c x})`.
fn steering<T: Real>(n: usize, x: T) -> Vec<Complex<T>> {
    (0..n)
        .map(|k| Complex::from_polar(T::one(), T::of_usize(k) * x))
        .collect()
}

/// `Σ_q |q* e(x)|²` over the signal eigenvectors and its first two
/// derivatives in `x`.
fn signal_power<T: Real>(signal: &[Vec<Complex<T>>], x: T) -> (T, T, T) {
    let two = T::of(2.0);
    let mut s = T::zero();
    let mut ds = T::zero();
    let mut d2s = T::zero();
    for q in signal {
        let mut h = Complex::zero();
        let mut dh = Complex::zero();
        let mut d2h = Complex::zero();
        for (k, qk) in q.iter().enumerate() {
            let kf = T::of_usize(k);
            let e = qk.conj() * Complex::from_polar(T::one(), kf * x);
            h += e;
            dh += e * Complex::new(T::zero(), kf);
            d2h += e * (-kf * kf);
        }
        s += h.norm_sqr();
        ds += two * (h.conj() * dh).re;
        d2s += two * (dh.norm_sqr() + (h.conj() * d2h).re);
    }
    (s, ds, d2s)
}

/// Decomposes a PSD Toeplitz matrix of known rank `rank < n`.
fn decompose_psd<T: Real>(
    t: &ToeplitzMatrix<T>,
    spectrum: &Spectrum<T>,
    rank: usize,
    choice: NullVector,
) -> Result<VandermondeDecomposition<T>> {
    let n = t.size();
    if rank == 0 {
        return Ok(VandermondeDecomposition::empty());
    }
    if rank >= n {
        return Err(Error::DecompositionFailure("matrix has full rank".into()));
    }
    let null_dim = n - rank;
    // Ascending eigenvalues of a PSD matrix: null space first.
    let null_vec: Vec<Complex<T>> = match choice {
        NullVector::Smallest => {
            let j = (0..null_dim)
                .min_by(|&a, &b| {
                    spectrum.eigenvalues[a]
                        .abs()
                        .partial_cmp(&spectrum.eigenvalues[b].abs())
                        .unwrap()
                })
                .unwrap();
            spectrum.eigenvector(j)
        }
        NullVector::Sum => (0..null_dim).fold(vec![Complex::zero(); n], |acc, j| {
            acc.iter()
                .zip(spectrum.eigenvector(j))
                .map(|(a, b)| a + b)
                .collect()
        }),
    };
    let signal: Vec<Vec<Complex<T>>> = (null_dim..n).map(|j| spectrum.eigenvector(j)).collect();

    // e(x)* u = Σ u_k e^{-ikx} = p(z) with z = e^{-ix}.
    let roots = poly::roots(&null_vec)?;
    let nf = T::of_usize(n);
    let mut candidates: Vec<(T, T, T)> = roots
        .iter()
        .filter(|z| z.norm() > T::zero())
        .map(|z| {
            let x = wrap_angle(-z.arg());
            let radial = (z.norm() - T::one()).abs();
            // Reflected pairs z, 1/z̄ share an angle; the radial term breaks the tie.
            let score = T::one() - signal_power(&signal, x).0 / nf + radial;
            (score, x, radial)
        })
        .collect();
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut chosen: Vec<(T, T)> = Vec::with_capacity(rank);
    for &(_, x, radial) in &candidates {
        if chosen.len() == rank {
            break;
        }
        if chosen
            .iter()
            .any(|&(c, _)| circular_distance(c, x) <= T::tol(1e-9))
        {
            continue;
        }
        chosen.push((x, radial));
    }
    if chosen.len() < rank {
        return Err(Error::DecompositionFailure(format!(
            "found {} distinct unimodular roots, rank is {rank}",
            chosen.len()
        )));
    }
    let tol_root = T::accuracy(DEFAULT_TOL_ROOT);
    if let Some(&(x, radial)) = chosen.iter().find(|c| c.1 > tol_root) {
        return Err(Error::DecompositionFailure(format!(
            "root at angle {x} lies {radial} from the unit circle"
        )));
    }

    let locations: Vec<T> = chosen
        .iter()
        .map(|&(x, _)| refine_peak(&signal, x))
        .collect();
    let amplitudes = solve_amplitudes(&t.observations(), &locations)?;
    if let Some(a) = amplitudes.iter().find(|a| **a <= T::zero()) {
        return Err(Error::DecompositionFailure(format!(
            "non-positive amplitude {a} in semi-definite decomposition"
        )));
    }
    let d = VandermondeDecomposition {
        locations,
        amplitudes,
        sign: T::one(),
    };
    check_residual(t, &d)?;
    Ok(sorted(d))
}

/// Newton ascent on the signal-subspace power around a root estimate.
fn refine_peak<T: Real>(signal: &[Vec<Complex<T>>], x0: T) -> T {
    let max_step = T::of(1e-2);
    let mut x = x0;
    for _ in 0..20 {
        let (_, d1, d2) = signal_power(signal, x);
        if d2 >= T::zero() {
            break;
        }
        let step = -d1 / d2;
        if step.abs() > max_step {
            break;
        }
        x += step;
        if step.abs() <= T::epsilon() * T::of(16.0) {
            break;
        }
    }
    wrap_angle(x)
}

/// Real least-squares amplitudes `a` with `Σ_j a_j e^{-ikx_j} ≈ y_k`.
pub(crate) fn solve_amplitudes<T: Real>(
    y: &ObservationVector<T>,
    locations: &[T],
) -> Result<Vec<T>> {
    let kc = y.kc();
    let a = fourier_dictionary(kc, locations);
    let sol = lstsq_min_norm(&a, &y.stacked(), T::tol(1e-13))?;
    if sol.rank < locations.len() {
        return Err(Error::SingularSystem(format!(
            "Vandermonde system has rank {} for {} atoms",
            sol.rank,
            locations.len()
        )));
    }
    Ok(sol.x)
}

/// Real `(2K_c+1) × K` matrix with columns `(1, cos kx, −sin kx, …)`, the
/// stacked real form of `ν(δ_x)`.
pub(crate) fn fourier_dictionary<T: Real>(kc: usize, locations: &[T]) -> Matrix<T> {
    let mut m = Matrix::zeros(2 * kc + 1, locations.len());
    for (j, &x) in locations.iter().enumerate() {
        m[(0, j)] = T::one();
        for k in 1..=kc {
            let (s, c) = (T::of_usize(k) * x).sin_cos();
            m[(2 * k - 1, j)] = c;
            m[(2 * k, j)] = -s;
        }
    }
    m
}

fn check_residual<T: Real>(t: &ToeplitzMatrix<T>, d: &VandermondeDecomposition<T>) -> Result<()> {
    let bound = T::accuracy(DECOMPOSITION_RESIDUAL_TOL) * t.frobenius_norm().max(T::one());
    let r = d.residual(t);
    if r > bound {
        return Err(Error::DecompositionFailure(format!(
            "residual {r} exceeds {bound}"
        )));
    }
    Ok(())
}

fn sorted<T: Real>(d: VandermondeDecomposition<T>) -> VandermondeDecomposition<T> {
    let mut pairs: Vec<(T, T)> = d.locations.into_iter().zip(d.amplitudes).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let (locations, amplitudes) = pairs.into_iter().unzip();
    VandermondeDecomposition {
        locations,
        amplitudes,
        sign: d.sign,
    }
}

/// One of the infinitely many `K_c+1`-atom decompositions of a definite
/// `T`, the one with an atom at `anchor`.
///
/// The anchor weight is `1 / (e(anchor)* T⁻¹ e(anchor))`; the remainder
/// `T − a e e*` is PSD of rank `K_c` and decomposes uniquely.
pub fn cfp_decompose_full<T: Real>(
    t: &ToeplitzMatrix<T>,
    anchor: T,
) -> Result<VandermondeDecomposition<T>> {
    let spectrum = t.spectrum()?;
    let report = classify_spectrum(&spectrum);
    match report.regime {
        Regime::PositiveDefinite => decompose_definite(t, &spectrum, anchor),
        Regime::NegativeDefinite => {
            let mut d = decompose_definite(&t.negated(), &spectrum.negated(), anchor)?;
            d.sign = -T::one();
            Ok(d)
        }
        other => Err(Error::DecompositionFailure(format!(
            "full-rank decomposition requested for a {other} matrix"
        ))),
    }
}

fn decompose_definite<T: Real>(
    t: &ToeplitzMatrix<T>,
    spectrum: &Spectrum<T>,
    anchor: T,
) -> Result<VandermondeDecomposition<T>> {
    let n = t.size();
    let kc = t.kc();
    let anchor = wrap_angle(anchor);
    let e = steering(n, anchor);
    let tinv_e = spectrum.solve(&e)?;
    let quad = e
        .iter()
        .zip(&tinv_e)
        .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b)
        .re;
    if quad <= T::zero() {
        return Err(Error::SingularSystem(format!(
            "e* T⁻¹ e = {quad} is not positive"
        )));
    }
    let anchor_weight = T::one() / quad;
    if kc == 0 {
        return Ok(VandermondeDecomposition {
            locations: vec![anchor],
            amplitudes: vec![anchor_weight],
            sign: T::one(),
        });
    }

    // T − a e e* is Toeplitz with first row y_k − a e^{-ik·anchor}.
    let y = t.observations();
    let remainder_row: Vec<Complex<T>> = y
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| c - Complex::from_polar(anchor_weight, -T::of_usize(k) * anchor))
        .collect();
    let mut remainder_row = remainder_row;
    remainder_row[0].im = T::zero();
    let remainder = ToeplitzMatrix::new(&ObservationVector::new(remainder_row)?);
    let rem_spectrum = remainder.spectrum()?;
    if rem_spectrum.min_eig() < -rem_spectrum.tol_eig.max(T::tol(1e-12) * t.frobenius_norm()) {
        return Err(Error::DecompositionFailure(format!(
            "remainder after anchoring has negative eigenvalue {}",
            rem_spectrum.min_eig()
        )));
    }
    let rest = decompose_psd(&remainder, &rem_spectrum, kc, NullVector::Smallest)?;

    let mut locations = rest.locations;
    if locations
        .iter()
        .any(|&x| circular_distance(x, anchor) <= T::tol(1e-9))
    {
        return Err(Error::DecompositionFailure(
            "anchor coincides with a remainder atom".into(),
        ));
    }
    locations.push(anchor);
    // Joint re-solve on the full data keeps ν(w) = y tight.
    let amplitudes = solve_amplitudes(&y, &locations)?;
    if let Some(a) = amplitudes.iter().find(|a| **a <= T::zero()) {
        return Err(Error::DecompositionFailure(format!(
            "non-positive amplitude {a} in definite decomposition"
        )));
    }
    let d = VandermondeDecomposition {
        locations,
        amplitudes,
        sign: T::one(),
    };
    check_residual(t, &d)?;
    Ok(sorted(d))
}
