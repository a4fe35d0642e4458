//! Discrete periodic Radon measures and their low-frequency Fourier data.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{circular_distance, wrap_angle, Real};

/// Default tolerance (radians) under which two atoms are merged.
pub const DEFAULT_MERGE_TOL: f64 = 1e-10;

/// A weighted Dirac mass `a δ_x` on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Atom<T> {
    #[serde(rename = "x")]
    pub location: T,
    #[serde(rename = "a")]
    pub weight: T,
}

impl<T: Real> Atom<T> {
    pub fn new(location: T, weight: T) -> Self {
        Self {
            location: wrap_angle(location),
            weight,
        }
    }
}

/// Finite signed sum of Dirac masses, kept in canonical form: sorted by
/// location, no zero weights, no two atoms closer than the merge tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", try_from = "RawMeasure<T>")]
pub struct SparseMeasure<T> {
    atoms: Vec<Atom<T>>,
}

#[derive(Deserialize)]
#[serde(bound = "T: Real")]
struct RawMeasure<T> {
    atoms: Vec<Atom<T>>,
}

impl<T: Real> TryFrom<RawMeasure<T>> for SparseMeasure<T> {
    type Error = Error;

    fn try_from(raw: RawMeasure<T>) -> Result<Self> {
        if raw
            .atoms
            .iter()
            .any(|a| !a.location.is_finite() || !a.weight.is_finite())
        {
            return Err(Error::invalid("atom with non-finite location or weight"));
        }
        Ok(Self::new(raw.atoms))
    }
}

impl<T: Real> Default for SparseMeasure<T> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<T: Real> SparseMeasure<T> {
    pub fn empty() -> Self {
        Self { atoms: Vec::new() }
    }

    pub fn new(atoms: impl IntoIterator<Item = Atom<T>>) -> Self {
        Self::with_merge_tolerance(atoms, T::of(DEFAULT_MERGE_TOL))
    }

    /// Builds a measure from `(location, weight)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (T, T)>) -> Self {
        Self::new(pairs.into_iter().map(|(x, a)| Atom::new(x, a)))
    }

    pub fn with_merge_tolerance(atoms: impl IntoIterator<Item = Atom<T>>, tol: T) -> Self {
        let mut atoms: Vec<Atom<T>> = atoms
            .into_iter()
            .map(|a| Atom::new(a.location, a.weight))
            .collect();
        atoms.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap());

        let mut merged: Vec<Atom<T>> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            match merged.last_mut() {
                Some(last) if circular_distance(last.location, atom.location) <= tol => {
                    last.weight += atom.weight;
                }
                _ => merged.push(atom),
            }
        }
        // Seam: the last atom may sit within tolerance of the first.
        if merged.len() > 1 {
            let last = merged[merged.len() - 1];
            if circular_distance(last.location, merged[0].location) <= tol {
                merged[0].weight += last.weight;
                merged.pop();
            }
        }
        merged.retain(|a| !a.weight.is_zero());
        Self { atoms: merged }
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn locations(&self) -> Vec<T> {
        self.atoms.iter().map(|a| a.location).collect()
    }

    pub fn weights(&self) -> Vec<T> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    /// Total-variation norm: the ℓ¹ norm of the weights.
    pub fn tv_norm(&self) -> T {
        self.atoms.iter().map(|a| a.weight.abs()).sum()
    }

    /// Jordan decomposition `w = w₊ − w₋` with both parts nonnegative.
    pub fn jordan_split(&self) -> (Self, Self) {
        let pos = self
            .atoms
            .iter()
            .filter(|a| a.weight > T::zero())
            .copied()
            .collect();
        let neg = self
            .atoms
            .iter()
            .filter(|a| a.weight < T::zero())
            .map(|a| Atom {
                location: a.location,
                weight: -a.weight,
            })
            .collect();
        (Self { atoms: pos }, Self { atoms: neg })
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self::new(self.atoms.iter().map(|a| Atom {
            location: a.location,
            weight: a.weight * factor,
        }))
    }

    /// Sum of two measures (coincident atoms merge).
    pub fn plus(&self, other: &Self) -> Self {
        Self::new(self.atoms.iter().chain(other.atoms.iter()).copied())
    }

    pub fn has_mixed_signs(&self) -> bool {
        self.atoms.iter().any(|a| a.weight > T::zero())
            && self.atoms.iter().any(|a| a.weight < T::zero())
    }

    /// Fourier coefficients `ŵ[k] = Σ a_j e^{-i k x_j}` for `0 ≤ k ≤ kc`.
    pub fn forward(&self, kc: usize) -> ObservationVector<T> {
        let mut coeffs = vec![Complex::zero(); kc + 1];
        for atom in &self.atoms {
            for (k, c) in coeffs.iter_mut().enumerate() {
                let phase = -T::of_usize(k) * atom.location;
                *c += Complex::from_polar(atom.weight, phase);
            }
        }
        coeffs[0] = Complex::new(self.atoms.iter().map(|a| a.weight).sum(), T::zero());
        ObservationVector { coeffs }
    }

    /// Checks `max_k |ŵ[k]| ≤ ‖w‖_M + 1e-12`. Always true; exposed for
    /// property tests.
    pub fn coeff_bound_check(&self, kc: usize) -> bool {
        let tv = self.tv_norm();
        let y = self.forward(kc);
        y.coeffs.iter().all(|c| c.norm() <= tv + T::tol(1e-12))
    }

    /// Largest circular distance between matched atoms of two measures with
    /// the same atom count, and the largest weight mismatch. `None` if the
    /// counts differ.
    pub fn max_atom_error(&self, other: &Self) -> Option<(T, T)> {
        if self.len() != other.len() {
            return None;
        }
        let mut used = vec![false; other.len()];
        let mut loc_err = T::zero();
        let mut w_err = T::zero();
        for a in &self.atoms {
            let (j, d) = other
                .atoms
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, b)| (j, circular_distance(a.location, b.location)))
                .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())?;
            used[j] = true;
            loc_err = loc_err.max(d);
            w_err = w_err.max((a.weight - other.atoms[j].weight).abs());
        }
        Some((loc_err, w_err))
    }
}

/// Free-function form of [`SparseMeasure::forward`].
pub fn forward_measure<T: Real>(w: &SparseMeasure<T>, kc: usize) -> ObservationVector<T> {
    w.forward(kc)
}

pub fn tv_norm<T: Real>(w: &SparseMeasure<T>) -> T {
    w.tv_norm()
}

pub fn jordan_split<T: Real>(w: &SparseMeasure<T>) -> (SparseMeasure<T>, SparseMeasure<T>) {
    w.jordan_split()
}

pub fn coeff_bound_check<T: Real>(w: &SparseMeasure<T>, kc: usize) -> bool {
    w.coeff_bound_check(kc)
}

/// Observations `y_0 … y_{K_c}`; `y_{-k} = conj(y_k)` is implicit and
/// `y_0` is real.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationVector<T> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> ObservationVector<T> {
    pub fn new(coeffs: Vec<Complex<T>>) -> Result<Self> {
        match coeffs.first() {
            None => Err(Error::invalid("observation vector needs at least y_0")),
            Some(c0) if !c0.im.is_zero() => Err(Error::invalid("y_0 must be real")),
            Some(_)
                if coeffs
                    .iter()
                    .any(|c| !c.re.is_finite() || !c.im.is_finite()) =>
            {
                Err(Error::invalid("observation contains non-finite values"))
            }
            Some(_) => Ok(Self { coeffs }),
        }
    }

    /// Builds `(y_0, y_1, …)` from a real mean and complex higher terms.
    pub fn from_parts(y0: T, rest: &[Complex<T>]) -> Self {
        let mut coeffs = Vec::with_capacity(rest.len() + 1);
        coeffs.push(Complex::new(y0, T::zero()));
        coeffs.extend_from_slice(rest);
        Self { coeffs }
    }

    /// All-real observations.
    pub fn from_real(values: &[T]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex::new(v, T::zero())).collect())
    }

    pub fn kc(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn y0(&self) -> T {
        self.coeffs[0].re
    }

    /// `y_k` for any integer `k` with `|k| ≤ K_c`.
    pub fn at(&self, k: isize) -> Complex<T> {
        if k >= 0 {
            self.coeffs[k as usize]
        } else {
            self.coeffs[(-k) as usize].conj()
        }
    }

    pub fn neg(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// `max_k |y_k − other_k|`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    /// Real vector `(y_0, Re y_1, Im y_1, …)` used by the real-valued solvers.
    pub fn stacked(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(2 * self.kc() + 1);
        out.push(self.coeffs[0].re);
        for c in &self.coeffs[1..] {
            out.push(c.re);
            out.push(c.im);
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct ObservationJson<T> {
    kc: usize,
    y: Vec<[T; 2]>,
}

impl<T: Real> Serialize for ObservationVector<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ObservationJson {
            kc: self.kc(),
            y: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for ObservationVector<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = ObservationJson::<T>::deserialize(d)?;
        if raw.y.len() != raw.kc + 1 {
            return Err(D::Error::custom(format!(
                "expected {} coefficients for kc = {}, found {}",
                raw.kc + 1,
                raw.kc,
                raw.y.len()
            )));
        }
        ObservationVector::new(raw.y.iter().map(|p| Complex::new(p[0], p[1])).collect())
            .map_err(D::Error::custom)
    }
}
