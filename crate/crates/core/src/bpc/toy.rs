//! Closed-form solution for a single frequency (`K_c = 1`).

use num_complex::Complex;

use super::{SolutionKind, SolutionReport};
use crate::certificates::TrigPoly;
use crate::error::{Error, Result};
use crate::measures::SparseMeasure;
use crate::scalar::{wrap_angle, Real};
use crate::toeplitz::{Regime, RegimeReport, DEFAULT_REL_TOL_EIG};

/// Solves the problem with data `(y₀, y₁)` in closed form.
///
/// With `r = |y₁|` and `α = arg y₁`, the two-atom measure with weights
/// `(y₀ ± r)/2` at `−α` and `π − α` reproduces the data. It is the unique
/// minimizer when `y₀ < r`, collapses to one atom when `y₀ = r`, and is one
/// of infinitely many minimizers when `y₀ > r`.
pub fn toy_solve<T: Real>(y0: T, y1: Complex<T>) -> Result<SolutionReport<T>> {
    if !(y0.is_finite() && y1.re.is_finite() && y1.im.is_finite()) {
        return Err(Error::invalid("non-finite data"));
    }
    if y0 < T::zero() {
        return Err(Error::invalid(format!("y0 = {y0} must be nonnegative")));
    }
    let r = y1.norm();
    if y0.is_zero() && r.is_zero() {
        return Err(Error::invalid("data is identically zero"));
    }
    let alpha = y1.arg();
    let half = T::of(0.5);
    let x_plus = wrap_angle(-alpha);
    let x_minus = wrap_angle(T::PI() - alpha);
    let tol = T::tol(DEFAULT_REL_TOL_EIG) * (y0 + r);
    let regime_report = |regime, rank| RegimeReport {
        regime,
        rank,
        min_eig: y0 - r,
        max_eig: y0 + r,
        tol_eig: tol,
    };

    if (y0 - r).abs() <= tol {
        let w = SparseMeasure::from_pairs([(x_plus, (y0 + r) * half)]);
        return Ok(SolutionReport {
            regime: regime_report(Regime::PsdRankDeficient, 1),
            kind: SolutionKind::UniqueNonnegative,
            min_tv: w.tv_norm(),
            solution: Some(w),
            samples: Vec::new(),
            certificate: Some(TrigPoly::constant(1, T::one())),
        });
    }

    let w = SparseMeasure::from_pairs([(x_plus, (y0 + r) * half), (x_minus, (y0 - r) * half)]);
    if y0 < r {
        let c1 = Complex::from_polar(half, -alpha);
        let cert = TrigPoly::new(vec![Complex::new(T::zero(), T::zero()), c1])?;
        Ok(SolutionReport {
            regime: regime_report(Regime::Indefinite, 2),
            kind: SolutionKind::UniqueSigned,
            min_tv: r,
            solution: Some(w),
            samples: Vec::new(),
            certificate: Some(cert),
        })
    } else {
        Ok(SolutionReport {
            regime: regime_report(Regime::PositiveDefinite, 2),
            kind: SolutionKind::InfinitelyManyPositive,
            min_tv: y0,
            solution: None,
            samples: vec![w],
            certificate: Some(TrigPoly::constant(1, T::one())),
        })
    }
}
