//! Roots of complex polynomials by the Aberth–Ehrlich simultaneous
//! iteration, followed by a Newton polish of each root.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_ITER: usize = 500;

/// Evaluates `Σ coeffs[k] z^k` and its derivative by Horner's rule.
pub fn eval_with_derivative<T: Real>(
    coeffs: &[Complex<T>],
    z: Complex<T>,
) -> (Complex<T>, Complex<T>) {
    let mut p = Complex::zero();
    let mut dp = Complex::zero();
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots of `Σ coeffs[k] z^k` (lowest degree first).
///
/// Leading coefficients below `1e-13 · max|c_k|` are trimmed first, so
/// the result can hold fewer than `coeffs.len() - 1` roots.
pub fn roots<T: Real>(coeffs: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let scale = coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()));
    if scale.is_zero() {
        return Err(Error::invalid("zero polynomial has no isolated roots"));
    }
    let cut = T::tol(1e-13) * scale;
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].norm() <= cut {
        deg -= 1;
    }
    let p: Vec<Complex<T>> = coeffs[..=deg].iter().map(|&c| c / coeffs[deg]).collect();
    if deg == 0 {
        return Ok(Vec::new());
    }
    if deg == 1 {
        return Ok(vec![-p[0]]);
    }

    // Initial guesses on a circle with radius from the coefficient
    // magnitudes, rotated off the real axis.
    let radius = p[0]
        .norm()
        .powf(T::one() / T::of_usize(deg))
        .max(T::tol(1e-3));
    let offset = T::of(0.4);
    let mut z: Vec<Complex<T>> = (0..deg)
        .map(|j| {
            let th = T::two_pi() * T::of_usize(j) / T::of_usize(deg) + offset;
            Complex::from_polar(radius, th)
        })
        .collect();

    let eps = T::epsilon() * T::of(4.0);
    let mut done = false;
    for _ in 0..MAX_ITER {
        let mut max_rel = T::zero();
        for i in 0..deg {
            let (val, der) = eval_with_derivative(&p, z[i]);
            if val.is_zero() {
                continue;
            }
            let ratio = val / der;
            let mut repulsion = Complex::zero();
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    let d = z[i] - zj;
                    if !d.is_zero() {
                        repulsion += d.inv();
                    }
                }
            }
            let denom = Complex::new(T::one(), T::zero()) - ratio * repulsion;
            let step = if denom.is_zero() {
                ratio
            } else {
                ratio / denom
            };
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            z[i] -= step;
            let rel = step.norm() / z[i].norm().max(T::one());
            max_rel = max_rel.max(rel);
        }
        if max_rel <= eps {
            done = true;
            break;
        }
    }
    if !done {
        // Aberth stalls only on pathological clusters; accept the iterate if
        // the Newton polish below lands every root on a small residual.
        let worst = z
            .iter()
            .map(|&zi| eval_with_derivative(&p, zi).0.norm())
            .fold(T::zero(), T::max);
        if worst > T::accuracy(1e-8) {
            return Err(Error::ConvergenceFailure {
                solver: "Aberth root finder",
                iterations: MAX_ITER,
                residual: worst.to_f64_lossy(),
            });
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (val, der) = eval_with_derivative(&p, *zi);
            if der.is_zero() {
                break;
            }
            let step = val / der;
            if step.norm() > T::tol(1e-6) * zi.norm().max(T::one()) {
                break;
            }
            *zi -= step;
        }
    }
    Ok(z)
}
