//! Synthetic measures for tests, benchmarks and the command line.

use rand::Rng;

use crate::error::{Error, Result};
use crate::measures::SparseMeasure;
use crate::scalar::Real;

/// Default minimal circular separation is this fraction of `2π / K_c`.
pub const SEPARATION_FACTOR: f64 = 0.5;

/// `2π · SEPARATION_FACTOR / K_c` (the whole circle when `K_c = 0`).
pub fn min_separation(kc: usize) -> f64 {
    std::f64::consts::TAU * SEPARATION_FACTOR / kc.max(1) as f64
}

/// `k` uniformly random locations with pairwise circular distance at
/// least `sep`: random gaps above the floor, then a random rotation.
pub fn separated_locations<R: Rng + ?Sized>(rng: &mut R, k: usize, sep: f64) -> Result<Vec<f64>> {
    let tau = std::f64::consts::TAU;
    let slack = tau - k as f64 * sep;
    if slack < 0.0 {
        return Err(Error::invalid(format!(
            "{k} atoms cannot be separated by {sep} on the circle"
        )));
    }
    let mut u: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * slack).collect();
    u.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let shift = rng.random::<f64>() * tau;
    Ok(u.iter()
        .enumerate()
        .map(|(i, &v)| (v + i as f64 * sep + shift).rem_euclid(tau))
        .collect())
}

fn magnitude<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(0.2..1.0)
}

/// `k` atoms with weights in `[0.2, 1)` at default separation for `K_c`.
pub fn random_nonnegative<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    kc: usize,
) -> Result<SparseMeasure<T>> {
    let locs = separated_locations(rng, k, min_separation(kc))?;
    Ok(SparseMeasure::from_pairs(
        locs.into_iter().map(|x| (T::of(x), T::of(magnitude(rng)))),
    ))
}

/// `k ≥ 2` atoms with weights `±[0.2, 1)`, both signs present.
pub fn random_signed<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    kc: usize,
) -> Result<SparseMeasure<T>> {
    if k < 2 {
        return Err(Error::invalid("a signed measure needs at least two atoms"));
    }
    let locs = separated_locations(rng, k, min_separation(kc))?;
    let mut signs: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
    if signs.iter().all(|&s| s == signs[0]) {
        let i = rng.random_range(0..k);
        signs[i] = !signs[i];
    }
    Ok(SparseMeasure::from_pairs(locs.into_iter().zip(signs).map(
        |(x, pos)| {
            let a = magnitude(rng);
            (T::of(x), T::of(if pos { a } else { -a }))
        },
    )))
}

/// `Σ_{k<2K_c} (−1)^k δ_{πk/K_c}`: alternating unit masses on the
/// `2K_c`-th roots of unity, whose only nonzero coefficient is `y_{K_c} = 2K_c`.
pub fn alternating_measure<T: Real>(kc: usize) -> SparseMeasure<T> {
    let n = 2 * kc.max(1);
    SparseMeasure::from_pairs((0..n).map(|k| {
        let x = T::two_pi() * T::of_usize(k) / T::of_usize(n);
        (x, if k % 2 == 0 { T::one() } else { -T::one() })
    }))
}

/// Parses `"x:a,x:a,…"` into a measure.
pub fn parse_atoms<T: Real>(list: &str) -> Result<SparseMeasure<T>> {
    let mut pairs = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (x, a) = item
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("atom `{item}` is not of the form x:a")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::invalid(format!("`{s}` is not a finite number")))
        };
        pairs.push((T::of(parse(x)?), T::of(parse(a)?)));
    }
    if pairs.is_empty() {
        return Err(Error::invalid("empty atom list"));
    }
    Ok(SparseMeasure::from_pairs(pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::circular_distance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separation_is_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 1..=8 {
            let locs = separated_locations(&mut rng, k, min_separation(4)).unwrap();
            for i in 0..k {
                for j in 0..i {
                    assert!(circular_distance(locs[i], locs[j]) >= min_separation(4) - 1e-12);
                }
            }
        }
        assert!(separated_locations(&mut rng, 9, min_separation(4)).is_err());
    }

    #[test]
    fn signed_has_both_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let w: SparseMeasure<f64> = random_signed(&mut rng, 2, 3).unwrap();
            assert!(w.has_mixed_signs());
            assert!(w.weights().iter().all(|a| (0.2..1.0).contains(&a.abs())));
        }
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a: SparseMeasure<f64> =
            random_nonnegative(&mut ChaCha8Rng::seed_from_u64(7), 3, 8).unwrap();
        let b: SparseMeasure<f64> =
            random_nonnegative(&mut ChaCha8Rng::seed_from_u64(7), 3, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn alternating_data() {
        let y = alternating_measure::<f64>(2).forward(2);
        assert!(y.coeffs()[0].norm() < 1e-15 && y.coeffs()[1].norm() < 1e-14);
        assert!((y.coeffs()[2].re - 4.0).abs() < 1e-14);
    }

    #[test]
    fn parses_atom_lists() {
        let w: SparseMeasure<f64> = parse_atoms("0:1, 3.14:-0.5").unwrap();
        assert_eq!(w.len(), 2);
        assert!(parse_atoms::<f64>("0;1").is_err());
        assert!(parse_atoms::<f64>("").is_err());
        assert!(parse_atoms::<f64>("x:1").is_err());
    }
}
