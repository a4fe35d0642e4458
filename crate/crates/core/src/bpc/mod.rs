//! Solving the problem end to end: classify the data, then recover the
//! unique minimizer or sample the family of minimizers.

mod grid_lp;
mod signed;
mod simplex;
mod toy;

pub use grid_lp::{grid_lp_min_tv, solve_grid_basis_pursuit, GridLpConfig, GridLpSolution};
pub use signed::{recover_signed, recover_signed_with, SignedRecoveryConfig, PRUNE_TOL};
pub use toy::toy_solve;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::certificates::TrigPoly;
use crate::error::Result;
use crate::measures::{ObservationVector, SparseMeasure};
use crate::scalar::Real;
use crate::toeplitz::{
    build_toeplitz, cfp_decompose_deficient, cfp_decompose_full, classify_spectrum, Regime,
    RegimeReport,
};

/// Shape of the solution set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionKind {
    UniqueSigned,
    UniqueNonnegative,
    UniqueNonpositive,
    InfinitelyManyPositive,
    InfinitelyManyNegative,
    ZeroMeasure,
}

impl SolutionKind {
    pub fn is_unique(self) -> bool {
        !matches!(
            self,
            Self::InfinitelyManyPositive | Self::InfinitelyManyNegative
        )
    }

    /// Kind of the solution set for the negated data.
    pub fn mirrored(self) -> Self {
        match self {
            Self::UniqueNonnegative => Self::UniqueNonpositive,
            Self::UniqueNonpositive => Self::UniqueNonnegative,
            Self::InfinitelyManyPositive => Self::InfinitelyManyNegative,
            Self::InfinitelyManyNegative => Self::InfinitelyManyPositive,
            other => other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::UniqueSigned => "unique_signed",
            Self::UniqueNonnegative => "unique_nonnegative",
            Self::UniqueNonpositive => "unique_nonpositive",
            Self::InfinitelyManyPositive => "infinitely_many_positive",
            Self::InfinitelyManyNegative => "infinitely_many_negative",
            Self::ZeroMeasure => "zero_measure",
        }
    }
}

impl std::fmt::Display for SolutionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionReport<T> {
    pub regime: RegimeReport<T>,
    pub kind: SolutionKind,
    /// The minimizer, when unique.
    pub solution: Option<SparseMeasure<T>>,
    /// Two members of the family when the minimizer is not unique.
    pub samples: Vec<SparseMeasure<T>>,
    pub certificate: Option<TrigPoly<T>>,
    pub min_tv: T,
}

impl<T: Real> SolutionReport<T> {
    /// Report for the negated data.
    pub fn mirrored(&self) -> Self {
        let neg = -T::one();
        Self {
            regime: RegimeReport {
                regime: self.regime.regime.mirrored(),
                rank: self.regime.rank,
                min_eig: -self.regime.max_eig,
                max_eig: -self.regime.min_eig,
                tol_eig: self.regime.tol_eig,
            },
            kind: self.kind.mirrored(),
            solution: self.solution.as_ref().map(|w| w.scaled(neg)),
            samples: self.samples.iter().map(|w| w.scaled(neg)).collect(),
            certificate: self.certificate.as_ref().map(TrigPoly::neg),
            min_tv: self.min_tv,
        }
    }
}

impl<T: Real> Serialize for SolutionReport<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(7))?;
        m.serialize_entry("regime", self.regime.regime.as_str())?;
        m.serialize_entry("kind", self.kind.as_str())?;
        m.serialize_entry("rank", &self.regime.rank)?;
        m.serialize_entry("min_tv", &self.min_tv)?;
        m.serialize_entry("solution", &self.solution)?;
        m.serialize_entry("samples", &self.samples)?;
        m.serialize_entry("certificate", &self.certificate)?;
        m.end()
    }
}

/// `max_k |y_k|`, a lower bound on the minimal total variation.
pub fn min_tv_lower_bound<T: Real>(y: &ObservationVector<T>) -> T {
    y.coeffs().iter().fold(T::zero(), |m, c| m.max(c.norm()))
}

/// Sufficient condition for uniqueness: `|y₀| < max_{k≥1} |y_k|`.
pub fn uniqueness_precheck<T: Real>(y: &ObservationVector<T>) -> bool {
    let top = y.coeffs()[1..]
        .iter()
        .fold(T::zero(), |m, c| m.max(c.norm()));
    y.y0().abs() < top - T::tol(1e-12)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BpcConfig<T> {
    /// Absolute eigenvalue threshold; `None` uses `1e-9 · max|λ|`.
    pub tol_eig: Option<T>,
    /// Settings for the indefinite regime; `None` uses the defaults for `K_c`.
    pub signed: Option<SignedRecoveryConfig<T>>,
}

/// Classifies `y` and returns the full solution report.
pub fn solve_bpc<T: Real>(y: &ObservationVector<T>) -> Result<SolutionReport<T>> {
    solve_bpc_with(y, &BpcConfig::default())
}

pub fn solve_bpc_with<T: Real>(
    y: &ObservationVector<T>,
    cfg: &BpcConfig<T>,
) -> Result<SolutionReport<T>> {
    // Solve for a canonical sign so that negating the data mirrors the
    // report exactly.
    let flip = y
        .stacked()
        .into_iter()
        .find(|v| !v.is_zero())
        .is_some_and(|v| v < T::zero());
    if flip {
        Ok(solve_canonical(&y.neg(), cfg)?.mirrored())
    } else {
        solve_canonical(y, cfg)
    }
}

fn solve_canonical<T: Real>(
    y: &ObservationVector<T>,
    cfg: &BpcConfig<T>,
) -> Result<SolutionReport<T>> {
    let kc = y.kc();
    let t = build_toeplitz(y);
    let mut spectrum = t.spectrum()?;
    if let Some(tol) = cfg.tol_eig {
        spectrum = spectrum.with_tolerance(tol);
    }
    let regime = classify_spectrum(&spectrum);
    let y0 = y.y0().abs();
    let report = |kind, solution, samples, certificate, min_tv| SolutionReport {
        regime,
        kind,
        solution,
        samples,
        certificate,
        min_tv,
    };

    Ok(match regime.regime {
        Regime::Zero => report(
            SolutionKind::ZeroMeasure,
            Some(SparseMeasure::empty()),
            vec![],
            None,
            T::zero(),
        ),
        Regime::PsdRankDeficient | Regime::NsdRankDeficient => {
            let d = cfp_decompose_deficient(&t, &spectrum)?;
            let (kind, sign) = if regime.regime == Regime::PsdRankDeficient {
                (SolutionKind::UniqueNonnegative, T::one())
            } else {
                (SolutionKind::UniqueNonpositive, -T::one())
            };
            report(
                kind,
                Some(d.to_measure()),
                vec![],
                Some(TrigPoly::constant(kc, sign)),
                y0,
            )
        }
        Regime::PositiveDefinite | Regime::NegativeDefinite => {
            let anchors = [T::zero(), T::PI() / T::of_usize(kc + 1)];
            let samples = anchors
                .iter()
                .map(|&a| cfp_decompose_full(&t, a).map(|d| d.to_measure()))
                .collect::<Result<Vec<_>>>()?;
            let (kind, sign) = if regime.regime == Regime::PositiveDefinite {
                (SolutionKind::InfinitelyManyPositive, T::one())
            } else {
                (SolutionKind::InfinitelyManyNegative, -T::one())
            };
            report(kind, None, samples, Some(TrigPoly::constant(kc, sign)), y0)
        }
        Regime::Indefinite => {
            let sc = cfg
                .signed
                .unwrap_or_else(|| SignedRecoveryConfig::for_kc(kc));
            let (w, cert) = recover_signed_with(y, &sc)?;
            let tv = w.tv_norm();
            report(SolutionKind::UniqueSigned, Some(w), vec![], Some(cert), tv)
        }
    })
}
