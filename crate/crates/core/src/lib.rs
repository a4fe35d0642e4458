//! Uniqueness analysis and recovery for total-variation minimization under
//! low-frequency Fourier measurements on the torus, plus a B-spline grid
//! solver for generalized TV with `D^M` regularization.
//!
//! Everything is generic over the scalar (`f32` or `f64`); the aliases
//! below fix it to one precision.

pub mod bpc;
pub mod certificates;
pub mod eigen;
pub mod error;
pub mod generate;
pub mod grid_spline;
pub mod linalg;
pub mod measures;
pub mod poly;
pub mod scalar;
pub mod toeplitz;

pub use bpc::{solve_bpc, solve_bpc_with, toy_solve, BpcConfig, SolutionKind, SolutionReport};
pub use certificates::{construct_certificate, verify_certificate, CertificateCheck, TrigPoly};
pub use error::{Error, RecoveryStage, Result};
pub use grid_spline::{build_grid, solve_grid, GridProblem, GridSolution, SplineGrid};
pub use measures::{Atom, ObservationVector, SparseMeasure};
pub use scalar::Real;
pub use toeplitz::{build_toeplitz, classify_regime, Regime, RegimeReport, ToeplitzMatrix};

pub type Atom64 = Atom<f64>;
pub type Measure64 = SparseMeasure<f64>;
pub type Observations64 = ObservationVector<f64>;
pub type Toeplitz64 = ToeplitzMatrix<f64>;
pub type Certificate64 = TrigPoly<f64>;
pub type Report64 = SolutionReport<f64>;
pub type SplineGrid64 = SplineGrid<f64>;

pub type Atom32 = Atom<f32>;
pub type Measure32 = SparseMeasure<f32>;
pub type Observations32 = ObservationVector<f32>;
pub type Toeplitz32 = ToeplitzMatrix<f32>;
pub type Certificate32 = TrigPoly<f32>;
pub type Report32 = SolutionReport<f32>;
pub type SplineGrid32 = SplineGrid<f32>;
