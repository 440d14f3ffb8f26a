//! Fair principal component analysis.
//!
//! Finds a low-dimensional representation that minimizes the largest
//! per-group *average reconstruction loss*: a group's error under the shared
//! projection minus its error under its own best rank-`d` projection. The
//! convex relaxation over `{0 <= P <= I, tr(P) <= d}` is solved by
//! multiplicative weights, where each step is one ordinary PCA on a
//! reweighted Gram matrix. The relaxed solution is then purified into an
//! extreme point of an LP in its eigenbasis, which has at most `k`
//! fractional eigenvalues, and converted into an affine projection of rank
//! at most `d + k - 1` with the same losses.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`.

mod error;
mod game;
mod linalg;
mod scalar;

pub mod ingest;
pub mod losses;
pub mod mw;
pub mod pipeline;
pub mod refcheck;
pub mod rounding;
pub mod spectra;

#[cfg(test)]
mod test_util;

pub use error::{Error, Result};
pub use ingest::{enforce_width, load_csv, GroupedDataset, ScaleMode, ScaleRecord};
pub use losses::{audit, GroupStats, LossReport, Method, Projector};
pub use mw::{mw_solve, IterateMode, MwConfig, MwError, SdpSolution, StepRule};
pub use pipeline::{fit, fit_vanilla, sweep, FitResult, SweepEntry};
pub use rounding::{embed, FairProjection};
pub use scalar::Scalar;
pub use spectra::SymmetricSpectrum;

pub type Dataset = GroupedDataset<f64>;
pub type Stats = GroupStats<f64>;
pub type Projection = FairProjection<f64>;
pub type Fit = FitResult<f64>;
pub type Report = LossReport<f64>;
pub type Sdp = SdpSolution<f64>;
pub type Spectrum = SymmetricSpectrum<f64>;

pub type Dataset32 = GroupedDataset<f32>;
pub type Projection32 = FairProjection<f32>;
pub type Fit32 = FitResult<f32>;
