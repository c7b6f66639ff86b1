//! Complex action phase probabilities for finite-dimensional quantum
//! systems.
//!
//! The [`app`] module builds Kirkwood–Dirac joint distributions and
//! conditional probabilities whose phases are actions; [`ergodic`] averages
//! them over time, fully or with a finite temporal kernel; [`semiclassical`]
//! extracts classical arrival times and Legendre relations; [`freespace`]
//! holds the closed-form free-particle and barrier results. Linear algebra
//! (a complex Jacobi eigensolver) lives in [`hilbert`] and quadrature rules
//! in [`quad`].

// `!(x > 0.0)` is used on purpose to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod ergodic;
pub mod error;
pub mod fixtures;
pub mod freespace;
pub mod hilbert;
pub mod phase;
pub mod quad;
pub mod semiclassical;

pub use app::{
    conditional_motion, ActionDecomposition, ComplexProbTable, MotionApp, Resolution, TableKind,
    WeakValueSeries, DEFAULT_EPS_SING,
};
pub use ergodic::{
    DensityMatrix, KernelKind, RandomizationKernel, TimeSeriesSource, UncertaintyReport,
};
pub use error::{Error, Result};
pub use freespace::FreeParticleConfig;
pub use hilbert::{
    eigendecompose_hermitian, inner, propagator, ComplexMatrix, OrthonormalBasis,
    SpectralDecomposition, StateVector,
};
pub use phase::C64;
pub use semiclassical::{ArrivalEstimate, ArrivalMethod, ArrivalOutcome};
