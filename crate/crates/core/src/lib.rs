//! Kernel estimation of invariant densities and of the map itself from
//! observed orbits of chaotic dynamical systems, with the matching
//! concentration envelopes and regularity diagnostics.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod kernels;
pub mod quadrature;
pub mod regularity;
pub mod stochastics;

pub use bounds::{BoundParams, Envelope, MixingModel, ProbabilityBound};
pub use dynamics::{generate_trajectory, Domain, DynamicalSystem, SamplerConfig, SystemSpec, Trajectory};
pub use error::{Error, Result};
pub use estimators::{EstimateGrid, Grid, Strategy};
pub use experiments::{ExperimentSpec, ResultRow};
pub use kernels::{Kernel, KernelId};
pub use regularity::BadSetReport;
pub use stochastics::{NoiseKind, NoiseLaw, RngState};
