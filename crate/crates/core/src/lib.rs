//! Simulation of continuous determinantal point processes.
//!
//! The crate provides sequential samplers for projection DPPs (kernel-only and
//! spectral), a refined rejection scheme for Fourier projection kernels,
//! conditional simulation, two samplers for the beta-Ginibre process, explicit
//! spectral bases for Gaussian-type and Bessel-type kernels, and summary
//! statistics used to validate all of the above.

pub mod domain;
pub mod error;
pub mod bessel;
pub mod conditional;
pub mod fourier;
pub mod gaussian;
pub mod ginibre;
pub mod kernel;
pub mod pattern;
pub mod projection;
pub mod rng;
pub mod special;
pub mod stats;
pub mod spectral;

pub use domain::Domain;
pub use error::{Error, Result};
pub use kernel::{check_existence, eval_kernel, pair_correlation, ExistenceReport, Kernel, KernelSpec};
pub use pattern::{Counters, PointPattern, Provenance};
pub use projection::{sample_projection, ProjectionSource, RejectionStrategy, SamplerConfig};
pub use spectral::{spectral_trace, FeatureMap, ProjectionBasis, SpectralBasis, Truncation};
