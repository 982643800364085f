//! Boundary detection in areal disease-risk surfaces.
//!
//! Areas carry Poisson counts whose log-risks follow a Leroux CAR prior. The
//! neighbourhood matrix is not fixed: a shared border is dropped (declared a
//! risk boundary) when the covariate dissimilarity across it, weighted by
//! non-negative coefficients, is large enough. The coefficients are sampled
//! with the rest of the model by Metropolis-within-Gibbs.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the CLI and simulation use.

pub mod boundary;
pub mod car;
pub mod diagnostics;
pub mod error;
pub mod graph;
pub mod mcmc;
pub mod scalar;
pub mod seed;
pub mod simulate;
pub mod sparse;

pub use error::{Error, ErrorClass, Result};
pub use graph::{AdjacencyInput, AdjacencyState, AreaGraph};
pub use scalar::Real;

pub type DissimilarityData = graph::DissimilarityData<f64>;
pub type CarParams = car::CarParams<f64>;
pub type PrecisionStructure = car::PrecisionStructure<f64>;







pub type ObservedData = mcmc::ObservedData<f64>;
pub type ModelState = mcmc::ModelState<f64>;
pub type ChainConfig = mcmc::ChainConfig<f64>;
pub type PosteriorSamples = mcmc::PosteriorSamples<f64>;
pub type BoundarySet = boundary::BoundarySet<f64>;
pub type BlvResult = boundary::BlvResult<f64>;
pub type MoranResult = diagnostics::MoranResult<f64>;
