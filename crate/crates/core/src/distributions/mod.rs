//! Ground-truth generative models with exact densities.
//!
//! Everything is evaluated in log space. Samplers use ChaCha8 streams
//! (`rand_chacha`): stream `k` of a seed covers samples
//! `k·SAMPLING_CHUNK ..`, so draws are bit-reproducible and identical with or
//! without the `parallel` feature.

mod config;
mod density;
mod environment;
mod gaussian;
mod mixture;
mod sampling;

pub use config::{ClassConfig, EnvironmentConfig, OutlierConfig};
pub use density::{BoxRegion, Density, TruncatedGaussian};
pub use environment::{open_set_restrict, ScodEnvironment};
pub use gaussian::{Covariance, GaussianClassConditional};
pub use mixture::LabeledMixtureDistribution;
pub use sampling::{
    sample, sample_strict_inliers, stream_rng, Origin, Sample, Source, StrictInlierMode,
    StrictInlierSet, SAMPLING_CHUNK, SURROGATE_MAX_RATIO,
};
