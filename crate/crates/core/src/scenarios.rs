//! Bundled synthetic environments.

use crate::distributions::{
    open_set_restrict, BoxRegion, Density, GaussianClassConditional, LabeledMixtureDistribution,
    ScodEnvironment, TruncatedGaussian,
};
use crate::Result;

/// Four unit-variance isotropic Gaussians in the plane, the last one held
/// out. The unseen class sits beyond the seen ones, where the inlier
/// posterior is most confident, so max-softmax scores outliers higher than
/// inliers.
pub fn open_set_full() -> Result<LabeledMixtureDistribution> {
    LabeledMixtureDistribution::isotropic_equal_priors(
        vec![
            vec![-1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.7],
            vec![4.0, 0.0],
        ],
        1.0,
    )
}

pub const OPEN_SET_HELD_OUT: usize = 3;

pub fn open_set() -> Result<ScodEnvironment> {
    open_set_restrict(&open_set_full()?, OPEN_SET_HELD_OUT)
}

/// Two classes `N(∓2, 1)` on the line with outliers from `N(4, 1)` truncated
/// to `[2.5, ∞)`, so inliers below 2.5 are strictly inlier.
pub fn wild_mixture(pi_mix: f64) -> Result<ScodEnvironment> {
    let inlier =
        LabeledMixtureDistribution::isotropic_equal_priors(vec![vec![-2.0], vec![2.0]], 1.0)?;
    let base = GaussianClassConditional::isotropic(vec![4.0], 1.0)?;
    let outlier = Density::TruncatedGaussian(TruncatedGaussian::new(
        base,
        BoxRegion::new(vec![2.5], vec![f64::INFINITY])?,
    )?);
    ScodEnvironment::new(inlier, outlier, 0.5, pi_mix)
}

/// Three planar classes with outliers spread uniformly over
/// `[−0.5, 6] × [−5, 5]`, which covers the right-hand classes and leaves
/// most of the left-hand one outside the outlier support.
pub fn uniform_outlier() -> Result<ScodEnvironment> {
    let inlier = LabeledMixtureDistribution::isotropic_equal_priors(
        vec![vec![-1.5, -1.0], vec![1.5, -1.0], vec![0.0, 1.5]],
        0.5,
    )?;
    let outlier = Density::uniform(BoxRegion::new(vec![-0.5, -5.0], vec![6.0, 5.0])?)?;
    ScodEnvironment::new(inlier, outlier, 0.5, 0.3)
}
