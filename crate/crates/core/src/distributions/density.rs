use rand::Rng;

use super::gaussian::GaussianClassConditional;
use super::mixture::LabeledMixtureDistribution;
use crate::numeric::normal_sf;
use crate::{Result, ScodError};

// Rejection sampling from a truncated Gaussian gives up below this mass.
const MIN_TRUNCATED_MASS: f64 = 1e-4;

/// Closed axis-aligned box; infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(ScodError::DimensionMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| l.is_nan() || u.is_nan() || l >= u)
        {
            return Err(ScodError::InvalidConfiguration(
                "box bounds must satisfy lower < upper".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }
}

/// A diagonal Gaussian restricted to a box and renormalised.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedGaussian {
    base: GaussianClassConditional,
    support: BoxRegion,
    log_mass: f64,
}

impl TruncatedGaussian {
    pub fn new(base: GaussianClassConditional, support: BoxRegion) -> Result<Self> {
        if support.dim() != base.dim() {
            return Err(ScodError::DimensionMismatch {
                expected: base.dim(),
                actual: support.dim(),
            });
        }
        let sd = base.std_devs().ok_or_else(|| {
            ScodError::InvalidConfiguration("truncation requires a diagonal covariance".into())
        })?;
        let mut log_mass = 0.0;
        for i in 0..base.dim() {
            let lo = (support.lower[i] - base.mean()[i]) / sd[i];
            let hi = (support.upper[i] - base.mean()[i]) / sd[i];
            // P(lo < Z < hi) from whichever tail keeps precision.
            let p = if lo > 0.0 {
                normal_sf(lo) - normal_sf(hi)
            } else {
                normal_sf(-hi) - normal_sf(-lo)
            };
            log_mass += p.ln();
        }
        if log_mass.exp() < MIN_TRUNCATED_MASS {
            return Err(ScodError::InvalidConfiguration(format!(
                "truncation box keeps only {:.3e} of the gaussian mass",
                log_mass.exp()
            )));
        }
        Ok(Self {
            base,
            support,
            log_mass,
        })
    }

    pub fn support(&self) -> &BoxRegion {
        &self.support
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        if self.support.contains(x) {
            self.base.log_density(x) - self.log_mass
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        loop {
            let x = self.base.sample(rng);
            if self.support.contains(&x) {
                return x;
            }
        }
    }
}

/// Outlier-side density with exact evaluation and sampling.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Gaussian(GaussianClassConditional),
    TruncatedGaussian(TruncatedGaussian),
    Uniform(BoxRegion),
    Mixture(Box<LabeledMixtureDistribution>),
}

impl Density {
    pub fn uniform(region: BoxRegion) -> Result<Self> {
        if region
            .lower
            .iter()
            .chain(&region.upper)
            .any(|b| !b.is_finite())
        {
            return Err(ScodError::InvalidConfiguration(
                "uniform density needs finite bounds".into(),
            ));
        }
        Ok(Density::Uniform(region))
    }

    pub fn dim(&self) -> usize {
        match self {
            Density::Gaussian(g) => g.dim(),
            Density::TruncatedGaussian(t) => t.base.dim(),
            Density::Uniform(b) => b.dim(),
            Density::Mixture(m) => m.dim(),
        }
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        match self {
            Density::Gaussian(g) => g.log_density(x),
            Density::TruncatedGaussian(t) => t.log_density(x),
            Density::Uniform(b) => {
                if b.contains(x) {
                    -b.lower
                        .iter()
                        .zip(&b.upper)
                        .map(|(l, u)| (u - l).ln())
                        .sum::<f64>()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Density::Mixture(m) => m.log_marginal(x),
        }
    }

    /// True when the density is exactly zero at `x`.
    pub fn vanishes_at(&self, x: &[f64]) -> bool {
        self.log_density(x) == f64::NEG_INFINITY
    }

    /// True when the density is positive on all of feature space.
    pub fn has_full_support(&self) -> bool {
        match self {
            Density::Gaussian(_) => true,
            Density::Mixture(m) => m.has_full_support(),
            Density::TruncatedGaussian(_) | Density::Uniform(_) => false,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Density::Gaussian(g) => g.sample(rng),
            Density::TruncatedGaussian(t) => t.sample(rng),
            Density::Uniform(b) => b
                .lower
                .iter()
                .zip(&b.upper)
                .map(|(l, u)| l + (u - l) * rng.random::<f64>())
                .collect(),
            Density::Mixture(m) => m.sample_labeled(rng).0,
        }
    }
}
