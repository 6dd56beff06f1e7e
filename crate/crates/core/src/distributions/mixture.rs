use rand::Rng;

use super::gaussian::GaussianClassConditional;
use crate::numeric::log_sum_exp;
use crate::{Result, ScodError};

/// Class-labelled mixture `P(x, y) = π(y) · P(x | y)` with Gaussian
/// class-conditionals.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMixtureDistribution {
    priors: Vec<f64>,
    log_priors: Vec<f64>,
    conditionals: Vec<GaussianClassConditional>,
}

impl LabeledMixtureDistribution {
    pub fn new(priors: Vec<f64>, conditionals: Vec<GaussianClassConditional>) -> Result<Self> {
        if priors.is_empty() {
            return Err(ScodError::InvalidConfiguration(
                "at least one class is required".into(),
            ));
        }
        if priors.len() != conditionals.len() {
            return Err(ScodError::DimensionMismatch {
                expected: priors.len(),
                actual: conditionals.len(),
            });
        }
        if priors.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(ScodError::InvalidConfiguration(
                "class priors must be finite and non-negative".into(),
            ));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ScodError::InvalidConfiguration(format!(
                "class priors sum to {total}, expected 1"
            )));
        }
        let dim = conditionals[0].dim();
        if let Some(c) = conditionals.iter().find(|c| c.dim() != dim) {
            return Err(ScodError::DimensionMismatch {
                expected: dim,
                actual: c.dim(),
            });
        }
        let log_priors = priors.iter().map(|p| p.ln()).collect();
        Ok(Self {
            priors,
            log_priors,
            conditionals,
        })
    }

    /// Equal-prior mixture of isotropic Gaussians sharing one variance.
    pub fn isotropic_equal_priors(means: Vec<Vec<f64>>, variance: f64) -> Result<Self> {
        let l = means.len();
        let conditionals = means
            .into_iter()
            .map(|m| GaussianClassConditional::isotropic(m, variance))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vec![1.0 / l as f64; l], conditionals)
    }

    pub fn num_classes(&self) -> usize {
        self.priors.len()
    }

    pub fn dim(&self) -> usize {
        self.conditionals[0].dim()
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn conditionals(&self) -> &[GaussianClassConditional] {
        &self.conditionals
    }

    pub(crate) fn has_full_support(&self) -> bool {
        true
    }

    /// `log π(y) + log P(x | y)` for every class.
    pub fn log_joint(&self, x: &[f64]) -> Vec<f64> {
        self.conditionals
            .iter()
            .zip(&self.log_priors)
            .map(|(c, lp)| {
                if *lp == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    lp + c.log_density(x)
                }
            })
            .collect()
    }

    pub fn log_marginal(&self, x: &[f64]) -> f64 {
        log_sum_exp(&self.log_joint(x))
    }

    /// Exact class posterior `P(y | x)`, computed in log space. Falls back to
    /// the prior when every joint density underflows.
    pub fn posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(ScodError::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| v.is_nan()) {
            return Err(ScodError::InvalidInput(
                "feature vector contains NaN".into(),
            ));
        }
        let joint = self.log_joint(x);
        let lse = log_sum_exp(&joint);
        if !lse.is_finite() {
            return Ok(self.priors.clone());
        }
        Ok(joint.iter().map(|j| (j - lse).exp()).collect())
    }

    /// Draws `(x, y)`.
    pub fn sample_labeled<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, usize) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut label = self.num_classes() - 1;
        for (i, p) in self.priors.iter().enumerate() {
            acc += p;
            if u < acc {
                label = i;
                break;
            }
        }
        // Guard against rounding landing on a zero-prior tail class.
        while self.priors[label] == 0.0 && label > 0 {
            label -= 1;
        }
        (self.conditionals[label].sample(rng), label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric_pair(mu: f64) -> LabeledMixtureDistribution {
        LabeledMixtureDistribution::isotropic_equal_priors(vec![vec![-mu], vec![mu]], 1.0).unwrap()
    }

    #[test]
    fn posterior_is_half_at_symmetry_point() {
        let post = symmetric_pair(2.0).posterior(&[0.0]).unwrap();
        assert!((post[0] - 0.5).abs() < 1e-15 && (post[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn posterior_concentrates_far_from_other_class() {
        // At x = mu with the other mean 10 sigma away the posterior ratio is exp(-20).
        let post = symmetric_pair(5.0).posterior(&[5.0]).unwrap();
        assert!(post[1] >= 0.999);
        assert!((post[0] - (-50.0f64).exp() / (1.0 + (-50.0f64).exp())).abs() < 1e-25);
    }

    #[test]
    fn underflow_falls_back_to_prior() {
        let d = LabeledMixtureDistribution::new(
            vec![0.3, 0.7],
            vec![
                GaussianClassConditional::isotropic(vec![0.0], 1e-3).unwrap(),
                GaussianClassConditional::isotropic(vec![1.0], 1e-3).unwrap(),
            ],
        )
        .unwrap();
        // The squared distance overflows, so every log joint is -inf.
        assert_eq!(d.posterior(&[1e200]).unwrap(), vec![0.3, 0.7]);
    }

    #[test]
    fn nan_feature_is_an_input_error() {
        assert!(matches!(
            symmetric_pair(1.0).posterior(&[f64::NAN]),
            Err(ScodError::InvalidInput(_))
        ));
    }

    #[test]
    fn priors_must_sum_to_one() {
        let c = || GaussianClassConditional::isotropic(vec![0.0], 1.0).unwrap();
        assert!(LabeledMixtureDistribution::new(vec![0.5, 0.6], vec![c(), c()]).is_err());
        assert!(LabeledMixtureDistribution::new(vec![1.5, -0.5], vec![c(), c()]).is_err());
    }
}
