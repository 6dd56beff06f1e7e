use super::density::Density;
use super::mixture::LabeledMixtureDistribution;
use crate::numeric::log_sum_exp;
use crate::{Result, ScodError};

/// Ground-truth SCOD environment.
///
/// The test distribution is `P_te = π*_in · P_in + (1 − π*_in) · P_out` and
/// the unlabeled wild sample is `P_mix = π_mix · P_in + (1 − π_mix) · P_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScodEnvironment {
    inlier: LabeledMixtureDistribution,
    outlier: Density,
    pi_in_star: f64,
    pi_mix: f64,
}

impl ScodEnvironment {
    pub fn new(
        inlier: LabeledMixtureDistribution,
        outlier: Density,
        pi_in_star: f64,
        pi_mix: f64,
    ) -> Result<Self> {
        if inlier.dim() != outlier.dim() {
            return Err(ScodError::DimensionMismatch {
                expected: inlier.dim(),
                actual: outlier.dim(),
            });
        }
        if !(pi_in_star > 0.0 && pi_in_star < 1.0) {
            return Err(ScodError::InvalidConfiguration(format!(
                "pi_in_star must lie in (0, 1), got {pi_in_star}"
            )));
        }
        if !(0.0..1.0).contains(&pi_mix) {
            return Err(ScodError::InvalidConfiguration(format!(
                "pi_mix must lie in [0, 1), got {pi_mix}"
            )));
        }
        Ok(Self {
            inlier,
            outlier,
            pi_in_star,
            pi_mix,
        })
    }

    pub fn inlier(&self) -> &LabeledMixtureDistribution {
        &self.inlier
    }

    pub fn outlier(&self) -> &Density {
        &self.outlier
    }

    pub fn pi_in_star(&self) -> f64 {
        self.pi_in_star
    }

    pub fn pi_mix(&self) -> f64 {
        self.pi_mix
    }

    pub fn dim(&self) -> usize {
        self.inlier.dim()
    }

    pub fn num_classes(&self) -> usize {
        self.inlier.num_classes()
    }

    pub fn with_pi_mix(mut self, pi_mix: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&pi_mix) {
            return Err(ScodError::InvalidConfiguration(format!(
                "pi_mix must lie in [0, 1), got {pi_mix}"
            )));
        }
        self.pi_mix = pi_mix;
        Ok(self)
    }

    pub fn log_p_in(&self, x: &[f64]) -> f64 {
        self.inlier.log_marginal(x)
    }

    pub fn log_p_out(&self, x: &[f64]) -> f64 {
        self.outlier.log_density(x)
    }

    fn log_two_way(&self, weight: f64, x: &[f64]) -> f64 {
        let mut terms = Vec::with_capacity(2);
        if weight > 0.0 {
            terms.push(weight.ln() + self.log_p_in(x));
        }
        if weight < 1.0 {
            terms.push((1.0 - weight).ln() + self.log_p_out(x));
        }
        log_sum_exp(&terms)
    }

    pub fn log_p_mix(&self, x: &[f64]) -> f64 {
        self.log_two_way(self.pi_mix, x)
    }

    pub fn log_p_te(&self, x: &[f64]) -> f64 {
        self.log_two_way(self.pi_in_star, x)
    }

    pub fn posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.inlier.posterior(x)
    }

    /// Exact `P_out(x) / P_in(x)`. Points outside the inlier support map to
    /// `+inf`, including points where both densities vanish.
    pub fn density_ratio(&self, x: &[f64]) -> Result<f64> {
        if x.iter().any(|v| v.is_nan()) {
            return Err(ScodError::InvalidInput(
                "feature vector contains NaN".into(),
            ));
        }
        let log_in = self.log_p_in(x);
        let log_out = self.log_p_out(x);
        if log_in == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        Ok((log_out - log_in).exp())
    }

    /// `P_in(x) / (P_in(x) + P_out(x))`, the inlier probability under an
    /// equal-weight pooling of the two distributions.
    pub fn inlier_fraction(&self, x: &[f64]) -> f64 {
        let log_in = self.log_p_in(x);
        let log_out = self.log_p_out(x);
        let lse = log_sum_exp(&[log_in, log_out]);
        if lse == f64::NEG_INFINITY {
            return 0.0;
        }
        (log_in - lse).exp()
    }
}

/// Turns a fully labelled distribution into an open-set environment by
/// holding out one class as the outlier distribution.
///
/// The wild mixture is set to the test distribution (`π_mix = π*_in`), which
/// is what an unlabeled deployment sample of the full label set looks like.
pub fn open_set_restrict(
    full: &LabeledMixtureDistribution,
    held_out_class: usize,
) -> Result<ScodEnvironment> {
    let l = full.num_classes();
    if l < 2 {
        return Err(ScodError::InvalidConfiguration(
            "open-set restriction needs at least two classes".into(),
        ));
    }
    if held_out_class >= l {
        return Err(ScodError::LabelOutOfRange {
            label: held_out_class,
            num_classes: l,
        });
    }
    let held_prior = full.priors()[held_out_class];
    if held_prior <= 0.0 || held_prior >= 1.0 {
        return Err(ScodError::InvalidConfiguration(format!(
            "held-out class prior must lie in (0, 1), got {held_prior}"
        )));
    }
    let keep = 1.0 - held_prior;
    let mut priors = Vec::with_capacity(l - 1);
    let mut conditionals = Vec::with_capacity(l - 1);
    for (y, (p, c)) in full.priors().iter().zip(full.conditionals()).enumerate() {
        if y != held_out_class {
            priors.push(p / keep);
            conditionals.push(c.clone());
        }
    }
    // Renormalise away rounding so the simplex check holds to 1e-12.
    let total: f64 = priors.iter().sum();
    priors.iter_mut().for_each(|p| *p /= total);
    let inlier = LabeledMixtureDistribution::new(priors, conditionals)?;
    let outlier = Density::Gaussian(full.conditionals()[held_out_class].clone());
    ScodEnvironment::new(inlier, outlier, keep, keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{BoxRegion, GaussianClassConditional};

    fn gauss(m: f64) -> GaussianClassConditional {
        GaussianClassConditional::isotropic(vec![m], 1.0).unwrap()
    }

    #[test]
    fn equal_priors_hold_out_last() {
        let full = LabeledMixtureDistribution::isotropic_equal_priors(
            vec![
                vec![0.0, 0.0],
                vec![2.0, 0.0],
                vec![0.0, 2.0],
                vec![4.0, 4.0],
            ],
            1.0,
        )
        .unwrap();
        let env = open_set_restrict(&full, 3).unwrap();
        assert_eq!(env.num_classes(), 3);
        for p in env.inlier().priors() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(env.pi_in_star(), 0.75);
    }

    #[test]
    fn unequal_priors_renormalise() {
        let full = LabeledMixtureDistribution::new(
            vec![0.5, 0.3, 0.2],
            vec![gauss(0.0), gauss(1.0), gauss(2.0)],
        )
        .unwrap();
        let env = open_set_restrict(&full, 2).unwrap();
        let p = env.inlier().priors();
        assert!((p[0] - 0.625).abs() < 1e-15 && (p[1] - 0.375).abs() < 1e-15);
    }

    #[test]
    fn zero_prior_hold_out_is_rejected() {
        let full =
            LabeledMixtureDistribution::new(vec![1.0, 0.0], vec![gauss(0.0), gauss(1.0)]).unwrap();
        assert!(matches!(
            open_set_restrict(&full, 1),
            Err(ScodError::InvalidConfiguration(_))
        ));
        assert!(matches!(
            open_set_restrict(&full, 0),
            Err(ScodError::InvalidConfiguration(_))
        ));
    }

    #[test]
    fn density_ratio_identity_and_midpoint() {
        let inlier = LabeledMixtureDistribution::new(vec![1.0], vec![gauss(0.0)]).unwrap();
        let same =
            ScodEnvironment::new(inlier.clone(), Density::Gaussian(gauss(0.0)), 0.5, 0.3).unwrap();
        for x in [-3.0, 0.0, 1.7] {
            assert!((same.density_ratio(&[x]).unwrap() - 1.0).abs() < 1e-15);
        }
        let shifted =
            ScodEnvironment::new(inlier, Density::Gaussian(gauss(3.0)), 0.5, 0.3).unwrap();
        assert!((shifted.density_ratio(&[1.5]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn density_ratio_saturates_far_from_inliers() {
        let narrow = GaussianClassConditional::isotropic(vec![0.0], 1e-4).unwrap();
        let inlier = LabeledMixtureDistribution::new(vec![1.0], vec![narrow]).unwrap();
        let outlier = Density::uniform(BoxRegion::new(vec![-10.0], vec![10.0]).unwrap()).unwrap();
        let env = ScodEnvironment::new(inlier, outlier, 0.5, 0.5).unwrap();
        assert_eq!(env.density_ratio(&[5.0]).unwrap(), f64::INFINITY);
        assert_eq!(env.density_ratio(&[50.0]).unwrap(), 0.0);
        assert!(env.density_ratio(&[f64::NAN]).is_err());
    }
}
