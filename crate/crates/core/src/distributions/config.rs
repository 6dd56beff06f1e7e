use serde::Deserialize;

use super::density::{BoxRegion, Density, TruncatedGaussian};
use super::environment::{open_set_restrict, ScodEnvironment};
use super::gaussian::{Covariance, GaussianClassConditional};
use super::mixture::LabeledMixtureDistribution;
use crate::{Result, ScodError};

/// Declarative environment description, usually read from TOML.
///
/// Either list the inlier classes plus an `outlier` block, or list every
/// class of a full distribution and name a `held_out_class` to get the
/// open-set restriction.
///
/// ```toml
/// pi_in_star = 0.5
/// pi_mix = 0.1
///
/// [[classes]]
/// mean = [-2.0]
/// variance = 1.0
///
/// [[classes]]
/// mean = [2.0]
/// variance = 1.0
///
/// [outlier]
/// kind = "truncated-gaussian"
/// mean = [4.0]
/// variance = 1.0
/// lower = [2.5]
/// upper = [inf]
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub classes: Vec<ClassConfig>,
    #[serde(default)]
    pub outlier: Option<OutlierConfig>,
    /// Zero-based index into `classes`.
    #[serde(default)]
    pub held_out_class: Option<usize>,
    #[serde(default)]
    pub pi_in_star: Option<f64>,
    #[serde(default)]
    pub pi_mix: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    pub mean: Vec<f64>,
    #[serde(default)]
    pub variance: Option<f64>,
    #[serde(default)]
    pub diagonal: Option<Vec<f64>>,
    #[serde(default)]
    pub prior: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OutlierConfig {
    Gaussian {
        mean: Vec<f64>,
        variance: f64,
    },
    TruncatedGaussian {
        mean: Vec<f64>,
        variance: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Uniform {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl ClassConfig {
    fn gaussian(&self) -> Result<GaussianClassConditional> {
        let cov = match (&self.variance, &self.diagonal) {
            (Some(v), None) => Covariance::Isotropic(*v),
            (None, Some(d)) => Covariance::Diagonal(d.clone()),
            (None, None) => Covariance::Isotropic(1.0),
            (Some(_), Some(_)) => {
                return Err(ScodError::InvalidConfiguration(
                    "a class sets both `variance` and `diagonal`".into(),
                ))
            }
        };
        GaussianClassConditional::new(self.mean.clone(), cov)
    }
}

impl OutlierConfig {
    pub fn build(&self) -> Result<Density> {
        match self {
            OutlierConfig::Gaussian { mean, variance } => Ok(Density::Gaussian(
                GaussianClassConditional::isotropic(mean.clone(), *variance)?,
            )),
            OutlierConfig::TruncatedGaussian {
                mean,
                variance,
                lower,
                upper,
            } => {
                let base = GaussianClassConditional::isotropic(mean.clone(), *variance)?;
                let support = BoxRegion::new(lower.clone(), upper.clone())?;
                Ok(Density::TruncatedGaussian(TruncatedGaussian::new(
                    base, support,
                )?))
            }
            OutlierConfig::Uniform { lower, upper } => {
                Density::uniform(BoxRegion::new(lower.clone(), upper.clone())?)
            }
        }
    }
}

impl EnvironmentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ScodError::Parse(e.to_string()))
    }

    pub fn mixture(&self) -> Result<LabeledMixtureDistribution> {
        let l = self.classes.len();
        if l == 0 {
            return Err(ScodError::InvalidConfiguration(
                "environment lists no classes".into(),
            ));
        }
        let given = self.classes.iter().filter(|c| c.prior.is_some()).count();
        let priors = if given == 0 {
            vec![1.0 / l as f64; l]
        } else if given == l {
            self.classes
                .iter()
                .map(|c| c.prior.unwrap_or_default())
                .collect()
        } else {
            return Err(ScodError::InvalidConfiguration(
                "set `prior` on every class or on none".into(),
            ));
        };
        let conditionals = self
            .classes
            .iter()
            .map(ClassConfig::gaussian)
            .collect::<Result<Vec<_>>>()?;
        LabeledMixtureDistribution::new(priors, conditionals)
    }

    pub fn build(&self) -> Result<ScodEnvironment> {
        let mixture = self.mixture()?;
        match self.held_out_class {
            Some(held_out) => {
                if self.outlier.is_some() {
                    return Err(ScodError::InvalidConfiguration(
                        "`held_out_class` and `outlier` are mutually exclusive".into(),
                    ));
                }
                if self.pi_in_star.is_some() {
                    return Err(ScodError::InvalidConfiguration(
                        "`pi_in_star` is implied by the held-out class prior".into(),
                    ));
                }
                let env = open_set_restrict(&mixture, held_out)?;
                match self.pi_mix {
                    Some(p) => env.with_pi_mix(p),
                    None => Ok(env),
                }
            }
            None => {
                let outlier = self
                    .outlier
                    .as_ref()
                    .ok_or_else(|| {
                        ScodError::InvalidConfiguration(
                            "environment needs an `outlier` block".into(),
                        )
                    })?
                    .build()?;
                let pi_in_star = self.pi_in_star.ok_or_else(|| {
                    ScodError::InvalidConfiguration("environment needs `pi_in_star`".into())
                })?;
                let pi_mix = self.pi_mix.ok_or_else(|| {
                    ScodError::InvalidConfiguration("environment needs `pi_mix`".into())
                })?;
                ScodEnvironment::new(mixture, outlier, pi_in_star, pi_mix)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doc_example_parses() {
        let text = r#"
pi_in_star = 0.5
pi_mix = 0.1

[[classes]]
mean = [-2.0]
variance = 1.0

[[classes]]
mean = [2.0]
variance = 1.0

[outlier]
kind = "truncated-gaussian"
mean = [4.0]
variance = 1.0
lower = [2.5]
upper = [inf]
"#;
        let env = EnvironmentConfig::from_toml_str(text)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(env.num_classes(), 2);
        assert_eq!(env.pi_mix(), 0.1);
        assert!(env.outlier().vanishes_at(&[2.0]));
    }

    #[test]
    fn held_out_class_restricts() {
        let text = r#"
held_out_class = 2
[[classes]]
mean = [0.0]
prior = 0.5
[[classes]]
mean = [1.0]
prior = 0.3
[[classes]]
mean = [2.0]
prior = 0.2
"#;
        let env = EnvironmentConfig::from_toml_str(text)
            .unwrap()
            .build()
            .unwrap();
        assert!((env.pi_in_star() - 0.8).abs() < 1e-15);
        assert!((env.inlier().priors()[0] - 0.625).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_fields_and_partial_priors() {
        assert!(EnvironmentConfig::from_toml_str("classes = []\nbogus = 1").is_err());
        let text = "pi_in_star = 0.5\npi_mix = 0.5\n[[classes]]\nmean=[0.0]\nprior=1.0\n[[classes]]\nmean=[1.0]\n[outlier]\nkind='uniform'\nlower=[0.0]\nupper=[1.0]";
        assert!(EnvironmentConfig::from_toml_str(text)
            .unwrap()
            .build()
            .is_err());
    }
}
