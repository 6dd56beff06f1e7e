use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Result, ScodError};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Covariance structure of a Gaussian component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Covariance {
    Isotropic(f64),
    Diagonal(Vec<f64>),
    /// Dense symmetric positive-definite matrix, row-major rows.
    Full(Vec<Vec<f64>>),
}

/// Multivariate Gaussian `N(mean, covariance)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianClassConditional {
    mean: Vec<f64>,
    covariance: Covariance,
    // Lower-triangular Cholesky factor, row-major, `dim * dim`.
    cholesky: Vec<f64>,
    log_det: f64,
}

impl GaussianClassConditional {
    pub fn new(mean: Vec<f64>, covariance: Covariance) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(ScodError::InvalidConfiguration(
                "gaussian mean must be non-empty".into(),
            ));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(ScodError::InvalidConfiguration(
                "gaussian mean must be finite".into(),
            ));
        }
        let mut cholesky = vec![0.0; d * d];
        match &covariance {
            Covariance::Isotropic(v) => {
                if !(*v > 0.0 && v.is_finite()) {
                    return Err(ScodError::InvalidConfiguration(format!(
                        "variance must be > 0, got {v}"
                    )));
                }
                for i in 0..d {
                    cholesky[i * d + i] = v.sqrt();
                }
            }
            Covariance::Diagonal(vs) => {
                if vs.len() != d {
                    return Err(ScodError::DimensionMismatch {
                        expected: d,
                        actual: vs.len(),
                    });
                }
                for (i, v) in vs.iter().enumerate() {
                    if !(*v > 0.0 && v.is_finite()) {
                        return Err(ScodError::InvalidConfiguration(format!(
                            "variance must be > 0, got {v}"
                        )));
                    }
                    cholesky[i * d + i] = v.sqrt();
                }
            }
            Covariance::Full(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(ScodError::InvalidConfiguration(
                        "covariance must be a square matrix matching the mean".into(),
                    ));
                }
                for i in 0..d {
                    for j in 0..i {
                        if (rows[i][j] - rows[j][i]).abs()
                            > 1e-12 * (rows[i][j].abs() + rows[j][i].abs()).max(1.0)
                        {
                            return Err(ScodError::InvalidConfiguration(
                                "covariance must be symmetric".into(),
                            ));
                        }
                    }
                }
                // Cholesky-Banachiewicz; fails exactly when the matrix is not positive definite.
                for i in 0..d {
                    for j in 0..=i {
                        let mut sum = rows[i][j];
                        for k in 0..j {
                            sum -= cholesky[i * d + k] * cholesky[j * d + k];
                        }
                        if i == j {
                            if sum <= 0.0 || !sum.is_finite() {
                                return Err(ScodError::InvalidConfiguration(
                                    "covariance is not positive definite".into(),
                                ));
                            }
                            cholesky[i * d + i] = sum.sqrt();
                        } else {
                            cholesky[i * d + j] = sum / cholesky[j * d + j];
                        }
                    }
                }
            }
        }
        let log_det = 2.0 * (0..d).map(|i| cholesky[i * d + i].ln()).sum::<f64>();
        Ok(Self {
            mean,
            covariance,
            cholesky,
            log_det,
        })
    }

    pub fn isotropic(mean: Vec<f64>, variance: f64) -> Result<Self> {
        Self::new(mean, Covariance::Isotropic(variance))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    /// Per-coordinate standard deviations; only meaningful for diagonal forms.
    pub(crate) fn std_devs(&self) -> Option<Vec<f64>> {
        let d = self.dim();
        match self.covariance {
            Covariance::Full(_) => None,
            _ => Some((0..d).map(|i| self.cholesky[i * d + i]).collect()),
        }
    }

    // Squared Mahalanobis distance via forward substitution.
    fn mahalanobis_sq(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut z = vec![0.0; d];
        let mut q = 0.0;
        for i in 0..d {
            let mut r = x[i] - self.mean[i];
            for k in 0..i {
                r -= self.cholesky[i * d + k] * z[k];
            }
            z[i] = r / self.cholesky[i * d + i];
            q += z[i] * z[i];
        }
        q
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        -0.5 * (self.dim() as f64 * LN_2PI + self.log_det + self.mahalanobis_sq(x))
    }

    /// Density evaluated without passing through log space.
    pub fn density(&self, x: &[f64]) -> f64 {
        let d = self.dim() as f64;
        let norm = (2.0 * std::f64::consts::PI).powf(-d / 2.0) / self.log_det.exp().sqrt();
        norm * (-0.5 * self.mahalanobis_sq(x)).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        (0..d)
            .map(|i| {
                self.mean[i]
                    + (0..=i)
                        .map(|k| self.cholesky[i * d + k] * z[k])
                        .sum::<f64>()
            })
            .collect()
    }
}
