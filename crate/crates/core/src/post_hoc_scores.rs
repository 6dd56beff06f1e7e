//! Baseline confidence and OOD scores computed from logits and embeddings.
//!
//! Sign conventions: `msp`, `max_logit`, `embed_l1` and `sirc` are larger
//! for samples that look safer to accept; `energy` and `residual` are
//! larger for samples that look more anomalous.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::stream_rng;
use crate::numeric::{log_sum_exp, max_value, softmax};
use crate::{Result, ScodError};

/// Maximum softmax probability.
pub fn msp(logits: &[f64]) -> f64 {
    max_value(&softmax(logits))
}

pub fn max_logit(logits: &[f64]) -> f64 {
    max_value(logits)
}

/// `−log Σ_y exp(f_y)`.
pub fn energy(logits: &[f64]) -> f64 {
    -log_sum_exp(logits)
}

pub fn embed_l1(embedding: &[f64]) -> f64 {
    embedding.iter().map(|v| v.abs()).sum()
}

const POWER_MAX_ITERS: usize = 1000;
const POWER_REL_TOL: f64 = 1e-10;

/// Mean and leading principal directions of a set of embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualProjector {
    mean: Vec<f64>,
    /// Orthonormal rows spanning the principal subspace.
    basis: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    for b in against {
        let c = dot(v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
}

/// Default subspace dimension `min(dim / 2, 32)`.
pub fn default_subspace_dim(embedding_dim: usize) -> usize {
    (embedding_dim / 2).min(32)
}

/// Fits the top-`d` principal subspace by power iteration with deflation on
/// the sample covariance.
///
/// Each direction iterates until the eigenvalue estimate changes by less
/// than `1e-10` relative and the direction by less than `1e-10`, or 1000
/// iterations pass.
pub fn fit_residual(embeddings: &[Vec<f64>], d: usize) -> Result<ResidualProjector> {
    let n = embeddings.len();
    let e = embeddings
        .first()
        .ok_or(ScodError::EmptyInput("embeddings"))?
        .len();
    if let Some(bad) = embeddings.iter().find(|v| v.len() != e) {
        return Err(ScodError::DimensionMismatch {
            expected: e,
            actual: bad.len(),
        });
    }
    if d >= e {
        return Err(ScodError::InvalidConfiguration(format!(
            "subspace dimension {d} must be below embedding dimension {e}"
        )));
    }
    if n < d + 1 {
        return Err(ScodError::RankDeficient {
            requested: d,
            achieved: n.saturating_sub(1),
        });
    }
    let mut mean = vec![0.0; e];
    for v in embeddings {
        mean.iter_mut().zip(v).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![vec![0.0; e]; e];
    for v in embeddings {
        let c: Vec<f64> = v.iter().zip(&mean).map(|(x, m)| x - m).collect();
        for i in 0..e {
            for j in i..e {
                cov[i][j] += c[i] * c[j];
            }
        }
    }
    for i in 0..e {
        for j in i..e {
            cov[i][j] /= (n - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }
    let trace: f64 = (0..e).map(|i| cov[i][i]).sum();
    let rank_tol = 1e-12 * trace.max(f64::MIN_POSITIVE);

    let mut rng = stream_rng(0x5eed, 0);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut eigenvalues = Vec::with_capacity(d);
    for k in 0..d {
        let mut v: Vec<f64> = (0..e).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(&mut v, &basis);
        normalize(&mut v);
        let mut lambda = 0.0;
        for _ in 0..POWER_MAX_ITERS {
            let mut w: Vec<f64> = cov.iter().map(|row| dot(row, &v)).collect();
            orthogonalize(&mut w, &basis);
            let next = normalize(&mut w);
            let moved = v
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let converged =
                (next - lambda).abs() <= POWER_REL_TOL * next.abs() && moved <= POWER_REL_TOL;
            v = w;
            lambda = next;
            if converged || lambda <= rank_tol {
                break;
            }
        }
        if lambda <= rank_tol {
            return Err(ScodError::RankDeficient {
                requested: d,
                achieved: k,
            });
        }
        // Deflate.
        for i in 0..e {
            for j in 0..e {
                cov[i][j] -= lambda * v[i] * v[j];
            }
        }
        basis.push(v);
        eigenvalues.push(lambda);
    }
    Ok(ResidualProjector {
        mean,
        basis,
        eigenvalues,
    })
}

impl ResidualProjector {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Norm of the part of `embedding − mean` outside the principal subspace.
    pub fn residual(&self, embedding: &[f64]) -> f64 {
        let mut c: Vec<f64> = embedding
            .iter()
            .zip(&self.mean)
            .map(|(x, m)| x - m)
            .collect();
        orthogonalize(&mut c, &self.basis);
        dot(&c, &c).sqrt()
    }
}

/// Which raw OOD score feeds SIRC. Both are oriented so that larger means
/// more inlier: the L1 norm as is, the residual negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SircSource {
    L1,
    Residual,
}

impl SircSource {
    pub fn orient(&self, raw: f64) -> f64 {
        match self {
            SircSource::L1 => raw,
            SircSource::Residual => -raw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SircParams {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub source: SircSource,
}

impl SircParams {
    /// `a1 = 1`, `a2 = 1/std`, `a3 = −mean/std` of the oriented OOD score on
    /// held-out inliers.
    pub fn fit(oriented_inlier_scores: &[f64], source: SircSource) -> Result<Self> {
        let n = oriented_inlier_scores.len();
        if n < 2 {
            return Err(ScodError::EmptyInput(
                "held-out inlier scores (need at least two)",
            ));
        }
        let mean = oriented_inlier_scores.iter().sum::<f64>() / n as f64;
        let var = oriented_inlier_scores
            .iter()
            .map(|v| (v - mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64;
        let std = var.sqrt();
        if !(std > 0.0 && std.is_finite()) {
            return Err(ScodError::InvalidInput(
                "held-out OOD scores have zero spread".into(),
            ));
        }
        Ok(Self {
            a1: 1.0,
            a2: 1.0 / std,
            a3: -mean / std,
            source,
        })
    }
}

/// `(s_sc − a1) · (1 + exp(−(a2 · s_ood + a3)))`; larger is safer.
pub fn sirc(s_sc: f64, s_ood: f64, params: &SircParams) -> f64 {
    let factor = s_sc - params.a1;
    if factor == 0.0 {
        return 0.0;
    }
    factor * (1.0 + (-(params.a2 * s_ood + params.a3)).exp())
}

/// All baseline scores for one sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRecord {
    pub msp: f64,
    pub max_logit: f64,
    pub energy: f64,
    pub embed_l1: f64,
    pub residual: Option<f64>,
    pub sirc: Option<f64>,
}

impl ScoreRecord {
    pub fn compute(
        logits: &[f64],
        embedding: &[f64],
        projector: Option<&ResidualProjector>,
        sirc_params: Option<&SircParams>,
    ) -> Self {
        let msp_v = msp(logits);
        let l1 = embed_l1(embedding);
        let residual = projector.map(|p| p.residual(embedding));
        let sirc_v = sirc_params.and_then(|p| {
            let raw = match p.source {
                SircSource::L1 => Some(l1),
                SircSource::Residual => residual,
            }?;
            Some(sirc(msp_v, p.source.orient(raw), p))
        });
        Self {
            msp: msp_v,
            max_logit: max_logit(logits),
            energy: energy(logits),
            embed_l1: l1,
            residual,
            sirc: sirc_v,
        }
    }
}
