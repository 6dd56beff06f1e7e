//! Trainable scorers and the surrogate losses they minimise.
//!
//! A scorer maps features to class logits `f(x)`, an OOD logit `s(x)`
//! (larger = more inlier) and an embedding. Under the decoupled loss the
//! population minimisers are `f*_y = log P_in(y|x) + const` and
//! `s* = log(P_in(x) / P_mix(x))`, so `exp(−ŝ)` estimates `P_mix/P_in`.

mod losses;
mod model;
mod train;

pub use losses::{coupled_loss, decoupled_loss, loss, LossReport, Objective};
pub use model::{Architecture, Head, ProbabilityEstimates, ScorerModel, ScorerOutput};
pub use train::{train, TrainConfig, TrainOutcome};

use crate::distributions::ScodEnvironment;
use crate::Result;

/// Anything that produces logits for a feature vector.
pub trait Scorer: Sync {
    fn num_classes(&self) -> usize;
    fn score(&self, x: &[f64]) -> Result<ScorerOutput>;

    fn probability_estimates(&self, x: &[f64]) -> Result<ProbabilityEstimates> {
        Ok(self.score(x)?.probability_estimates(self.num_classes()))
    }
}

impl<S: Scorer> Scorer for &S {
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }

    fn score(&self, x: &[f64]) -> Result<ScorerOutput> {
        (**self).score(x)
    }
}

impl Scorer for ScorerModel {
    fn num_classes(&self) -> usize {
        ScorerModel::num_classes(self)
    }

    fn score(&self, x: &[f64]) -> Result<ScorerOutput> {
        self.forward(x)
    }
}

/// The exact decoupled-loss minimiser of an environment: `f_y = log P_in(y|x)`
/// and `s = log P_in(x) − log P_mix(x)`. The embedding is the raw input.
#[derive(Debug, Clone)]
pub struct OracleScorer<'a> {
    env: &'a ScodEnvironment,
}

impl<'a> OracleScorer<'a> {
    pub fn new(env: &'a ScodEnvironment) -> Self {
        Self { env }
    }
}

impl Scorer for OracleScorer<'_> {
    fn num_classes(&self) -> usize {
        self.env.num_classes()
    }

    fn score(&self, x: &[f64]) -> Result<ScorerOutput> {
        let posterior = self.env.posterior(x)?;
        let logits = posterior.iter().map(|p| p.ln()).collect();
        let ood_logit = self.env.log_p_in(x) - self.env.log_p_mix(x);
        Ok(ScorerOutput {
            logits,
            ood_logit: Some(ood_logit),
            embedding: x.to_vec(),
        })
    }
}
