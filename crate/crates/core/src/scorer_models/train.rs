use std::cmp::Ordering;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::losses::{evaluate, validate_objective, Objective};
use super::model::ScorerModel;
use crate::distributions::{stream_rng, Sample};
use crate::{Result, ScodError};

fn default_momentum() -> f64 {
    0.9
}

fn default_anneal_factor() -> f64 {
    10.0
}

/// Minibatch SGD with momentum and step annealing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    /// Epochs (0-based) at whose start the step size is divided by
    /// `anneal_factor`.
    #[serde(default)]
    pub anneal_epochs: Vec<usize>,
    #[serde(default = "default_anneal_factor")]
    pub anneal_factor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 128,
            learning_rate: 0.1,
            momentum: 0.9,
            anneal_epochs: vec![20, 27],
            anneal_factor: 10.0,
        }
    }
}

impl TrainConfig {
    /// Full-batch gradient descent with a small step and no momentum, under
    /// which the per-epoch training loss is non-increasing for smooth
    /// objectives.
    pub fn safe(epochs: usize, learning_rate: f64) -> Self {
        Self {
            epochs,
            batch_size: usize::MAX,
            learning_rate,
            momentum: 0.0,
            anneal_epochs: Vec::new(),
            anneal_factor: 10.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(ScodError::InvalidConfiguration(
                "batch_size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ScodError::InvalidConfiguration(
                "learning_rate must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(ScodError::InvalidConfiguration(
                "momentum must lie in [0, 1)".into(),
            ));
        }
        if self.anneal_factor.is_nan() || self.anneal_factor < 1.0 {
            return Err(ScodError::InvalidConfiguration(
                "anneal_factor must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: ScorerModel,
    /// Full-training-set loss after each epoch.
    pub epoch_losses: Vec<f64>,
}

fn cmp_samples(a: &Sample, b: &Sample) -> Ordering {
    for (x, y) in a.features.iter().zip(&b.features) {
        match x.total_cmp(y) {
            Ordering::Equal => {}
            other => return other,
        }
    }
    a.label.cmp(&b.label)
}

/// Sorted copy, so results do not depend on input order.
fn canonical(samples: &[Sample]) -> Vec<Sample> {
    let mut out = samples.to_vec();
    out.sort_by(cmp_samples);
    out
}

/// Fits `model` to `objective`. The auxiliary set is the mixture sample for
/// the decoupled loss, the outlier (or mixture) sample for the coupled
/// loss, and is ignored by inlier cross-entropy.
///
/// Each epoch visits every inlier once in batches of `batch_size` and
/// spreads the auxiliary set over the same number of steps. Shuffles come
/// from `seed`; inputs are sorted first, so permuting them changes nothing.
pub fn train(
    model: ScorerModel,
    objective: &Objective,
    inliers: &[Sample],
    auxiliary: &[Sample],
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    config.validate()?;
    validate_objective(&model, objective, inliers, auxiliary)?;
    let inliers = canonical(inliers);
    let auxiliary = canonical(auxiliary);
    let mut model = model;
    let mut velocity = vec![0.0; model.params().len()];
    let mut lr = config.learning_rate;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let all_in: Vec<usize> = (0..inliers.len()).collect();
    let all_aux: Vec<usize> = (0..auxiliary.len()).collect();
    let batch = config.batch_size.min(inliers.len());
    let steps = inliers.len().div_ceil(batch);
    let aux_batch = auxiliary.len().div_ceil(steps);

    for epoch in 0..config.epochs {
        if config.anneal_epochs.contains(&epoch) {
            lr /= config.anneal_factor;
        }
        let mut rng = stream_rng(seed, epoch as u64);
        let mut in_order = all_in.clone();
        let mut aux_order = all_aux.clone();
        in_order.shuffle(&mut rng);
        aux_order.shuffle(&mut rng);
        for step in 0..steps {
            let in_idx = &in_order[step * batch..((step + 1) * batch).min(in_order.len())];
            let aux_lo = (step * aux_batch).min(aux_order.len());
            let aux_idx = &aux_order[aux_lo..((step + 1) * aux_batch).min(aux_order.len())];
            let report = evaluate(
                &model, objective, &inliers, in_idx, &auxiliary, aux_idx, true,
            );
            for ((p, v), g) in model
                .params_mut()
                .iter_mut()
                .zip(velocity.iter_mut())
                .zip(&report.gradient)
            {
                *v = config.momentum * *v - lr * g;
                *p += *v;
            }
        }
        let full = evaluate(
            &model, objective, &inliers, &all_in, &auxiliary, &all_aux, false,
        )
        .total;
        if !full.is_finite() || model.params().iter().any(|p| !p.is_finite()) {
            return Err(ScodError::TrainingDiverged { epoch, loss: full });
        }
        epoch_losses.push(full);
    }
    Ok(TrainOutcome {
        model,
        epoch_losses,
    })
}
