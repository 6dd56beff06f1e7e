//! Rejection scores for each method, computed from per-sample scorer
//! outputs so that synthetic runs and ingested logits share one code path.

use scod::numeric::{argmax, max_value, softmax};
use scod::plugin_rejectors::{
    budget_rejection_score, estimate_pi_mix, noise_correct, MixtureEstimate, PluginInputs,
    PI_MIX_CLAMP,
};
use scod::post_hoc_scores::{
    default_subspace_dim, embed_l1, energy, fit_residual, max_logit, msp, sirc, SircParams,
    SircSource,
};

use crate::config::Method;
use crate::error::{CliError, CliResult};
use crate::logits::Record;

/// Scores of one method on the evaluation set. Larger rejection scores
/// abstain first.
#[derive(Debug, Clone)]
pub struct MethodScores {
    pub rejection: Vec<f64>,
    pub classifier: Vec<usize>,
    /// Plug-in inputs, for methods that have them.
    pub plugin: Option<Vec<PluginInputs>>,
    pub pi_in_star: Option<f64>,
    pub mixture: Option<MixtureEstimate>,
    /// Samples whose noise-corrected ratio was floored.
    pub floored: usize,
}

impl MethodScores {
    fn plain(rejection: Vec<f64>, classifier: Vec<usize>) -> Self {
        Self {
            rejection,
            classifier,
            plugin: None,
            pi_in_star: None,
            mixture: None,
            floored: 0,
        }
    }

    /// Plug-in scores with `π*_in` fixed; the rejection score is the one
    /// whose thresholds are the Lagrangian rules.
    pub fn plugin(inputs: Vec<PluginInputs>, c_fn: f64, pi_in_star: f64) -> Self {
        let rejection = inputs
            .iter()
            .map(|i| budget_rejection_score(i, c_fn, pi_in_star))
            .collect();
        let classifier = inputs.iter().map(|i| i.label).collect();
        Self {
            rejection,
            classifier,
            plugin: Some(inputs),
            pi_in_star: Some(pi_in_star),
            mixture: None,
            floored: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScoreOptions {
    pub c_fn: f64,
    /// `π*_in` for plug-in scores; `None` falls back to `π̂_mix`.
    pub pi_in_star: Option<f64>,
    pub residual_dim: Option<usize>,
}

fn ood_logits(records: &[Record], what: &str) -> CliResult<Vec<f64>> {
    records
        .iter()
        .map(|r| {
            r.ood_logit
                .ok_or_else(|| CliError::Data(format!("{what} record lacks an OOD logit")))
        })
        .collect()
}

/// `π̂_mix` from the strictly-inlier records.
pub fn mixture_from_strict(strict: &[Record]) -> CliResult<MixtureEstimate> {
    if strict.is_empty() {
        return Err(CliError::Data(
            "no strict_in records to estimate the mixture weight".into(),
        ));
    }
    Ok(estimate_pi_mix(&ood_logits(strict, "strict_in")?)?)
}

/// Keeps `π*_in` inside `(0, 1)` when it comes from an estimate.
pub fn clamp_pi(p: f64) -> f64 {
    p.clamp(PI_MIX_CLAMP, 1.0 - PI_MIX_CLAMP)
}

fn resolve_pi(opts: &ScoreOptions, strict: &[Record]) -> CliResult<f64> {
    match opts.pi_in_star {
        Some(p) => Ok(p),
        None => Ok(clamp_pi(mixture_from_strict(strict)?.pi_mix_hat)),
    }
}

fn oriented_ood(
    records: &[Record],
    source: SircSource,
    strict: &[Record],
    residual_dim: Option<usize>,
) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let raw: Box<dyn Fn(&Record) -> f64> = match source {
        SircSource::L1 => Box::new(|r: &Record| embed_l1(&r.embedding)),
        SircSource::Residual => {
            let embeddings: Vec<Vec<f64>> = strict.iter().map(|r| r.embedding.clone()).collect();
            let dim = embeddings.first().map_or(0, Vec::len);
            let d = residual_dim.unwrap_or_else(|| default_subspace_dim(dim));
            let projector = fit_residual(&embeddings, d)?;
            Box::new(move |r: &Record| projector.residual(&r.embedding))
        }
    };
    let test = records.iter().map(|r| source.orient(raw(r))).collect();
    let held = strict.iter().map(|r| source.orient(raw(r))).collect();
    Ok((test, held))
}

/// Scores `method` on `test` using `strict` for fitting. Coupled and
/// oracle scores need more than logits and are handled by the caller.
pub fn score_records(
    method: Method,
    test: &[Record],
    strict: &[Record],
    opts: &ScoreOptions,
) -> CliResult<MethodScores> {
    let classifier: Vec<usize> = test.iter().map(|r| argmax(&r.logits)).collect();
    let each = |f: fn(&[f64]) -> f64, sign: f64| {
        test.iter().map(|r| sign * f(&r.logits)).collect::<Vec<_>>()
    };
    match method {
        Method::Msp => Ok(MethodScores::plain(each(msp, -1.0), classifier)),
        Method::MaxLogit => Ok(MethodScores::plain(each(max_logit, -1.0), classifier)),
        Method::Energy => Ok(MethodScores::plain(each(energy, 1.0), classifier)),
        Method::SircL1 | Method::SircRes | Method::PluginBbL1 | Method::PluginBbRes => {
            let source = if matches!(method, Method::SircL1 | Method::PluginBbL1) {
                SircSource::L1
            } else {
                SircSource::Residual
            };
            let (ood, held) = oriented_ood(test, source, strict, opts.residual_dim)?;
            let params = SircParams::fit(&held, source)?;
            if matches!(method, Method::SircL1 | Method::SircRes) {
                let rejection = test
                    .iter()
                    .zip(&ood)
                    .map(|(r, o)| -sirc(msp(&r.logits), *o, &params))
                    .collect();
                return Ok(MethodScores::plain(rejection, classifier));
            }
            let inputs = test
                .iter()
                .zip(&ood)
                .zip(&classifier)
                .map(|((r, o), y)| PluginInputs {
                    s_sc: msp(&r.logits),
                    s_ood: (params.a2 * o + params.a3).exp(),
                    label: *y,
                })
                .collect();
            Ok(MethodScores::plugin(
                inputs,
                opts.c_fn,
                resolve_pi(opts, strict)?,
            ))
        }
        Method::PluginLb => {
            let mixture = mixture_from_strict(strict)?;
            let logits = ood_logits(test, "evaluation")?;
            let mut floored = 0;
            let mut inputs = Vec::with_capacity(test.len());
            for (r, s) in test.iter().zip(&logits) {
                let probs = softmax(&r.logits);
                let corrected = noise_correct((-s).exp(), mixture.pi_mix_hat)?;
                floored += usize::from(corrected.floored);
                inputs.push(PluginInputs {
                    s_sc: max_value(&probs),
                    s_ood: corrected.s_ood,
                    label: argmax(&probs),
                });
            }
            let pi = opts
                .pi_in_star
                .unwrap_or_else(|| clamp_pi(mixture.pi_mix_hat));
            let mut scores = MethodScores::plugin(inputs, opts.c_fn, pi);
            scores.mixture = Some(mixture);
            scores.floored = floored;
            Ok(scores)
        }
        Method::Coupled | Method::BayesOracle => Err(CliError::Config(format!(
            "method `{}` cannot be computed from a logits file",
            method.name()
        ))),
    }
}
