//! One seed of a synthetic experiment: sample, train, score.

use scod::distributions::{sample, sample_strict_inliers, Origin, Sample, ScodEnvironment, Source};
use scod::metrics::EvaluationSet;
use scod::numeric::{argmax, max_value};
use scod::par;
use scod::plugin_rejectors::PluginInputs;
use scod::scorer_models::{train, Architecture, Head, Objective, Scorer, ScorerModel};

use crate::config::{ExperimentConfig, Method};
use crate::error::{CliError, CliResult};
use crate::logits::{LogitsFile, Record};
use crate::methods::{clamp_pi, mixture_from_strict, score_records, MethodScores, ScoreOptions};

/// Independent sub-seed `k` of an experiment seed.
fn derive(seed: u64, k: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k)
}

pub struct SeedData {
    pub train_inliers: Vec<Sample>,
    pub wild: Vec<Sample>,
    pub test: Vec<Sample>,
    pub strict: Vec<Sample>,
}

pub fn draw(cfg: &ExperimentConfig, env: &ScodEnvironment, seed: u64) -> CliResult<SeedData> {
    let d = &cfg.data;
    Ok(SeedData {
        train_inliers: sample(env, Source::Inlier, d.train_inliers, derive(seed, 1)),
        wild: sample(env, Source::Wild, d.wild, derive(seed, 2)),
        test: sample(env, Source::Test, d.test, derive(seed, 3)),
        strict: sample_strict_inliers(env, cfg.strict_count(), derive(seed, 4), d.strict_mode)?
            .samples,
    })
}

fn fit(
    cfg: &ExperimentConfig,
    env: &ScodEnvironment,
    data: &SeedData,
    head: Head,
    objective: Objective,
    k: u64,
    seed: u64,
) -> CliResult<ScorerModel> {
    let arch = Architecture {
        input_dim: env.dim(),
        hidden_dim: cfg.model.hidden_dim,
        num_classes: env.num_classes(),
        head,
    };
    let model = ScorerModel::initialize(arch, derive(seed, 10 + k))?;
    let aux: &[Sample] = if objective == Objective::InlierCrossEntropy {
        &[]
    } else {
        &data.wild
    };
    if aux.is_empty() && objective != Objective::InlierCrossEntropy {
        return Err(CliError::Config(
            "the wild sample is empty but a method trains on it".into(),
        ));
    }
    Ok(train(
        model,
        &objective,
        &data.train_inliers,
        aux,
        &cfg.training,
        derive(seed, 20 + k),
    )?
    .model)
}

fn records(model: &ScorerModel, samples: &[Sample]) -> CliResult<Vec<Record>> {
    let l = model.num_classes();
    par::map(samples, |s| -> CliResult<Record> {
        let out = model.score(&s.features)?;
        if out
            .logits
            .iter()
            .chain(&out.embedding)
            .chain(out.ood_logit.as_ref())
            .any(|v| !v.is_finite())
        {
            return Err(CliError::Numeric(
                "scorer produced a non-finite output".into(),
            ));
        }
        Ok(Record {
            origin: s.origin,
            label: s.label,
            logits: out.logits[..l].to_vec(),
            ood_logit: out.ood_logit,
            embedding: out.embedding,
        })
    })
    .into_iter()
    .collect()
}

fn oracle_inputs(env: &ScodEnvironment, test: &[Sample]) -> CliResult<Vec<PluginInputs>> {
    par::map(test, |s| -> CliResult<PluginInputs> {
        let p = env.posterior(&s.features)?;
        let ratio = env.density_ratio(&s.features)?;
        let s_ood = if ratio == 0.0 {
            f64::INFINITY
        } else {
            1.0 / ratio
        };
        Ok(PluginInputs {
            s_sc: max_value(&p),
            s_ood,
            label: argmax(&p),
        })
    })
    .into_iter()
    .collect()
}

fn coupled_scores(model: &ScorerModel, test: &[Sample]) -> CliResult<MethodScores> {
    let l = model.num_classes();
    let outs = par::map(test, |s| model.score(&s.features))
        .into_iter()
        .collect::<scod::Result<Vec<_>>>()?;
    let rejection: Vec<f64> = outs
        .iter()
        .map(|o| o.logits[l] - max_value(&o.logits[..l]))
        .collect();
    let classifier = outs.iter().map(|o| argmax(&o.logits[..l])).collect();
    Ok(MethodScores {
        rejection,
        classifier,
        plugin: None,
        pi_in_star: None,
        mixture: None,
        floored: 0,
    })
}

pub struct SeedRun {
    pub seed: u64,
    pub eval: EvaluationSet,
    pub scores: Vec<(Method, MethodScores)>,
    /// Decoupled-scorer outputs on every sample, when exported.
    pub logits: Option<LogitsFile>,
}

pub fn run_seed(
    cfg: &ExperimentConfig,
    env: &ScodEnvironment,
    methods: &[Method],
    seed: u64,
) -> CliResult<SeedRun> {
    let data = draw(cfg, env, seed)?;
    let eval = EvaluationSet::from_samples(&data.test)?;
    let shared = cfg.model.shared_embedding;
    let decoupled = Head::Decoupled {
        shared_embedding: shared,
    };

    let classifier = if methods.iter().any(Method::uses_classifier) {
        Some(fit(
            cfg,
            env,
            &data,
            decoupled,
            Objective::InlierCrossEntropy,
            0,
            seed,
        )?)
    } else {
        None
    };
    let dc = if cfg.needs_decoupled() {
        Some(fit(
            cfg,
            env,
            &data,
            decoupled,
            Objective::Decoupled,
            1,
            seed,
        )?)
    } else {
        None
    };
    let cp = if methods.contains(&Method::Coupled) {
        let objective = Objective::Coupled {
            c_in: cfg.costs.c_in,
            c_out: cfg.costs.c_out,
        };
        Some(fit(cfg, env, &data, Head::Coupled, objective, 2, seed)?)
    } else {
        None
    };

    let dc_records = match &dc {
        Some(m) => Some((records(m, &data.test)?, records(m, &data.strict)?)),
        None => None,
    };
    let pi_in_star = match (cfg.budget.pi_in_star, &dc_records) {
        (Some(p), _) => Some(p),
        (None, Some((_, strict))) => Some(clamp_pi(mixture_from_strict(strict)?.pi_mix_hat)),
        (None, None) => None,
    };
    let opts = ScoreOptions {
        c_fn: cfg.c_fn,
        pi_in_star,
        residual_dim: cfg.sirc.residual_dim,
    };
    let cls_records = match &classifier {
        Some(m) => Some((records(m, &data.test)?, records(m, &data.strict)?)),
        None => None,
    };

    let mut scores = Vec::with_capacity(methods.len());
    for &method in methods {
        let s = match method {
            Method::Coupled => coupled_scores(cp.as_ref().expect("coupled model"), &data.test)?,
            Method::BayesOracle => {
                MethodScores::plugin(oracle_inputs(env, &data.test)?, cfg.c_fn, env.pi_in_star())
            }
            Method::PluginLb => {
                let (test, strict) = dc_records.as_ref().expect("decoupled records");
                score_records(method, test, strict, &opts)?
            }
            _ => {
                let (test, strict) = cls_records.as_ref().expect("classifier records");
                score_records(method, test, strict, &opts)?
            }
        };
        scores.push((method, s));
    }

    let logits = match (&dc, cfg.export_logits) {
        (Some(m), true) => {
            let mut all = records(m, &data.test)?;
            // Wild draws are unlabeled; their true component stays hidden.
            all.extend(records(m, &data.wild)?.into_iter().map(|r| Record {
                origin: Origin::Wild,
                label: None,
                ..r
            }));
            all.extend(records(m, &data.strict)?);
            Some(LogitsFile {
                num_classes: env.num_classes(),
                embedding_dim: m.architecture().embedding_dim(),
                records: all,
            })
        }
        _ => None,
    };
    Ok(SeedRun {
        seed,
        eval,
        scores,
        logits,
    })
}
