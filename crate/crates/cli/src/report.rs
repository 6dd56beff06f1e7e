use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use scod::metrics::{
    ood_detection_metrics, risk_coverage_curve, EvaluationSet, OodMetrics, RiskCoverageCurve,
};

use crate::error::{io_error, CliError, CliResult};
use crate::methods::MethodScores;

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub curve: RiskCoverageCurve,
    pub ood: OodMetrics,
}

pub fn evaluate(
    scores: &MethodScores,
    eval: &EvaluationSet,
    c_fn: f64,
    grid_size: usize,
) -> CliResult<Evaluation> {
    if scores.rejection.iter().any(|s| s.is_nan()) {
        return Err(CliError::Numeric("rejection score is NaN".into()));
    }
    let curve = risk_coverage_curve(eval, &scores.rejection, &scores.classifier, c_fn, grid_size)?;
    let (mut inl, mut out) = (Vec::new(), Vec::new());
    for (s, y) in scores.rejection.iter().zip(eval.labels()) {
        if y.is_some() {
            inl.push(*s)
        } else {
            out.push(*s)
        }
    }
    if inl.is_empty() || out.is_empty() {
        return Err(CliError::Data(
            "evaluation set needs both inliers and outliers".into(),
        ));
    }
    let ood = ood_detection_metrics(&inl, &out)?;
    Ok(Evaluation { curve, ood })
}

pub fn method_json(
    method: &str,
    seed: Option<u64>,
    scores: &MethodScores,
    e: &Evaluation,
) -> serde_json::Value {
    json!({
        "method": method,
        "seed": seed,
        "auc_rc": e.curve.auc_rc,
        "auc_roc": e.ood.auc_roc,
        "fpr_at_95tpr": e.ood.fpr_at_95tpr,
        "constant_score": e.curve.constant_score,
        "degenerate_points": e.curve.points.iter().filter(|p| p.degenerate).count(),
        "pi_in_star": scores.pi_in_star,
        "pi_mix_hat": scores.mixture.as_ref().map(|m| m.pi_mix_hat),
        "pi_mix_clamped": scores.mixture.as_ref().map(|m| m.clamped),
        "floored_ratios": scores.floored,
    })
}

/// One row per evaluation sample: truth (`-` for outliers), predicted
/// class and rejection score.
pub fn decisions_csv(eval: &EvaluationSet, scores: &MethodScores) -> String {
    let mut out = String::from("index,truth,prediction,rejection_score\n");
    for (i, ((y, h), s)) in eval
        .labels()
        .iter()
        .zip(&scores.classifier)
        .zip(&scores.rejection)
        .enumerate()
    {
        match y {
            Some(y) => writeln!(out, "{i},{y},{h},{s}").unwrap(),
            None => writeln!(out, "{i},-,{h},{s}").unwrap(),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MeanStd { mean, std }
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}
