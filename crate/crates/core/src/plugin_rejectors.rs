//! Plug-in estimators of the Bayes-optimal SCOD rule.
//!
//! The black-box rule combines any confidence score `s_sc` with any estimate
//! `s_ood` of `P_in(x)/P_out(x)`. The loss-based rule gets both from a
//! scorer trained with the decoupled loss on inliers and a wild mixture,
//! using a strictly-inlier sample to estimate the mixture weight and undo
//! the contamination. The coupled rule reads a reject logit directly.

use serde::Serialize;

use crate::bayes_rules::{BudgetSpec, CostSpec, Decision, RejectionWeights};
use crate::distributions::Sample;
use crate::metrics::{Counts, EvaluationSet};
use crate::numeric::{argmax, max_value, softmax};
use crate::scorer_models::{Head, Scorer, ScorerModel};
use crate::{par, Result, ScodError};

/// Upper clamp margin for the mixture-weight estimate.
pub const PI_MIX_CLAMP: f64 = 1e-6;
/// Floor for negative noise-corrected density ratios.
pub const RATIO_FLOOR: f64 = 1e-9;

/// A classifier plus rejector evaluated one sample at a time.
pub trait RejectionRule: Sync {
    fn decide(&self, x: &[f64]) -> Result<Decision>;

    fn decide_all(&self, xs: &[Vec<f64>]) -> Result<Vec<Decision>> {
        par::map(xs, |x| self.decide(x)).into_iter().collect()
    }
}

/// Per-sample plug-in quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PluginInputs {
    /// Confidence, canonically `max_y P̂_in(y|x)`.
    pub s_sc: f64,
    /// Estimate of `P_in(x)/P_out(x)`, positive or `+inf`.
    pub s_ood: f64,
    pub label: usize,
}

/// `ϑ(z) = −1/z`, with `ϑ(+inf) = 0` and `ϑ(0) = −inf`.
fn vartheta(z: f64) -> f64 {
    if z.is_infinite() {
        0.0
    } else if z == 0.0 {
        f64::NEG_INFINITY
    } else {
        -1.0 / z
    }
}

/// `t_BB = 1 − 2·c_in − c_out`.
pub fn black_box_threshold(costs: &CostSpec) -> f64 {
    1.0 - 2.0 * costs.c_in() - costs.c_out()
}

/// Black-box rejector: abstain iff
/// `(1 − c_in − c_out) · s_sc + c_out · ϑ(s_ood) < t_BB`.
///
/// The decision's rejection score is the negated left-hand side and its
/// threshold `−t_BB`.
pub fn black_box_reject(inputs: &PluginInputs, costs: &CostSpec) -> Result<Decision> {
    if inputs.s_ood.is_nan() || inputs.s_ood < 0.0 {
        return Err(ScodError::InvalidInput(format!(
            "s_ood must be positive, got {}",
            inputs.s_ood
        )));
    }
    let ood = if costs.c_out() == 0.0 {
        0.0
    } else {
        costs.c_out() * vartheta(inputs.s_ood)
    };
    let lhs = costs.error_weight() * inputs.s_sc + ood;
    Ok(Decision::from_score(
        -lhs,
        -black_box_threshold(costs),
        Some(inputs.label),
    ))
}

/// The general weighted rule on plug-in inputs:
/// abstain iff `w_err · (1 − s_sc) + w_out / s_ood > w_in`.
pub fn weighted_plugin_reject(inputs: &PluginInputs, weights: &RejectionWeights) -> Decision {
    let ratio = if inputs.s_ood.is_infinite() {
        0.0
    } else {
        1.0 / inputs.s_ood
    };
    Decision::from_score(
        weights.score(inputs.s_sc, ratio),
        weights.w_in,
        Some(inputs.label),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureEstimate {
    pub pi_mix_hat: f64,
    /// `exp(−ŝ(x))` for each strictly-inlier sample.
    pub values: Vec<f64>,
    /// The raw mean fell outside `[0, 1 − 1e-6]`.
    pub clamped: bool,
}

/// `π̂_mix = mean exp(−ŝ(x))` over the strictly-inlier set, clamped into
/// `[0, 1 − 1e-6]`.
pub fn estimate_pi_mix(ood_logits: &[f64]) -> Result<MixtureEstimate> {
    if ood_logits.is_empty() {
        return Err(ScodError::EmptyInput("strict-inlier set"));
    }
    let values: Vec<f64> = ood_logits.iter().map(|s| (-s).exp()).collect();
    let raw = values.iter().sum::<f64>() / values.len() as f64;
    if raw.is_nan() {
        return Err(ScodError::InvalidInput("OOD logit is NaN".into()));
    }
    let pi = raw.clamp(0.0, 1.0 - PI_MIX_CLAMP);
    Ok(MixtureEstimate {
        pi_mix_hat: pi,
        clamped: pi != raw,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectedRatio {
    /// `P_out(x)/P_in(x)` after correction (floored when negative).
    pub ratio_out_in: f64,
    /// `1 / ratio_out_in`, the black-box `s_ood`.
    pub s_ood: f64,
    pub floored: bool,
}

/// Removes inlier contamination from a mixture ratio:
/// `P_out/P_in = (P_mix/P_in − π_mix) / (1 − π_mix)`.
pub fn noise_correct(p_mix_over_p_in: f64, pi_mix: f64) -> Result<CorrectedRatio> {
    if !(0.0..1.0).contains(&pi_mix) {
        return Err(ScodError::InvalidInput(format!(
            "pi_mix must lie in [0, 1), got {pi_mix}"
        )));
    }
    if p_mix_over_p_in.is_nan() || p_mix_over_p_in < 0.0 {
        return Err(ScodError::InvalidInput(format!(
            "mixture ratio must be non-negative, got {p_mix_over_p_in}"
        )));
    }
    let ratio = (p_mix_over_p_in - pi_mix) / (1.0 - pi_mix);
    Ok(if ratio < 0.0 {
        CorrectedRatio {
            ratio_out_in: RATIO_FLOOR,
            s_ood: 1.0 / RATIO_FLOOR,
            floored: true,
        }
    } else if ratio == 0.0 {
        CorrectedRatio {
            ratio_out_in: 0.0,
            s_ood: f64::INFINITY,
            floored: false,
        }
    } else {
        CorrectedRatio {
            ratio_out_in: ratio,
            s_ood: 1.0 / ratio,
            floored: false,
        }
    })
}

/// The loss-based plug-in rule: class probabilities from `f`, the
/// noise-corrected ratio from `s`, combined by the black-box rejector.
#[derive(Debug, Clone)]
pub struct LossBasedRule<S> {
    scorer: S,
    costs: CostSpec,
    mixture: MixtureEstimate,
}

impl<S: Scorer> LossBasedRule<S> {
    /// Estimates `π_mix` from `strict_inliers` and builds the rule.
    pub fn new(scorer: S, strict_inliers: &[Sample], costs: CostSpec) -> Result<Self> {
        let logits = par::map(strict_inliers, |s| {
            scorer
                .score(&s.features)?
                .ood_logit
                .ok_or_else(|| ScodError::InvalidConfiguration("scorer has no OOD logit".into()))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let mixture = estimate_pi_mix(&logits)?;
        Ok(Self {
            scorer,
            costs,
            mixture,
        })
    }

    pub fn with_mixture(scorer: S, mixture: MixtureEstimate, costs: CostSpec) -> Self {
        Self {
            scorer,
            costs,
            mixture,
        }
    }

    pub fn mixture(&self) -> &MixtureEstimate {
        &self.mixture
    }

    pub fn costs(&self) -> &CostSpec {
        &self.costs
    }

    pub fn scorer(&self) -> &S {
        &self.scorer
    }

    /// Plug-in inputs at `x`, plus whether the ratio floor fired.
    pub fn inputs(&self, x: &[f64]) -> Result<(PluginInputs, bool)> {
        let out = self.scorer.score(x)?;
        let probs = softmax(&out.logits[..self.scorer.num_classes()]);
        let s = out
            .ood_logit
            .ok_or_else(|| ScodError::InvalidConfiguration("scorer has no OOD logit".into()))?;
        let corrected = noise_correct((-s).exp(), self.mixture.pi_mix_hat)?;
        Ok((
            PluginInputs {
                s_sc: max_value(&probs),
                s_ood: corrected.s_ood,
                label: argmax(&probs),
            },
            corrected.floored,
        ))
    }
}

impl<S: Scorer> RejectionRule for LossBasedRule<S> {
    fn decide(&self, x: &[f64]) -> Result<Decision> {
        black_box_reject(&self.inputs(x)?.0, &self.costs)
    }
}

/// Rejects iff the reject-class softmax output beats every class output,
/// i.e. `f_⊥(x) > max_y f_y(x)`. Ties accept.
#[derive(Debug, Clone)]
pub struct CoupledRule<'a> {
    model: &'a ScorerModel,
}

impl<'a> CoupledRule<'a> {
    pub fn new(model: &'a ScorerModel) -> Result<Self> {
        if model.architecture().head != Head::Coupled {
            return Err(ScodError::InvalidConfiguration(
                "coupled rule needs a coupled head".into(),
            ));
        }
        Ok(Self { model })
    }
}

/// Coupled decision from `L + 1` logits, the reject logit last.
pub fn coupled_reject(logits: &[f64]) -> Result<Decision> {
    if logits.len() < 2 {
        return Err(ScodError::InvalidInput(
            "coupled rule needs at least one class logit and a reject logit".into(),
        ));
    }
    let (classes, reject) = logits.split_at(logits.len() - 1);
    let best = max_value(classes);
    let score = if reject[0] == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        reject[0] - best
    };
    Ok(Decision::from_score(score, 0.0, Some(argmax(classes))))
}

impl RejectionRule for CoupledRule<'_> {
    fn decide(&self, x: &[f64]) -> Result<Decision> {
        coupled_reject(&self.model.forward(x)?.logits)
    }
}

/// One point of the Lagrangian sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LagrangianPoint {
    pub lambda: f64,
    pub weights: RejectionWeights,
    /// `λ·(1 − π*_in) − λ·b_rej`, the constant dropped from the objective.
    pub nu: f64,
    pub abstention: f64,
    /// `(1 − c_fn)·P̂_in(error, accept) + c_fn·P̂_out(accept)`.
    pub objective: f64,
    pub feasible: bool,
    /// `c_fn − λ·(1 − π*_in) < 0`.
    pub negative_outlier_weight: bool,
}

/// Weights `(1 − c_fn, λ·π*_in, c_fn − λ·(1 − π*_in))` for multiplier `λ`.
pub fn lagrangian_weights(budget: &BudgetSpec, lambda: f64) -> RejectionWeights {
    RejectionWeights {
        w_err: 1.0 - budget.c_fn,
        w_in: lambda * budget.pi_in_star,
        w_out: budget.c_fn - lambda * (1.0 - budget.pi_in_star),
    }
}

/// Zero plus 41 geometric points up to `4·c_fn / (1 − π*_in)`.
pub fn default_lambda_grid(budget: &BudgetSpec) -> Vec<f64> {
    let scale = if budget.c_fn > 0.0 { budget.c_fn } else { 1.0 };
    let upper = 4.0 * scale / (1.0 - budget.pi_in_star);
    let lower = upper * 1e-4;
    let steps = 40;
    let mut grid = vec![0.0];
    grid.extend((0..=steps).map(|i| lower * (upper / lower).powf(i as f64 / steps as f64)));
    grid
}

/// Rejection score whose level sets are the Lagrangian rules: the rule with
/// multiplier `λ` abstains exactly when
/// `[(1 − c_fn)(1 − s_sc) + c_fn·r] / [π*_in + (1 − π*_in)·r] > λ`,
/// where `r = 1/s_ood`. Sweeping a threshold over this score traces the
/// plug-in risk-coverage curve.
pub fn budget_rejection_score(inputs: &PluginInputs, c_fn: f64, pi_in_star: f64) -> f64 {
    let r = if inputs.s_ood.is_infinite() {
        0.0
    } else {
        1.0 / inputs.s_ood
    };
    if r.is_infinite() {
        return c_fn / (1.0 - pi_in_star);
    }
    ((1.0 - c_fn) * (1.0 - inputs.s_sc) + c_fn * r) / (pi_in_star + (1.0 - pi_in_star) * r)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetSearch {
    pub best: LagrangianPoint,
    pub best_index: usize,
    /// False when no grid point met the budget; `best` then minimises the
    /// budget violation.
    pub feasible: bool,
    pub points: Vec<LagrangianPoint>,
}

/// Outcome counts of the weighted plug-in rule on an evaluation set.
pub fn weighted_counts(
    inputs: &[PluginInputs],
    eval: &EvaluationSet,
    weights: &RejectionWeights,
) -> Result<Counts> {
    let preds: Vec<Option<usize>> = inputs
        .iter()
        .map(|i| weighted_plugin_reject(i, weights).prediction())
        .collect();
    Counts::tally(eval, &preds)
}

/// `(1 − c_fn)·P̂_in(error, accept) + c_fn·P̂_out(accept)` with each
/// probability normalised by its own set size.
pub fn budget_objective(counts: &Counts, c_fn: f64) -> f64 {
    let n_in = (counts.accepted_inlier_correct
        + counts.accepted_inlier_wrong
        + counts.abstained_inlier) as f64;
    let n_out = (counts.accepted_outlier + counts.abstained_outlier) as f64;
    let err = if n_in > 0.0 {
        counts.accepted_inlier_wrong as f64 / n_in
    } else {
        0.0
    };
    let fna = if n_out > 0.0 {
        counts.accepted_outlier as f64 / n_out
    } else {
        0.0
    };
    (1.0 - c_fn) * err + c_fn * fna
}

/// Evaluates the weighted plug-in rule at each `λ` and returns the feasible
/// point with the smallest objective (earliest on ties). Plug-in inputs are
/// computed once by the caller and shared across the grid.
pub fn budget_search(
    inputs: &[PluginInputs],
    eval: &EvaluationSet,
    budget: &BudgetSpec,
    lambda_grid: &[f64],
) -> Result<BudgetSearch> {
    if lambda_grid.is_empty() {
        return Err(ScodError::EmptyInput("lambda grid"));
    }
    if lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(ScodError::InvalidConfiguration(
            "lambda values must be finite and non-negative".into(),
        ));
    }
    if inputs.len() != eval.len() {
        return Err(ScodError::DimensionMismatch {
            expected: eval.len(),
            actual: inputs.len(),
        });
    }
    let points = par::map(lambda_grid, |&lambda| -> Result<LagrangianPoint> {
        let weights = lagrangian_weights(budget, lambda);
        let counts = weighted_counts(inputs, eval, &weights)?;
        let abstention = counts.abstention_rate();
        Ok(LagrangianPoint {
            lambda,
            weights,
            nu: lambda * (1.0 - budget.pi_in_star) - lambda * budget.b_rej,
            abstention,
            objective: budget_objective(&counts, budget.c_fn),
            feasible: abstention <= budget.b_rej,
            negative_outlier_weight: weights.w_out < 0.0,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let pick = |better: &dyn Fn(&LagrangianPoint, &LagrangianPoint) -> bool,
                only_feasible: bool| {
        let mut best: Option<usize> = None;
        for (i, p) in points.iter().enumerate() {
            if only_feasible && !p.feasible {
                continue;
            }
            if best.is_none_or(|b| better(p, &points[b])) {
                best = Some(i);
            }
        }
        best
    };
    let (idx, feasible) = match pick(&|a, b| a.objective < b.objective, true) {
        Some(i) => (i, true),
        None => (
            pick(&|a, b| a.abstention < b.abstention, false).unwrap_or(0),
            false,
        ),
    };
    Ok(BudgetSearch {
        best: points[idx],
        best_index: idx,
        feasible,
        points,
    })
}

/// Empirical quantities of the constrained formulation that minimises
/// outlier acceptance subject to caps on inlier abstention (`κ`) and
/// accepted inlier error (`τ`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KatzSamuelsReport {
    /// `P̂_out(accept)`, the objective.
    pub outlier_acceptance: f64,
    /// `P̂_in(abstain)`.
    pub inlier_abstention: f64,
    /// `P̂_in(error, accept)`.
    pub inlier_error: f64,
    pub feasible: bool,
}

pub fn katz_samuels_objective(
    eval: &EvaluationSet,
    predictions: &[Option<usize>],
    kappa: f64,
    tau: f64,
) -> Result<KatzSamuelsReport> {
    let c = Counts::tally(eval, predictions)?;
    let n_in = eval.num_inliers();
    let n_out = eval.num_outliers();
    if n_in == 0 || n_out == 0 {
        return Err(ScodError::EmptyInput("inlier or outlier evaluation set"));
    }
    let inlier_abstention = c.abstained_inlier as f64 / n_in as f64;
    let inlier_error = c.accepted_inlier_wrong as f64 / n_in as f64;
    Ok(KatzSamuelsReport {
        outlier_acceptance: c.accepted_outlier as f64 / n_out as f64,
        inlier_abstention,
        inlier_error,
        feasible: inlier_abstention <= kappa && inlier_error <= tau,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KatzSamuelsSearch {
    pub best_index: usize,
    pub feasible: bool,
    pub reports: Vec<KatzSamuelsReport>,
}

/// Runs the constrained formulation over a family of cost settings of the
/// black-box rule, mirroring [`budget_search`].
pub fn katz_samuels_search(
    inputs: &[PluginInputs],
    eval: &EvaluationSet,
    cost_grid: &[CostSpec],
    kappa: f64,
    tau: f64,
) -> Result<KatzSamuelsSearch> {
    if cost_grid.is_empty() {
        return Err(ScodError::EmptyInput("cost grid"));
    }
    let reports = par::map(cost_grid, |costs| -> Result<KatzSamuelsReport> {
        let preds = inputs
            .iter()
            .map(|i| black_box_reject(i, costs).map(|d| d.prediction()))
            .collect::<Result<Vec<_>>>()?;
        katz_samuels_objective(eval, &preds, kappa, tau)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let violation = |r: &KatzSamuelsReport| {
        (r.inlier_abstention - kappa).max(0.0) + (r.inlier_error - tau).max(0.0)
    };
    let mut best: Option<usize> = None;
    for (i, r) in reports.iter().enumerate() {
        if r.feasible && best.is_none_or(|b| r.outlier_acceptance < reports[b].outlier_acceptance) {
            best = Some(i);
        }
    }
    let feasible = best.is_some();
    let best_index = best.unwrap_or_else(|| {
        let mut b = 0;
        for (i, r) in reports.iter().enumerate() {
            if violation(r) < violation(&reports[b]) {
                b = i;
            }
        }
        b
    });
    Ok(KatzSamuelsSearch {
        best_index,
        feasible,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes_rules::{chow_rule, scod_bayes};
    use rand::Rng;

    #[test]
    fn black_box_hand_example() {
        let costs = CostSpec::new(0.2, 0.3).unwrap();
        let d = black_box_reject(
            &PluginInputs {
                s_sc: 0.9,
                s_ood: 1.5,
                label: 0,
            },
            &costs,
        )
        .unwrap();
        assert!((-d.rejection_score - 0.25).abs() < 1e-15);
        assert!((-d.threshold - 0.3).abs() < 1e-15);
        assert!(d.abstain);
    }

    #[test]
    fn black_box_boundaries() {
        let costs = CostSpec::new(0.2, 0.3).unwrap();
        let zero = black_box_reject(
            &PluginInputs {
                s_sc: 1.0,
                s_ood: 0.0,
                label: 0,
            },
            &costs,
        )
        .unwrap();
        assert!(zero.abstain);
        let chow_only = CostSpec::new(0.2, 0.0).unwrap();
        let d = black_box_reject(
            &PluginInputs {
                s_sc: 1.0,
                s_ood: 0.0,
                label: 0,
            },
            &chow_only,
        )
        .unwrap();
        assert!(!d.abstain);
        let mut rng = crate::distributions::stream_rng(1, 0);
        for _ in 0..10_000 {
            let a: f64 = rng.random();
            let post = [a, 1.0 - a];
            let c_in = rng.random::<f64>() * 0.9;
            let bb = black_box_reject(
                &PluginInputs {
                    s_sc: a.max(1.0 - a),
                    s_ood: f64::INFINITY,
                    label: 0,
                },
                &CostSpec::new(c_in, 0.0).unwrap(),
            )
            .unwrap();
            assert_eq!(bb.abstain, chow_rule(&post, c_in).unwrap().abstain);
        }
    }

    #[test]
    fn black_box_matches_bayes_on_exact_inputs() {
        let mut rng = crate::distributions::stream_rng(2, 0);
        for _ in 0..10_000 {
            let a: f64 = rng.random();
            let post = [a, 1.0 - a];
            let ratio = (rng.random::<f64>() * 10.0 - 5.0).exp();
            let c_in = rng.random::<f64>() * 0.5;
            let c_out = rng.random::<f64>() * 0.5;
            let costs = CostSpec::new(c_in, c_out).unwrap();
            let bb = black_box_reject(
                &PluginInputs {
                    s_sc: a.max(1.0 - a),
                    s_ood: 1.0 / ratio,
                    label: 0,
                },
                &costs,
            )
            .unwrap();
            assert_eq!(
                bb.abstain,
                scod_bayes(&post, ratio, &costs).unwrap().abstain
            );
        }
    }

    #[test]
    fn pi_mix_examples() {
        let e = estimate_pi_mix(&[-(0.3f64.ln()); 4]).unwrap();
        assert!((e.pi_mix_hat - 0.3).abs() < 1e-15);
        let e = estimate_pi_mix(&[-(0.2f64.ln()), -(0.4f64.ln())]).unwrap();
        assert!((e.pi_mix_hat - 0.3).abs() < 1e-15 && !e.clamped);
        let e = estimate_pi_mix(&[-1.0]).unwrap();
        assert!(e.clamped && e.pi_mix_hat == 1.0 - PI_MIX_CLAMP);
        assert!(estimate_pi_mix(&[]).is_err());
    }

    #[test]
    fn noise_correction_examples() {
        let c = noise_correct(0.5, 0.5).unwrap();
        assert_eq!((c.ratio_out_in, c.s_ood), (0.0, f64::INFINITY));
        let c = noise_correct(0.8, 0.5).unwrap();
        assert!((c.ratio_out_in - 0.6).abs() < 1e-15 && (c.s_ood - 5.0 / 3.0).abs() < 1e-14);
        let c = noise_correct(0.1, 0.5).unwrap();
        assert!(c.floored && (c.s_ood - 1e9).abs() < 1e-3);
        assert!(noise_correct(1.0, 1.0).is_err());
        let c = noise_correct(0.7, 0.0).unwrap();
        assert!((c.ratio_out_in - 0.7).abs() < 1e-15);
    }

    #[test]
    fn coupled_examples() {
        assert!(
            !coupled_reject(&[0.3, 0.1, f64::NEG_INFINITY])
                .unwrap()
                .abstain
        );
        assert!(!coupled_reject(&[0.0, 0.0, 0.0]).unwrap().abstain);
        let d = coupled_reject(&[0.0, 0.0, 1.0]).unwrap();
        assert!(d.abstain);
    }

    #[test]
    fn default_grid_shape() {
        let b = BudgetSpec::new(0.75, 0.2, 0.5).unwrap();
        let g = default_lambda_grid(&b);
        assert_eq!(g.len(), 42);
        assert_eq!(g[0], 0.0);
        assert!((g[41] - 6.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn lambda_zero_weights() {
        let b = BudgetSpec::new(0.0, 0.2, 0.5).unwrap();
        let w = lagrangian_weights(&b, 0.0);
        assert_eq!((w.w_err, w.w_in, w.w_out), (1.0, 0.0, 0.0));
        // Zero abstention weight: any confidence below one abstains.
        let d = weighted_plugin_reject(
            &PluginInputs {
                s_sc: 0.99,
                s_ood: 1.0,
                label: 0,
            },
            &w,
        );
        assert!(d.abstain);
        let d = weighted_plugin_reject(
            &PluginInputs {
                s_sc: 1.0,
                s_ood: 1.0,
                label: 0,
            },
            &w,
        );
        assert!(!d.abstain);
    }

    #[test]
    fn katz_samuels_extremes() {
        let eval = EvaluationSet::new(vec![Some(0), Some(1), None]).unwrap();
        let r = katz_samuels_objective(&eval, &[None, None, None], 0.5, 1.0).unwrap();
        assert_eq!(
            (r.outlier_acceptance, r.inlier_abstention, r.feasible),
            (0.0, 1.0, false)
        );
        assert!(
            katz_samuels_objective(&eval, &[None, None, None], 1.0, 1.0)
                .unwrap()
                .feasible
        );
        let r = katz_samuels_objective(&eval, &[Some(0), Some(1), Some(0)], 0.0, 0.0).unwrap();
        assert_eq!(r.outlier_acceptance, 1.0);
    }
}
