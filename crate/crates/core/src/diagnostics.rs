//! Monte-Carlo checks of the estimation-error bounds, comparing learned
//! scorers against exact environment quantities.
//!
//! Each check reports a left-hand side, a right-hand side and a standard
//! error, and passes when `lhs ≤ rhs + 3·se`.

use serde::Serialize;

use crate::bayes_rules::{scod_bayes, CostSpec};
use crate::distributions::{Sample, ScodEnvironment};
use crate::numeric::{argmax, max_value, mean_and_se, sigmoid};
use crate::plugin_rejectors::{black_box_reject, PluginInputs};
use crate::scorer_models::Scorer;
use crate::{par, Result, ScodError};

/// Tolerance in standard errors.
pub const SE_SLACK: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// Standard error of `lhs − rhs`.
    pub se: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(lhs: f64, rhs: f64, se: f64) -> Self {
        Self {
            lhs,
            rhs,
            se,
            holds: lhs <= rhs + SE_SLACK * se,
        }
    }
}

/// Which density the OOD logit was trained to separate from `P_in`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ContrastDensity {
    Outlier,
    Mixture,
}

impl ContrastDensity {
    fn log_density(&self, env: &ScodEnvironment, x: &[f64]) -> f64 {
        match self {
            ContrastDensity::Outlier => env.log_p_out(x),
            ContrastDensity::Mixture => env.log_p_mix(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PosteriorRegretReport {
    /// `E_in Σ_y |p_y − P_in(y|x)| ≤ √2 · √(excess cross-entropy)`.
    pub multiclass: BoundCheck,
    /// `E_* |p_⊥ − γ| ≤ (1/√2) · √(excess binary cross-entropy)`.
    pub binary: BoundCheck,
    pub excess_multiclass_risk: f64,
    pub excess_binary_risk: f64,
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a.ln() - b.ln()))
        .sum()
}

/// `√(c·m)` with a delta-method standard error.
fn sqrt_bound(c: f64, mean: f64, se: f64) -> (f64, f64) {
    let value = (c * mean.max(0.0)).sqrt();
    let se = if value > 0.0 {
        c * se / (2.0 * value)
    } else {
        0.0
    };
    (value, se)
}

/// Checks both estimation-error bounds of the decoupled loss. Excess risks
/// are computed conditionally on `x` (as KL divergences against the exact
/// posteriors), which removes label noise from the Monte-Carlo estimate.
///
/// `inliers` are draws from `P_in`; `contrast` are draws from the density
/// the OOD logit was trained against. The binary bound is evaluated under
/// the equal-weight pooling of the two.
pub fn posterior_regret_report<S: Scorer>(
    scorer: &S,
    env: &ScodEnvironment,
    inliers: &[Sample],
    contrast: &[Sample],
    contrast_density: ContrastDensity,
) -> Result<PosteriorRegretReport> {
    if inliers.is_empty() || contrast.is_empty() {
        return Err(ScodError::EmptyInput("regret samples"));
    }
    let mc = par::map(inliers, |s| -> Result<(f64, f64)> {
        let est = scorer.probability_estimates(&s.features)?;
        let exact = env.posterior(&s.features)?;
        let l1 = est
            .class_probs
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok((l1, kl(&exact, &est.class_probs)))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let pooled: Vec<&Sample> = inliers.iter().chain(contrast).collect();
    let bin = par::map(&pooled, |s| -> Result<(f64, f64)> {
        let est = scorer.score(&s.features)?;
        let logit = est
            .ood_logit
            .ok_or_else(|| ScodError::InvalidConfiguration("scorer has no OOD logit".into()))?;
        let p = sigmoid(logit);
        let log_in = env.log_p_in(&s.features);
        let log_c = contrast_density.log_density(env, &s.features);
        let gamma = sigmoid(log_in - log_c);
        Ok(((p - gamma).abs(), kl(&[gamma, 1.0 - gamma], &[p, 1.0 - p])))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let check = |pairs: &[(f64, f64)], c: f64| {
        let gaps: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let excess: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let (gap, gap_se) = mean_and_se(&gaps);
        let (ex, ex_se) = mean_and_se(&excess);
        let (rhs, rhs_se) = sqrt_bound(c, ex, ex_se);
        (
            BoundCheck::new(gap, rhs, (gap_se * gap_se + rhs_se * rhs_se).sqrt()),
            ex,
        )
    };
    let (multiclass, excess_multiclass_risk) = check(&mc, 2.0);
    let (binary, excess_binary_risk) = check(&bin, 0.5);
    Ok(PosteriorRegretReport {
        multiclass,
        binary,
        excess_multiclass_risk,
        excess_binary_risk,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlackBoxRegretReport {
    /// Soft-penalty risk of the plug-in rule minus that of the Bayes rule.
    pub regret: f64,
    /// `2 · E_* [Σ_y |P_in(y|x) − P̂_in(y|x)| + 2 · |γ(x) − γ̂(x)|]`.
    pub bound: f64,
    pub check: BoundCheck,
}

/// Regret of a black-box plug-in rule against the Bayes rule, with the
/// estimation-error bound, both under the equal-weight pooling `P*` of
/// `P_in` and `P_out`.
///
/// With `γ = P_in/(P_in + P_out)` the soft-penalty risk is
/// `E_* [2γ·a(x) + 2(1 − γ)·b(x)]`, where `a` is the expected inlier cost
/// given `x` and `b` the outlier cost. Both sides are averaged per sample, so
/// the standard error is that of the paired difference.
///
/// `estimates(x)` returns the estimated class posterior and `s_ood`, the
/// estimate of `P_in(x)/P_out(x)`.
pub fn black_box_regret_report<F>(
    env: &ScodEnvironment,
    costs: &CostSpec,
    inliers: &[Sample],
    outliers: &[Sample],
    estimates: F,
) -> Result<BlackBoxRegretReport>
where
    F: Fn(&[f64]) -> Result<(Vec<f64>, f64)> + Sync,
{
    if inliers.is_empty() || outliers.is_empty() || inliers.len() != outliers.len() {
        return Err(ScodError::InvalidInput(
            "need equally many inlier and outlier samples".into(),
        ));
    }
    let pooled: Vec<&Sample> = inliers.iter().chain(outliers).collect();
    let w_err = costs.error_weight();
    let terms = par::map(&pooled, |s| -> Result<(f64, f64)> {
        let x = &s.features;
        let exact = env.posterior(x)?;
        let ratio = env.density_ratio(x)?;
        let gamma = sigmoid(env.log_p_in(x) - env.log_p_out(x));
        let (probs, s_ood) = estimates(x)?;
        let bayes = scod_bayes(&exact, ratio, costs)?;
        let plug = black_box_reject(
            &PluginInputs {
                s_sc: max_value(&probs),
                s_ood,
                label: argmax(&probs),
            },
            costs,
        )?;
        let cost = |abstain: bool, label: Option<usize>| -> (f64, f64) {
            if abstain {
                (costs.c_in(), 0.0)
            } else {
                let correct = label.map_or(0.0, |y| exact[y]);
                (w_err * (1.0 - correct), costs.c_out())
            }
        };
        let (a_hat, b_hat) = cost(plug.abstain, plug.label);
        let (a_star, b_star) = cost(bayes.abstain, bayes.label);
        let regret = 2.0 * gamma * (a_hat - a_star) + 2.0 * (1.0 - gamma) * (b_hat - b_star);
        let gamma_hat = if s_ood.is_infinite() {
            1.0
        } else {
            s_ood / (1.0 + s_ood)
        };
        let l1: f64 = exact.iter().zip(&probs).map(|(a, b)| (a - b).abs()).sum();
        Ok((regret, 2.0 * (l1 + 2.0 * (gamma - gamma_hat).abs())))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let regrets: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let bounds: Vec<f64> = terms.iter().map(|t| t.1).collect();
    let diffs: Vec<f64> = terms.iter().map(|t| t.0 - t.1).collect();
    let (regret, _) = mean_and_se(&regrets);
    let (bound, _) = mean_and_se(&bounds);
    let (_, se) = mean_and_se(&diffs);
    Ok(BlackBoxRegretReport {
        regret,
        bound,
        check: BoundCheck::new(regret, bound, se),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{
        sample, Density, GaussianClassConditional, LabeledMixtureDistribution, Source,
    };
    use crate::scorer_models::OracleScorer;

    fn env() -> ScodEnvironment {
        let inlier =
            LabeledMixtureDistribution::isotropic_equal_priors(vec![vec![-2.0], vec![2.0]], 1.0)
                .unwrap();
        let outlier =
            Density::Gaussian(GaussianClassConditional::isotropic(vec![4.0], 1.0).unwrap());
        ScodEnvironment::new(inlier, outlier, 0.5, 0.5).unwrap()
    }

    #[test]
    fn oracle_has_zero_regret() {
        let e = env();
        let inl = sample(&e, Source::Inlier, 2000, 1);
        let mix = sample(&e, Source::Wild, 2000, 2);
        let r = posterior_regret_report(
            &OracleScorer::new(&e),
            &e,
            &inl,
            &mix,
            ContrastDensity::Mixture,
        )
        .unwrap();
        assert!(r.multiclass.lhs < 1e-12 && r.binary.lhs < 1e-12);
        assert!(r.excess_multiclass_risk.abs() < 1e-12);

        let out = sample(&e, Source::Outlier, 2000, 3);
        let costs = CostSpec::new(0.2, 0.3).unwrap();
        let bb = black_box_regret_report(&e, &costs, &inl, &out, |x| {
            Ok((e.posterior(x)?, 1.0 / e.density_ratio(x)?))
        })
        .unwrap();
        assert!(bb.regret.abs() < 1e-12 && bb.bound < 1e-9 && bb.check.holds);
    }

    #[test]
    fn crude_estimates_respect_bounds() {
        let e = env();
        let inl = sample(&e, Source::Inlier, 3000, 4);
        let out = sample(&e, Source::Outlier, 3000, 5);
        let costs = CostSpec::new(0.2, 0.3).unwrap();
        // Flattened posterior and a ratio off by a factor of three.
        let bb = black_box_regret_report(&e, &costs, &inl, &out, |x| {
            let p = e.posterior(x)?;
            Ok((
                p.iter().map(|v| 0.5 * v + 0.25).collect(),
                3.0 / e.density_ratio(x)?,
            ))
        })
        .unwrap();
        assert!(bb.regret > 0.0);
        assert!(bb.check.holds, "{bb:?}");
    }
}
