//! Closed-form Bayes-optimal rules for selective classification, OOD
//! detection, their combination and the open-set special case.
//!
//! Every rule returns a [`Decision`] that abstains iff its rejection score
//! is strictly greater than its threshold; boundary ties accept.

use serde::Serialize;

use crate::numeric::{argmax, max_value};
use crate::{Result, ScodError};

/// Abstention costs of the soft-penalty SCOD risk: `c_in` is paid for
/// abstaining on an inlier, `c_out` for accepting an outlier, and
/// misclassified accepted inliers cost `1 − c_in − c_out`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostSpec {
    c_in: f64,
    c_out: f64,
}

impl CostSpec {
    pub fn new(c_in: f64, c_out: f64) -> Result<Self> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(c_in) || !unit(c_out) {
            return Err(ScodError::InvalidCost(format!(
                "costs must lie in [0, 1], got c_in={c_in}, c_out={c_out}"
            )));
        }
        if c_in + c_out > 1.0 + 1e-12 {
            return Err(ScodError::InvalidCost(format!(
                "c_in + c_out = {} exceeds 1",
                c_in + c_out
            )));
        }
        Ok(Self { c_in, c_out })
    }

    pub fn c_in(&self) -> f64 {
        self.c_in
    }

    pub fn c_out(&self) -> f64 {
        self.c_out
    }

    /// `1 − c_in − c_out`, clamped at zero against rounding.
    pub fn error_weight(&self) -> f64 {
        ((1.0 - self.c_in) - self.c_out).max(0.0)
    }

    pub fn weights(&self) -> RejectionWeights {
        RejectionWeights {
            w_err: self.error_weight(),
            w_in: self.c_in,
            w_out: self.c_out,
        }
    }
}

/// Budget form of the SCOD objective: weight `c_fn` on accepted outliers,
/// `1 − c_fn` on accepted misclassified inliers, subject to an abstention
/// budget `b_rej` under a test inlier fraction `π*_in`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetSpec {
    pub c_fn: f64,
    pub b_rej: f64,
    pub pi_in_star: f64,
}

impl BudgetSpec {
    pub fn new(c_fn: f64, b_rej: f64, pi_in_star: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c_fn) || !(0.0..=1.0).contains(&b_rej) {
            return Err(ScodError::InvalidCost(format!(
                "c_fn and b_rej must lie in [0, 1], got {c_fn}, {b_rej}"
            )));
        }
        if !(pi_in_star > 0.0 && pi_in_star < 1.0) {
            return Err(ScodError::InvalidCost(format!(
                "pi_in_star must lie in (0, 1), got {pi_in_star}"
            )));
        }
        Ok(Self {
            c_fn,
            b_rej,
            pi_in_star,
        })
    }
}

/// Unnormalised weights of the general rule
/// `w_err · (1 − max_y P(y|x)) + w_out · P_out(x)/P_in(x) > w_in`.
///
/// The rule is invariant to scaling all three weights by a positive
/// constant, so they need not satisfy `w_in + w_out ≤ 1`. A negative
/// `w_out` is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RejectionWeights {
    pub w_err: f64,
    pub w_in: f64,
    pub w_out: f64,
}

impl RejectionWeights {
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            w_err: self.w_err * k,
            w_in: self.w_in * k,
            w_out: self.w_out * k,
        }
    }

    /// Left-hand side of the rule. A zero `w_out` kills an infinite ratio.
    pub fn score(&self, max_posterior: f64, ratio_out_in: f64) -> f64 {
        let ood = if self.w_out == 0.0 {
            0.0
        } else {
            self.w_out * ratio_out_in
        };
        self.w_err * (1.0 - max_posterior) + ood
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decision {
    pub abstain: bool,
    /// Predicted class when accepting; `None` for pure rejectors that carry
    /// no classifier.
    pub label: Option<usize>,
    /// Larger means more abstain-worthy.
    pub rejection_score: f64,
    pub threshold: f64,
}

impl Decision {
    pub fn from_score(rejection_score: f64, threshold: f64, label: Option<usize>) -> Self {
        Self {
            abstain: rejection_score > threshold,
            label,
            rejection_score,
            threshold,
        }
    }

    /// Label if accepted.
    pub fn prediction(&self) -> Option<usize> {
        if self.abstain {
            None
        } else {
            self.label
        }
    }
}

fn check_posterior(posterior: &[f64]) -> Result<()> {
    if posterior.is_empty() {
        return Err(ScodError::EmptyInput("posterior"));
    }
    if posterior.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(ScodError::InvalidInput(
            "posterior entries must be finite and non-negative".into(),
        ));
    }
    Ok(())
}

fn chow_threshold(c_in: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&c_in) {
        return Err(ScodError::InvalidCost(format!(
            "c_in must lie in [0, 1), got {c_in}"
        )));
    }
    Ok(c_in / (1.0 - c_in))
}

/// Chow's rule: abstain iff `1 − max_y P(y|x) > c_in / (1 − c_in)`.
pub fn chow_rule(posterior: &[f64], c_in: f64) -> Result<Decision> {
    check_posterior(posterior)?;
    let t = chow_threshold(c_in)?;
    Ok(Decision::from_score(
        1.0 - max_value(posterior),
        t,
        Some(argmax(posterior)),
    ))
}

/// Confidence-threshold (MSP-style) rule: abstain iff `max_y P(y|x) < t`.
pub fn confidence_rule(posterior: &[f64], t: f64) -> Result<Decision> {
    check_posterior(posterior)?;
    Ok(Decision::from_score(
        -max_value(posterior),
        -t,
        Some(argmax(posterior)),
    ))
}

/// Density-ratio rejection: abstain iff `P_out(x)/P_in(x) > c_in / (1 − c_in)`.
pub fn density_rejection(ratio_out_in: f64, c_in: f64) -> Result<Decision> {
    if ratio_out_in.is_nan() || ratio_out_in < 0.0 {
        return Err(ScodError::InvalidInput(format!(
            "density ratio must be non-negative, got {ratio_out_in}"
        )));
    }
    let t = chow_threshold(c_in)?;
    Ok(Decision::from_score(ratio_out_in, t, None))
}

/// General weighted form of the Bayes SCOD rule.
pub fn weighted_rule(
    posterior: &[f64],
    ratio_out_in: f64,
    weights: &RejectionWeights,
) -> Result<Decision> {
    check_posterior(posterior)?;
    if ratio_out_in.is_nan() || ratio_out_in < 0.0 {
        return Err(ScodError::InvalidInput(format!(
            "density ratio must be non-negative, got {ratio_out_in}"
        )));
    }
    let score = weights.score(max_value(posterior), ratio_out_in);
    Ok(Decision::from_score(
        score,
        weights.w_in,
        Some(argmax(posterior)),
    ))
}

/// Bayes-optimal SCOD rule: abstain iff
/// `(1 − c_in − c_out) · (1 − max_y P_in(y|x)) + c_out · P_out(x)/P_in(x) > c_in`.
///
/// An infinite ratio (including points outside both supports) abstains
/// whenever `c_out > 0`.
pub fn scod_bayes(posterior: &[f64], ratio_out_in: f64, costs: &CostSpec) -> Result<Decision> {
    weighted_rule(posterior, ratio_out_in, &costs.weights())
}

/// `F(z) = z / (1 + z)` with `F(+inf) = 1`.
fn f_link(z: f64) -> f64 {
    if z.is_infinite() {
        1.0
    } else {
        z / (1.0 + z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpenSetDecision {
    /// Threshold form: score `P_te(L|x)`, threshold `t*_osc`.
    pub decision: Decision,
    /// Verdict of the equivalent sample-dependent form
    /// `max_{y≠L} P_in(y|x) > max_{y≠L} P_te(y|x) / (1 − t*_osc)`.
    pub sample_dependent_abstain: bool,
}

impl OpenSetDecision {
    pub fn characterizations_agree(&self) -> bool {
        self.decision.abstain == self.sample_dependent_abstain
    }
}

/// `t*_osc = F(c_in · π_te(L) / (c_out · (1 − π_te(L))))`.
pub fn open_set_threshold(held_out_prior: f64, costs: &CostSpec) -> Result<f64> {
    if ((costs.c_in() + costs.c_out()) - 1.0).abs() > 1e-12 {
        return Err(ScodError::InvalidCost(
            "open-set rule requires c_in + c_out = 1".into(),
        ));
    }
    if !(0.0..1.0).contains(&held_out_prior) {
        return Err(ScodError::InvalidConfiguration(format!(
            "held-out prior must lie in [0, 1), got {held_out_prior}"
        )));
    }
    let num = costs.c_in() * held_out_prior;
    let den = costs.c_out() * (1.0 - held_out_prior);
    let z = if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    };
    Ok(f_link(z))
}

/// Bayes-optimal open-set rule on the full test posterior over `L` classes,
/// where `held_out` is the class unseen in training.
pub fn open_set_bayes(
    full_posterior: &[f64],
    held_out: usize,
    held_out_prior: f64,
    costs: &CostSpec,
) -> Result<OpenSetDecision> {
    check_posterior(full_posterior)?;
    let l = full_posterior.len();
    if held_out >= l {
        return Err(ScodError::LabelOutOfRange {
            label: held_out,
            num_classes: l,
        });
    }
    if l < 2 {
        return Err(ScodError::InvalidConfiguration(
            "open-set rule needs at least two classes".into(),
        ));
    }
    let t = open_set_threshold(held_out_prior, costs)?;
    let seen: Vec<f64> = full_posterior
        .iter()
        .enumerate()
        .filter(|(y, _)| *y != held_out)
        .map(|(_, p)| *p)
        .collect();
    let seen_mass: f64 = seen.iter().sum();
    let p_held = full_posterior[held_out];
    let max_te = max_value(&seen);
    let best = argmax(&seen);
    let label = if best >= held_out { best + 1 } else { best };
    let decision = Decision::from_score(p_held, t, Some(label));
    let sample_dependent_abstain = if seen_mass == 0.0 {
        // P_in(·|x) is undefined; all mass sits on the held-out class.
        p_held > t
    } else {
        let max_in = max_te / seen_mass;
        max_in * (1.0 - t) > max_te
    };
    Ok(OpenSetDecision {
        decision,
        sample_dependent_abstain,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WitnessCase {
    /// `t_msp ≤ 1/(L−1)`: mass `1 − ε` on the held-out class.
    HeldOutDominant,
    /// `t_msp > 1/(L−1)`: mass `ε` on the held-out class.
    HeldOutRare,
}

/// A class-probability vector on which the confidence rule at `t_msp`
/// and the open-set Bayes rule disagree for every `t*_osc` in
/// `(bayes_threshold_range.0, bayes_threshold_range.1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MspWitness {
    pub case: WitnessCase,
    /// `P_te(·|x)` over `L` classes; the held-out class is the last one.
    pub test_posterior: Vec<f64>,
    /// `P_in(·|x)` over the `L − 1` seen classes.
    pub inlier_posterior: Vec<f64>,
    pub bayes_threshold_range: (f64, f64),
}

/// Builds the distribution on which the MSP baseline provably disagrees
/// with the open-set Bayes rule.
pub fn msp_disagreement_witness(l: usize, t_msp: f64, epsilon: f64) -> Result<MspWitness> {
    if l < 2 {
        return Err(ScodError::InvalidConfiguration(
            "witness needs at least two classes".into(),
        ));
    }
    if !(t_msp > 0.0 && t_msp < 1.0) || !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(ScodError::InvalidConfiguration(
            "t_msp and epsilon must lie in (0, 1)".into(),
        ));
    }
    let seen = (l - 1) as f64;
    let (case, held) = if t_msp <= 1.0 / seen {
        (WitnessCase::HeldOutDominant, 1.0 - epsilon)
    } else {
        (WitnessCase::HeldOutRare, epsilon)
    };
    let mut test_posterior = vec![(1.0 - held) / seen; l - 1];
    test_posterior.push(held);
    let range = match case {
        WitnessCase::HeldOutDominant => (0.0, 1.0 - epsilon),
        WitnessCase::HeldOutRare => (epsilon, 1.0),
    };
    Ok(MspWitness {
        case,
        test_posterior,
        inlier_posterior: vec![1.0 / seen; l - 1],
        bayes_threshold_range: range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_simplex(rng: &mut ChaCha8Rng, l: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..l)
            .map(|_| -rng.random::<f64>().max(1e-300).ln())
            .collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|v| v / s).collect()
    }

    #[test]
    fn chow_examples() {
        assert!(!chow_rule(&[0.5, 0.5], 0.5).unwrap().abstain);
        assert!(chow_rule(&[0.7, 0.3], 0.2).unwrap().abstain);
        assert!(chow_rule(&[0.9, 0.1], 0.0).unwrap().abstain);
        assert!(!chow_rule(&[1.0, 0.0], 0.0).unwrap().abstain);
        assert!(matches!(
            chow_rule(&[0.5, 0.5], 1.0),
            Err(ScodError::InvalidCost(_))
        ));
        assert_eq!(chow_rule(&[0.4, 0.4, 0.2], 0.9).unwrap().label, Some(0));
    }

    #[test]
    fn density_rejection_examples() {
        assert!(!density_rejection(1.0, 0.5).unwrap().abstain);
        assert!(density_rejection(3.0, 0.2).unwrap().abstain);
        assert!(density_rejection(f64::INFINITY, 0.999).unwrap().abstain);
        assert!(density_rejection(1.0, 1.0).is_err());
    }

    #[test]
    fn scod_bayes_hand_example() {
        let costs = CostSpec::new(0.2, 0.3).unwrap();
        let d = scod_bayes(&[0.9, 0.1], 2.0 / 3.0, &costs).unwrap();
        assert!((d.rejection_score - 0.25).abs() < 1e-15);
        assert!(d.abstain);
    }

    #[test]
    fn infinite_ratio_abstains_iff_outlier_cost_positive() {
        let d = scod_bayes(
            &[1.0, 0.0],
            f64::INFINITY,
            &CostSpec::new(0.3, 1e-9).unwrap(),
        )
        .unwrap();
        assert!(d.abstain);
        let d = scod_bayes(
            &[1.0, 0.0],
            f64::INFINITY,
            &CostSpec::new(0.3, 0.0).unwrap(),
        )
        .unwrap();
        assert!(!d.abstain);
    }

    #[test]
    fn cost_validation() {
        assert!(CostSpec::new(0.6, 0.5).is_err());
        assert!(CostSpec::new(-0.1, 0.5).is_err());
        assert!(BudgetSpec::new(0.75, 0.2, 1.0).is_err());
    }

    #[test]
    fn reductions_hold_decision_for_decision() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let l = rng.random_range(2..6);
            let p = random_simplex(&mut rng, l);
            let ratio = (rng.random::<f64>() * 8.0 - 4.0).exp();
            let c_in = rng.random::<f64>() * 0.95;
            let chow = chow_rule(&p, c_in).unwrap();
            let bayes = scod_bayes(&p, ratio, &CostSpec::new(c_in, 0.0).unwrap()).unwrap();
            assert_eq!(chow.abstain, bayes.abstain);
            assert_eq!(chow.label, bayes.label);
            let dens = density_rejection(ratio, c_in).unwrap();
            let bayes = scod_bayes(&p, ratio, &CostSpec::new(c_in, 1.0 - c_in).unwrap()).unwrap();
            assert_eq!(dens.abstain, bayes.abstain);
        }
    }

    #[test]
    fn scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10_000 {
            let p = random_simplex(&mut rng, 3);
            let ratio = (rng.random::<f64>() * 6.0 - 3.0).exp();
            let c_in = rng.random::<f64>() * 0.5;
            let c_out = rng.random::<f64>() * 0.5;
            let w = CostSpec::new(c_in, c_out).unwrap().weights();
            let a = weighted_rule(&p, ratio, &w).unwrap();
            let b = weighted_rule(&p, ratio, &w.scaled(4.0)).unwrap();
            let c = weighted_rule(&p, ratio, &w.scaled(0.125)).unwrap();
            assert_eq!(a.abstain, b.abstain);
            assert_eq!(a.abstain, c.abstain);
        }
    }

    #[test]
    fn open_set_thresholds() {
        let t = open_set_threshold(0.5, &CostSpec::new(0.5, 0.5).unwrap()).unwrap();
        assert!((t - 0.5).abs() < 1e-15);
        let t = open_set_threshold(0.25, &CostSpec::new(0.75, 0.25).unwrap()).unwrap();
        assert!((t - 0.5).abs() < 1e-15);
        assert!(open_set_threshold(0.25, &CostSpec::new(0.5, 0.25).unwrap()).is_err());
        let d = open_set_bayes(
            &[0.6, 0.4, 0.0],
            2,
            0.3,
            &CostSpec::new(0.01, 0.99).unwrap(),
        )
        .unwrap();
        assert!(!d.decision.abstain && d.characterizations_agree());
    }

    #[test]
    fn open_set_characterizations_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10_000 {
            let l = rng.random_range(2..7);
            let p = random_simplex(&mut rng, l);
            let c_in = rng.random::<f64>();
            let costs = CostSpec::new(c_in, 1.0 - c_in).unwrap();
            let prior = rng.random::<f64>() * 0.98 + 0.01;
            let d = open_set_bayes(&p, l - 1, prior, &costs).unwrap();
            assert!(d.characterizations_agree(), "{p:?} {c_in} {prior}");
        }
    }

    #[test]
    fn witness_examples() {
        let w = msp_disagreement_witness(3, 0.4, 0.1).unwrap();
        assert_eq!(w.case, WitnessCase::HeldOutDominant);
        let expect = [0.05, 0.05, 0.9];
        for (a, b) in w.test_posterior.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let w = msp_disagreement_witness(3, 0.8, 0.1).unwrap();
        assert_eq!(w.case, WitnessCase::HeldOutRare);
        let expect = [0.45, 0.45, 0.1];
        for (a, b) in w.test_posterior.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(confidence_rule(&w.inlier_posterior, 0.8).unwrap().abstain);
    }
}
