//! Empirical SCOD metrics.
//!
//! Per-sample outcomes are given as `Option<usize>` predictions: `None`
//! abstains, `Some(y)` accepts with label `y`. Ratios with an empty
//! denominator are reported as 0 with `degenerate = true`.

use serde::Serialize;

use crate::distributions::{Origin, Sample};
use crate::{Result, ScodError};

/// Ground truth for an evaluation sample: `Some(y)` for a labelled inlier,
/// `None` for an outlier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationSet {
    labels: Vec<Option<usize>>,
}

impl EvaluationSet {
    pub fn new(labels: Vec<Option<usize>>) -> Result<Self> {
        if labels.is_empty() {
            return Err(ScodError::EmptyInput("evaluation set"));
        }
        Ok(Self { labels })
    }

    pub fn from_samples(samples: &[Sample]) -> Result<Self> {
        let labels = samples
            .iter()
            .map(|s| match s.origin {
                Origin::Outlier => Ok(None),
                Origin::Inlier | Origin::StrictInlier => s.label.map(Some).ok_or_else(|| {
                    ScodError::InvalidInput("inlier evaluation sample without a label".into())
                }),
                Origin::Wild => Err(ScodError::InvalidInput(
                    "wild samples have no ground truth".into(),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels)
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_inliers(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn num_outliers(&self) -> usize {
        self.len() - self.num_inliers()
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.len() {
            return Err(ScodError::DimensionMismatch {
                expected: self.len(),
                actual: n,
            });
        }
        Ok(())
    }
}

/// A ratio metric with a flag for the empty-denominator convention.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ratio {
    pub value: f64,
    pub degenerate: bool,
}

impl Ratio {
    fn of(num: f64, den: f64) -> Self {
        if den == 0.0 {
            Self {
                value: 0.0,
                degenerate: true,
            }
        } else {
            Self {
                value: num / den,
                degenerate: false,
            }
        }
    }
}

/// Outcome counts of a rule on an evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Counts {
    pub accepted_inlier_correct: usize,
    pub accepted_inlier_wrong: usize,
    pub accepted_outlier: usize,
    pub abstained_inlier: usize,
    pub abstained_outlier: usize,
}

impl Counts {
    pub fn tally(eval: &EvaluationSet, predictions: &[Option<usize>]) -> Result<Self> {
        eval.check(predictions.len())?;
        let mut c = Counts::default();
        for (truth, pred) in eval.labels.iter().zip(predictions) {
            c.add(*truth, *pred);
        }
        Ok(c)
    }

    fn add(&mut self, truth: Option<usize>, pred: Option<usize>) {
        match (truth, pred) {
            (Some(y), Some(h)) if y == h => self.accepted_inlier_correct += 1,
            (Some(_), Some(_)) => self.accepted_inlier_wrong += 1,
            (None, Some(_)) => self.accepted_outlier += 1,
            (Some(_), None) => self.abstained_inlier += 1,
            (None, None) => self.abstained_outlier += 1,
        }
    }

    pub fn accepted(&self) -> usize {
        self.accepted_inlier_correct + self.accepted_inlier_wrong + self.accepted_outlier
    }

    pub fn abstained(&self) -> usize {
        self.abstained_inlier + self.abstained_outlier
    }

    pub fn total(&self) -> usize {
        self.accepted() + self.abstained()
    }

    /// `[(1 − c_fn) · #wrong accepted inliers + c_fn · #accepted outliers] / #accepted`.
    pub fn joint_risk(&self, c_fn: f64) -> Ratio {
        let num =
            (1.0 - c_fn) * self.accepted_inlier_wrong as f64 + c_fn * self.accepted_outlier as f64;
        Ratio::of(num, self.accepted() as f64)
    }

    /// `#correct accepted inliers / #accepted`.
    pub fn inlier_accuracy(&self) -> Ratio {
        Ratio::of(self.accepted_inlier_correct as f64, self.accepted() as f64)
    }

    /// Fraction of abstentions that are outliers.
    pub fn ood_precision(&self) -> Ratio {
        Ratio::of(self.abstained_outlier as f64, self.abstained() as f64)
    }

    /// Fraction of outliers abstained on.
    pub fn ood_recall(&self) -> Ratio {
        Ratio::of(
            self.abstained_outlier as f64,
            (self.abstained_outlier + self.accepted_outlier) as f64,
        )
    }

    pub fn abstention_rate(&self) -> f64 {
        self.abstained() as f64 / self.total() as f64
    }

    /// Soft-penalty SCOD risk with costs `(c_in, c_out)`:
    /// `(1 − c_in − c_out)·P̂_in(wrong, accept) + c_in·P̂_in(abstain) + c_out·P̂_out(accept)`,
    /// inlier and outlier terms each normalised by their own set size.
    pub fn soft_penalty_risk(&self, c_in: f64, c_out: f64) -> f64 {
        let n_in = (self.accepted_inlier_correct
            + self.accepted_inlier_wrong
            + self.abstained_inlier) as f64;
        let n_out = (self.accepted_outlier + self.abstained_outlier) as f64;
        let inlier = if n_in > 0.0 {
            ((1.0 - c_in - c_out) * self.accepted_inlier_wrong as f64
                + c_in * self.abstained_inlier as f64)
                / n_in
        } else {
            0.0
        };
        let outlier = if n_out > 0.0 {
            c_out * self.accepted_outlier as f64 / n_out
        } else {
            0.0
        };
        inlier + outlier
    }
}

pub fn joint_risk(eval: &EvaluationSet, predictions: &[Option<usize>], c_fn: f64) -> Result<Ratio> {
    Ok(Counts::tally(eval, predictions)?.joint_risk(c_fn))
}

pub fn inlier_accuracy(eval: &EvaluationSet, predictions: &[Option<usize>]) -> Result<Ratio> {
    Ok(Counts::tally(eval, predictions)?.inlier_accuracy())
}

pub fn ood_precision_recall(
    eval: &EvaluationSet,
    predictions: &[Option<usize>],
) -> Result<(Ratio, Ratio)> {
    let c = Counts::tally(eval, predictions)?;
    Ok((c.ood_precision(), c.ood_recall()))
}

/// Trapezoidal area under `ys` over `xs`.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (x[1] - x[0]) * (y[0] + y[1]) / 2.0)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub target_fraction: f64,
    pub realized_fraction: f64,
    pub joint_risk: f64,
    pub inlier_accuracy: f64,
    pub ood_precision: f64,
    pub ood_recall: f64,
    /// Nothing was accepted (or nothing abstained, for the OOD ratios).
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskCoverageCurve {
    pub points: Vec<CurvePoint>,
    pub auc_rc: f64,
    /// Only full acceptance and full abstention were reachable.
    pub constant_score: bool,
}

pub const CSV_HEADER: &str =
    "target_fraction,realized_fraction,joint_risk,inlier_accuracy,ood_precision,ood_recall";

impl RiskCoverageCurve {
    pub fn fractions(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.realized_fraction).collect()
    }

    pub fn risks(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.joint_risk).collect()
    }

    /// One header line and one row per grid point, shortest round-trip
    /// float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.target_fraction,
                p.realized_fraction,
                p.joint_risk,
                p.inlier_accuracy,
                p.ood_precision,
                p.ood_recall
            ));
        }
        out
    }
}

/// Sweeps the abstention fraction over `k / (grid_size − 1)`, abstaining on
/// the highest-`rejection_scores` samples first.
///
/// At each target the realised set is the largest tie-respecting prefix whose
/// fraction does not exceed the target, so realised fractions are
/// non-decreasing and can repeat under ties.
pub fn risk_coverage_curve(
    eval: &EvaluationSet,
    rejection_scores: &[f64],
    classifier: &[usize],
    c_fn: f64,
    grid_size: usize,
) -> Result<RiskCoverageCurve> {
    eval.check(rejection_scores.len())?;
    eval.check(classifier.len())?;
    if grid_size < 2 {
        return Err(ScodError::InvalidConfiguration(
            "grid_size must be at least 2".into(),
        ));
    }
    if rejection_scores.iter().any(|s| s.is_nan()) {
        return Err(ScodError::InvalidInput("rejection score is NaN".into()));
    }
    let n = eval.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| {
        rejection_scores[*b]
            .total_cmp(&rejection_scores[*a])
            .then(a.cmp(b))
    });
    // counts_after[m]: outcomes on order[m..], everything there accepted.
    let mut counts_after = vec![Counts::default(); n + 1];
    for m in (0..n).rev() {
        let i = order[m];
        let mut c = counts_after[m + 1];
        c.add(eval.labels[i], Some(classifier[i]));
        counts_after[m] = c;
    }
    let is_boundary =
        |m: usize| m == 0 || m == n || rejection_scores[order[m - 1]] != rejection_scores[order[m]];
    let mut boundaries = Vec::new();
    (0..=n)
        .filter(|m| is_boundary(*m))
        .for_each(|m| boundaries.push(m));

    let mut points = Vec::with_capacity(grid_size);
    for k in 0..grid_size {
        let target_m = k * n / (grid_size - 1);
        let pos = boundaries.partition_point(|b| *b <= target_m);
        let m = boundaries[pos - 1];
        let mut c = counts_after[m];
        for &i in &order[..m] {
            match eval.labels[i] {
                Some(_) => c.abstained_inlier += 1,
                None => c.abstained_outlier += 1,
            }
        }
        let risk = c.joint_risk(c_fn);
        let acc = c.inlier_accuracy();
        let prec = c.ood_precision();
        let rec = c.ood_recall();
        points.push(CurvePoint {
            target_fraction: k as f64 / (grid_size - 1) as f64,
            realized_fraction: m as f64 / n as f64,
            joint_risk: risk.value,
            inlier_accuracy: acc.value,
            ood_precision: prec.value,
            ood_recall: rec.value,
            degenerate: risk.degenerate || prec.degenerate,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.realized_fraction).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.joint_risk).collect();
    Ok(RiskCoverageCurve {
        auc_rc: trapezoid(&xs, &ys),
        constant_score: boundaries.len() == 2 && n > 1,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OodMetrics {
    pub auc_roc: f64,
    pub fpr_at_95tpr: f64,
}

/// AUC-ROC as the Mann-Whitney statistic with mid-ranks (ties count ½).
/// Higher scores mean more OOD.
pub fn auc_roc(inlier_scores: &[f64], outlier_scores: &[f64]) -> Result<f64> {
    if inlier_scores.is_empty() || outlier_scores.is_empty() {
        return Err(ScodError::EmptyInput("detection scores"));
    }
    let mut all: Vec<(f64, bool)> = inlier_scores
        .iter()
        .map(|s| (*s, false))
        .chain(outlier_scores.iter().map(|s| (*s, true)))
        .collect();
    if all.iter().any(|(s, _)| s.is_nan()) {
        return Err(ScodError::InvalidInput("detection score is NaN".into()));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // Ranks i+1 ..= j share the mean (i + 1 + j) / 2.
        let mid = (i + 1 + j) as f64 / 2.0;
        rank_sum += mid * all[i..j].iter().filter(|(_, o)| *o).count() as f64;
        i = j;
    }
    let m = outlier_scores.len() as f64;
    let u = rank_sum - m * (m + 1.0) / 2.0;
    Ok(u / (m * inlier_scores.len() as f64))
}

/// Threshold flagging 95% of outliers: the 5th percentile of outlier
/// scores by lower interpolation. A sample is flagged iff its score is at
/// least this value.
pub fn tpr95_threshold(outlier_scores: &[f64]) -> Result<f64> {
    if outlier_scores.is_empty() {
        return Err(ScodError::EmptyInput("outlier scores"));
    }
    let mut sorted = outlier_scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = (0.05 * (sorted.len() - 1) as f64).floor() as usize;
    Ok(sorted[idx])
}

/// OOD precision and recall when flagging scores `>= threshold`.
pub fn precision_recall_at(
    inlier_scores: &[f64],
    outlier_scores: &[f64],
    threshold: f64,
) -> (Ratio, Ratio) {
    let tp = outlier_scores.iter().filter(|s| **s >= threshold).count() as f64;
    let fp = inlier_scores.iter().filter(|s| **s >= threshold).count() as f64;
    (
        Ratio::of(tp, tp + fp),
        Ratio::of(tp, outlier_scores.len() as f64),
    )
}

pub fn ood_detection_metrics(inlier_scores: &[f64], outlier_scores: &[f64]) -> Result<OodMetrics> {
    let auc = auc_roc(inlier_scores, outlier_scores)?;
    let t = tpr95_threshold(outlier_scores)?;
    let fpr = inlier_scores.iter().filter(|s| **s >= t).count() as f64 / inlier_scores.len() as f64;
    Ok(OodMetrics {
        auc_roc: auc,
        fpr_at_95tpr: fpr,
    })
}
