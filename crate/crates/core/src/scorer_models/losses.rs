use serde::{Deserialize, Serialize};

use super::model::{Head, ScorerModel};
use crate::bayes_rules::CostSpec;
use crate::distributions::Sample;
use crate::numeric::{log_sum_exp, sigmoid, softmax, softplus};
use crate::{par, Result, ScodError};

/// Samples per gradient-accumulation chunk. Partial sums are combined in
/// chunk order so the result does not depend on thread scheduling.
const GRAD_CHUNK: usize = 256;

/// Training objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Objective {
    /// Softmax cross-entropy on inliers plus sigmoid cross-entropy
    /// separating inliers (`+1`) from the auxiliary sample (`−1`).
    Decoupled,
    /// `(L+1)`-way softmax cross-entropy with a reject class weighted by
    /// `1 − c_in` on inliers and `c_out` on the auxiliary sample.
    Coupled { c_in: f64, c_out: f64 },
    /// Softmax cross-entropy on inliers only.
    InlierCrossEntropy,
}

/// Empirical loss split into its terms, with the gradient of `total`.
///
/// For the decoupled objective `inlier_term` and `auxiliary_term` are the
/// binary losses on the inlier and mixture sets; for the coupled objective
/// they are the cost-weighted reject-class losses.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub total: f64,
    pub ce_term: f64,
    pub inlier_term: f64,
    pub auxiliary_term: f64,
    pub gradient: Vec<f64>,
}

#[derive(Clone)]
struct Partial {
    ce: f64,
    inlier: f64,
    aux: f64,
    grad: Vec<f64>,
}

impl Partial {
    fn new(n: usize, with_grad: bool) -> Self {
        Self {
            ce: 0.0,
            inlier: 0.0,
            aux: 0.0,
            grad: if with_grad { vec![0.0; n] } else { Vec::new() },
        }
    }
}

fn cross_entropy(logits: &[f64], target: usize) -> f64 {
    log_sum_exp(logits) - logits[target]
}

/// `softmax(z) − e_target`, scaled.
fn ce_grad(probs: &[f64], target: usize, scale: f64, out: &mut [f64]) {
    for (k, p) in probs.iter().enumerate() {
        out[k] += scale * (p - if k == target { 1.0 } else { 0.0 });
    }
}

fn check_inliers(model: &ScorerModel, inliers: &[Sample]) -> Result<()> {
    let d = model.architecture().input_dim;
    let l = model.num_classes();
    for s in inliers {
        if s.features.len() != d {
            return Err(ScodError::DimensionMismatch {
                expected: d,
                actual: s.features.len(),
            });
        }
        match s.label {
            None => {
                return Err(ScodError::InvalidInput(
                    "inlier sample without a label".into(),
                ))
            }
            Some(y) if y >= l => {
                return Err(ScodError::LabelOutOfRange {
                    label: y,
                    num_classes: l,
                })
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_auxiliary(model: &ScorerModel, aux: &[Sample]) -> Result<()> {
    let d = model.architecture().input_dim;
    match aux.iter().find(|s| s.features.len() != d) {
        Some(s) => Err(ScodError::DimensionMismatch {
            expected: d,
            actual: s.features.len(),
        }),
        None => Ok(()),
    }
}

/// Core evaluation on index subsets, shared by the public losses and the
/// training loop.
pub(crate) fn evaluate(
    model: &ScorerModel,
    objective: &Objective,
    inliers: &[Sample],
    inlier_idx: &[usize],
    aux: &[Sample],
    aux_idx: &[usize],
    with_grad: bool,
) -> LossReport {
    let n_params = model.params().len();
    let l = model.num_classes();
    let n_in = inlier_idx.len() as f64;
    let n_aux = aux_idx.len() as f64;
    let (reject_in, reject_aux) = match objective {
        Objective::Coupled { c_in, c_out } => (1.0 - c_in, *c_out),
        _ => (0.0, 0.0),
    };
    let uses_aux = match objective {
        Objective::Decoupled => true,
        Objective::Coupled { c_out, .. } => *c_out != 0.0 && !aux_idx.is_empty(),
        Objective::InlierCrossEntropy => false,
    };

    let inlier_parts = par::map_chunks(inlier_idx.len(), GRAD_CHUNK, |_, range| {
        let mut acc = Partial::new(n_params, with_grad);
        let mut d_logits = vec![0.0; model.architecture().num_logits()];
        for &i in &inlier_idx[range] {
            let x = &inliers[i].features;
            let y = inliers[i].label.unwrap_or_default();
            let trace = model.trace(x);
            let z = &trace.output.logits;
            acc.ce += cross_entropy(z, y);
            let mut d_ood = 0.0;
            match objective {
                Objective::Decoupled => {
                    let s = trace.output.ood_logit.unwrap_or_default();
                    acc.inlier += softplus(-s);
                    d_ood = -sigmoid(-s) / n_in;
                }
                Objective::Coupled { .. } => acc.inlier += reject_in * cross_entropy(z, l),
                Objective::InlierCrossEntropy => {}
            }
            if with_grad {
                d_logits.iter_mut().for_each(|v| *v = 0.0);
                let probs = softmax(z);
                ce_grad(&probs, y, 1.0 / n_in, &mut d_logits);
                if reject_in != 0.0 {
                    ce_grad(&probs, l, reject_in / n_in, &mut d_logits);
                }
                model.backward(x, &trace, &d_logits, d_ood, &mut acc.grad);
            }
        }
        acc
    });

    let aux_parts = if uses_aux {
        par::map_chunks(aux_idx.len(), GRAD_CHUNK, |_, range| {
            let mut acc = Partial::new(n_params, with_grad);
            let mut d_logits = vec![0.0; model.architecture().num_logits()];
            for &i in &aux_idx[range] {
                let x = &aux[i].features;
                let trace = model.trace(x);
                let z = &trace.output.logits;
                let mut d_ood = 0.0;
                d_logits.iter_mut().for_each(|v| *v = 0.0);
                match objective {
                    Objective::Decoupled => {
                        let s = trace.output.ood_logit.unwrap_or_default();
                        acc.aux += softplus(s);
                        d_ood = sigmoid(s) / n_aux;
                    }
                    Objective::Coupled { .. } => {
                        acc.aux += reject_aux * cross_entropy(z, l);
                        if with_grad {
                            ce_grad(&softmax(z), l, reject_aux / n_aux, &mut d_logits);
                        }
                    }
                    Objective::InlierCrossEntropy => {}
                }
                if with_grad {
                    model.backward(x, &trace, &d_logits, d_ood, &mut acc.grad);
                }
            }
            acc
        })
    } else {
        Vec::new()
    };

    let mut total = Partial::new(n_params, with_grad);
    for part in inlier_parts.iter().chain(&aux_parts) {
        total.ce += part.ce;
        total.inlier += part.inlier;
        total.aux += part.aux;
        for (g, p) in total.grad.iter_mut().zip(&part.grad) {
            *g += p;
        }
    }
    let ce_term = total.ce / n_in;
    let inlier_term = total.inlier / n_in;
    let auxiliary_term = if uses_aux { total.aux / n_aux } else { 0.0 };
    LossReport {
        total: ce_term + inlier_term + auxiliary_term,
        ce_term,
        inlier_term,
        auxiliary_term,
        gradient: total.grad,
    }
}

pub(crate) fn validate_objective(
    model: &ScorerModel,
    objective: &Objective,
    inliers: &[Sample],
    aux: &[Sample],
) -> Result<()> {
    if inliers.is_empty() {
        return Err(ScodError::EmptyInput("inlier batch"));
    }
    check_inliers(model, inliers)?;
    check_auxiliary(model, aux)?;
    let head = model.architecture().head;
    match objective {
        Objective::Decoupled => {
            if head == Head::Coupled {
                return Err(ScodError::InvalidConfiguration(
                    "decoupled loss needs a decoupled head".into(),
                ));
            }
            if aux.is_empty() {
                return Err(ScodError::EmptyInput("mixture batch"));
            }
        }
        Objective::Coupled { c_in, c_out } => {
            if head != Head::Coupled {
                return Err(ScodError::InvalidConfiguration(
                    "coupled loss needs a coupled head".into(),
                ));
            }
            CostSpec::new(*c_in, *c_out)?;
            if *c_out != 0.0 && aux.is_empty() {
                return Err(ScodError::EmptyInput("outlier batch"));
            }
        }
        Objective::InlierCrossEntropy => {}
    }
    Ok(())
}

/// Loss and gradient of `objective` on the full batches.
pub fn loss(
    model: &ScorerModel,
    objective: &Objective,
    inliers: &[Sample],
    auxiliary: &[Sample],
) -> Result<LossReport> {
    validate_objective(model, objective, inliers, auxiliary)?;
    let in_idx: Vec<usize> = (0..inliers.len()).collect();
    let aux_idx: Vec<usize> = (0..auxiliary.len()).collect();
    Ok(evaluate(
        model, objective, inliers, &in_idx, auxiliary, &aux_idx, true,
    ))
}

/// `mean_in ℓ_mc(y, f(x)) + mean_in ℓ_bc(+1, s(x)) + mean_mix ℓ_bc(−1, s(x))`.
pub fn decoupled_loss(
    model: &ScorerModel,
    inliers: &[Sample],
    mix: &[Sample],
) -> Result<LossReport> {
    loss(model, &Objective::Decoupled, inliers, mix)
}

/// `mean_in ℓ_mc(y, f̄(x)) + (1 − c_in) · mean_in ℓ_mc(⊥, f̄(x)) + c_out · mean_out ℓ_mc(⊥, f̄(x))`.
/// With `c_out = 0` the outlier batch may be empty.
pub fn coupled_loss(
    model: &ScorerModel,
    inliers: &[Sample],
    outliers: &[Sample],
    costs: &CostSpec,
) -> Result<LossReport> {
    loss(
        model,
        &Objective::Coupled {
            c_in: costs.c_in(),
            c_out: costs.c_out(),
        },
        inliers,
        outliers,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Origin;
    use crate::scorer_models::Architecture;

    fn pt(x: Vec<f64>, label: Option<usize>) -> Sample {
        Sample {
            features: x,
            label,
            origin: if label.is_some() {
                Origin::Inlier
            } else {
                Origin::Wild
            },
        }
    }

    #[test]
    fn uniform_logits_decoupled() {
        let arch = Architecture {
            input_dim: 2,
            hidden_dim: 0,
            num_classes: 2,
            head: Head::Decoupled {
                shared_embedding: true,
            },
        };
        let m = ScorerModel::zeros(arch).unwrap();
        let r = decoupled_loss(
            &m,
            &[pt(vec![1.0, 2.0], Some(1))],
            &[pt(vec![0.5, -1.0], None)],
        )
        .unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((r.ce_term - ln2).abs() < 1e-15);
        assert!((r.inlier_term - ln2).abs() < 1e-15);
        assert!((r.auxiliary_term - ln2).abs() < 1e-15);
        assert!((r.total - 3.0 * ln2).abs() < 1e-14);
    }

    #[test]
    fn uniform_logits_coupled() {
        let arch = Architecture {
            input_dim: 2,
            hidden_dim: 3,
            num_classes: 2,
            head: Head::Coupled,
        };
        let m = ScorerModel::zeros(arch).unwrap();
        let costs = CostSpec::new(0.0, 1.0).unwrap();
        let r = coupled_loss(
            &m,
            &[pt(vec![1.0, 2.0], Some(0))],
            &[pt(vec![0.5, -1.0], None)],
            &costs,
        )
        .unwrap();
        let ln3 = 3f64.ln();
        assert!((r.ce_term - ln3).abs() < 1e-15);
        assert!((r.inlier_term - ln3).abs() < 1e-15);
        assert!((r.auxiliary_term - ln3).abs() < 1e-15);
        assert!((r.total - 3.0 * ln3).abs() < 1e-14);
    }

    #[test]
    fn coupled_without_outlier_cost_drops_term() {
        let arch = Architecture {
            input_dim: 1,
            hidden_dim: 0,
            num_classes: 2,
            head: Head::Coupled,
        };
        let m = ScorerModel::initialize(arch, 4).unwrap();
        let inl = [pt(vec![0.3], Some(0)), pt(vec![-1.2], Some(1))];
        let costs = CostSpec::new(0.2, 0.0).unwrap();
        let r = coupled_loss(&m, &inl, &[], &costs).unwrap();
        assert_eq!(r.auxiliary_term, 0.0);
        let z: Vec<Vec<f64>> = inl
            .iter()
            .map(|s| m.forward(&s.features).unwrap().logits)
            .collect();
        let expect = (cross_entropy(&z[0], 0)
            + 0.8 * cross_entropy(&z[0], 2)
            + cross_entropy(&z[1], 1)
            + 0.8 * cross_entropy(&z[1], 2))
            / 2.0;
        assert!((r.total - expect).abs() < 1e-14);
        assert!(coupled_loss(&m, &inl, &[], &CostSpec::new(0.2, 0.1).unwrap()).is_err());
    }

    #[test]
    fn input_errors() {
        let arch = Architecture {
            input_dim: 1,
            hidden_dim: 0,
            num_classes: 2,
            head: Head::Decoupled {
                shared_embedding: true,
            },
        };
        let m = ScorerModel::zeros(arch).unwrap();
        assert!(matches!(
            decoupled_loss(&m, &[], &[pt(vec![0.0], None)]),
            Err(ScodError::EmptyInput(_))
        ));
        assert!(matches!(
            decoupled_loss(&m, &[pt(vec![0.0], Some(0))], &[]),
            Err(ScodError::EmptyInput(_))
        ));
        assert!(matches!(
            decoupled_loss(&m, &[pt(vec![0.0], Some(2))], &[pt(vec![0.0], None)]),
            Err(ScodError::LabelOutOfRange {
                label: 2,
                num_classes: 2
            })
        ));
    }
}
