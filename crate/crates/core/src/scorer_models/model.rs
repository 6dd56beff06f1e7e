use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::stream_rng;
use crate::numeric::{sigmoid, softmax};
use crate::{Result, ScodError};

/// Output head layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Head {
    /// `L` class logits plus a separate OOD logit `s`. With
    /// `shared_embedding` the OOD logit reads the same hidden layer as the
    /// classifier; otherwise it gets its own hidden layer.
    Decoupled { shared_embedding: bool },
    /// `L + 1` logits, the last one for the reject class.
    Coupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    /// Width of the tanh hidden layer; 0 gives a linear model.
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub head: Head,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    w1: usize,
    b1: usize,
    wc: usize,
    bc: usize,
    w2: usize,
    b2: usize,
    u: usize,
    bu: usize,
    total: usize,
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.num_classes == 0 {
            return Err(ScodError::InvalidConfiguration(
                "input_dim and num_classes must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn embedding_dim(&self) -> usize {
        if self.hidden_dim == 0 {
            self.input_dim
        } else {
            self.hidden_dim
        }
    }

    /// Number of class logits including the reject logit of a coupled head.
    pub fn num_logits(&self) -> usize {
        match self.head {
            Head::Coupled => self.num_classes + 1,
            Head::Decoupled { .. } => self.num_classes,
        }
    }

    fn separate_ood_hidden(&self) -> bool {
        matches!(
            self.head,
            Head::Decoupled {
                shared_embedding: false
            }
        ) && self.hidden_dim > 0
    }

    fn layout(&self) -> Layout {
        let d = self.input_dim;
        let h = self.hidden_dim;
        let e = self.embedding_dim();
        let k = self.num_logits();
        let w1 = 0;
        let b1 = w1 + h * d;
        let wc = b1 + h;
        let bc = wc + k * e;
        let w2 = bc + k;
        let (b2, u) = if self.separate_ood_hidden() {
            (w2 + h * d, w2 + h * d + h)
        } else {
            (w2, w2)
        };
        let (bu, total) = match self.head {
            Head::Coupled => (u, u),
            Head::Decoupled { .. } => (u + e, u + e + 1),
        };
        Layout {
            w1,
            b1,
            wc,
            bc,
            w2,
            b2,
            u,
            bu,
            total,
        }
    }

    pub fn num_params(&self) -> usize {
        self.layout().total
    }
}

/// Raw outputs of a scorer at one input.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerOutput {
    /// `L` class logits, or `L + 1` with the reject logit last.
    pub logits: Vec<f64>,
    /// OOD logit `s(x)`; larger means more inlier.
    pub ood_logit: Option<f64>,
    pub embedding: Vec<f64>,
}

/// Calibrated quantities read off a scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityEstimates {
    /// Softmax over the `L` class logits.
    pub class_probs: Vec<f64>,
    /// `σ(s(x))`, the estimated probability that `x` came from the inlier
    /// side of the binary problem. `None` for coupled heads.
    pub inlier_prob: Option<f64>,
    pub embedding: Vec<f64>,
}

impl ScorerOutput {
    pub fn probability_estimates(&self, num_classes: usize) -> ProbabilityEstimates {
        ProbabilityEstimates {
            class_probs: softmax(&self.logits[..num_classes]),
            inlier_prob: self.ood_logit.map(sigmoid),
            embedding: self.embedding.clone(),
        }
    }
}

/// Activations kept for the backward pass.
pub(crate) struct Trace {
    pub output: ScorerOutput,
    ood_hidden: Vec<f64>,
}

/// Small feed-forward scorer with a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerModel {
    arch: Architecture,
    params: Vec<f64>,
}

fn affine_tanh(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let d = x.len();
    b.iter()
        .enumerate()
        .map(|(j, bj)| {
            (bj + w[j * d..(j + 1) * d]
                .iter()
                .zip(x)
                .map(|(a, v)| a * v)
                .sum::<f64>())
            .tanh()
        })
        .collect()
}

impl ScorerModel {
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        Ok(Self {
            arch,
            params: vec![0.0; arch.num_params()],
        })
    }

    /// Glorot-uniform weights (`±sqrt(6 / (fan_in + fan_out))`), zero biases.
    pub fn initialize(arch: Architecture, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(arch)?;
        let l = arch.layout();
        let mut rng = stream_rng(seed, u64::MAX);
        let mut fill = |params: &mut [f64], fan_in: usize, fan_out: usize| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in params {
                *p = rng.random_range(-a..a);
            }
        };
        let (d, h, e, k) = (
            arch.input_dim,
            arch.hidden_dim,
            arch.embedding_dim(),
            arch.num_logits(),
        );
        fill(&mut model.params[l.w1..l.b1], d, h);
        fill(&mut model.params[l.wc..l.bc], e, k);
        fill(&mut model.params[l.w2..l.b2], d, h);
        fill(&mut model.params[l.u..l.bu], e, 1);
        Ok(model)
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if params.len() != arch.num_params() {
            return Err(ScodError::DimensionMismatch {
                expected: arch.num_params(),
                actual: params.len(),
            });
        }
        Ok(Self { arch, params })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn num_classes(&self) -> usize {
        self.arch.num_classes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn trace(&self, x: &[f64]) -> Trace {
        let a = &self.arch;
        let l = a.layout();
        let p = &self.params;
        let embedding = if a.hidden_dim == 0 {
            x.to_vec()
        } else {
            affine_tanh(&p[l.w1..l.b1], &p[l.b1..l.wc], x)
        };
        let e = embedding.len();
        let logits: Vec<f64> = (0..a.num_logits())
            .map(|k| {
                p[l.bc + k]
                    + p[l.wc + k * e..l.wc + (k + 1) * e]
                        .iter()
                        .zip(&embedding)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
            })
            .collect();
        let ood_hidden = if a.separate_ood_hidden() {
            affine_tanh(&p[l.w2..l.b2], &p[l.b2..l.u], x)
        } else {
            Vec::new()
        };
        let ood_logit = match a.head {
            Head::Coupled => None,
            Head::Decoupled { .. } => {
                let src = if a.separate_ood_hidden() {
                    &ood_hidden
                } else {
                    &embedding
                };
                Some(
                    p[l.bu]
                        + p[l.u..l.bu]
                            .iter()
                            .zip(src)
                            .map(|(w, v)| w * v)
                            .sum::<f64>(),
                )
            }
        };
        Trace {
            output: ScorerOutput {
                logits,
                ood_logit,
                embedding,
            },
            ood_hidden,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<ScorerOutput> {
        if x.len() != self.arch.input_dim {
            return Err(ScodError::DimensionMismatch {
                expected: self.arch.input_dim,
                actual: x.len(),
            });
        }
        Ok(self.trace(x).output)
    }

    pub fn probability_estimates(&self, x: &[f64]) -> Result<ProbabilityEstimates> {
        Ok(self
            .forward(x)?
            .probability_estimates(self.arch.num_classes))
    }

    /// Accumulates `∂loss/∂θ` into `grad` given the loss derivative with
    /// respect to the logits (`d_logits`) and OOD logit (`d_ood`).
    pub(crate) fn backward(
        &self,
        x: &[f64],
        trace: &Trace,
        d_logits: &[f64],
        d_ood: f64,
        grad: &mut [f64],
    ) {
        let a = &self.arch;
        let l = a.layout();
        let p = &self.params;
        let phi = &trace.output.embedding;
        let e = phi.len();
        let d = a.input_dim;
        let mut d_phi = vec![0.0; e];
        for (k, dz) in d_logits.iter().enumerate() {
            if *dz == 0.0 {
                continue;
            }
            grad[l.bc + k] += dz;
            let row = l.wc + k * e;
            for j in 0..e {
                grad[row + j] += dz * phi[j];
                d_phi[j] += dz * p[row + j];
            }
        }
        if d_ood != 0.0 && matches!(a.head, Head::Decoupled { .. }) {
            grad[l.bu] += d_ood;
            if a.separate_ood_hidden() {
                let psi = &trace.ood_hidden;
                for j in 0..a.hidden_dim {
                    grad[l.u + j] += d_ood * psi[j];
                    let dpre = d_ood * p[l.u + j] * (1.0 - psi[j] * psi[j]);
                    grad[l.b2 + j] += dpre;
                    let row = l.w2 + j * d;
                    for (i, xi) in x.iter().enumerate() {
                        grad[row + i] += dpre * xi;
                    }
                }
            } else {
                for j in 0..e {
                    grad[l.u + j] += d_ood * phi[j];
                    d_phi[j] += d_ood * p[l.u + j];
                }
            }
        }
        if a.hidden_dim > 0 {
            for j in 0..a.hidden_dim {
                let dpre = d_phi[j] * (1.0 - phi[j] * phi[j]);
                if dpre == 0.0 {
                    continue;
                }
                grad[l.b1 + j] += dpre;
                let row = l.w1 + j * d;
                for (i, xi) in x.iter().enumerate() {
                    grad[row + i] += dpre * xi;
                }
            }
        }
    }

    /// Text form: a versioned header line, the architecture line, then one
    /// parameter per line in shortest round-trip notation.
    pub fn to_text(&self) -> String {
        let a = &self.arch;
        let head = match a.head {
            Head::Coupled => "coupled",
            Head::Decoupled {
                shared_embedding: true,
            } => "decoupled-shared",
            Head::Decoupled {
                shared_embedding: false,
            } => "decoupled-separate",
        };
        let mut out = format!(
            "scod-model v1\ninput_dim={} hidden_dim={} num_classes={} head={} params={}\n",
            a.input_dim,
            a.hidden_dim,
            a.num_classes,
            head,
            self.params.len()
        );
        for v in &self.params {
            out.push_str(&format!("{v}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("scod-model v1") {
            return Err(ScodError::Parse("missing `scod-model v1` header".into()));
        }
        let arch_line = lines
            .next()
            .ok_or_else(|| ScodError::Parse("missing architecture line".into()))?;
        let (mut input_dim, mut hidden_dim, mut num_classes, mut head, mut count) =
            (None, None, None, None, None);
        for field in arch_line.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| ScodError::Parse(format!("bad field `{field}`")))?;
            let num = || {
                value
                    .parse::<usize>()
                    .map_err(|_| ScodError::Parse(format!("bad value in `{field}`")))
            };
            match key {
                "input_dim" => input_dim = Some(num()?),
                "hidden_dim" => hidden_dim = Some(num()?),
                "num_classes" => num_classes = Some(num()?),
                "params" => count = Some(num()?),
                "head" => {
                    head = Some(match value {
                        "coupled" => Head::Coupled,
                        "decoupled-shared" => Head::Decoupled {
                            shared_embedding: true,
                        },
                        "decoupled-separate" => Head::Decoupled {
                            shared_embedding: false,
                        },
                        other => return Err(ScodError::Parse(format!("unknown head `{other}`"))),
                    })
                }
                other => return Err(ScodError::Parse(format!("unknown field `{other}`"))),
            }
        }
        let missing = |name: &str| ScodError::Parse(format!("architecture line lacks `{name}`"));
        let arch = Architecture {
            input_dim: input_dim.ok_or_else(|| missing("input_dim"))?,
            hidden_dim: hidden_dim.ok_or_else(|| missing("hidden_dim"))?,
            num_classes: num_classes.ok_or_else(|| missing("num_classes"))?,
            head: head.ok_or_else(|| missing("head"))?,
        };
        let count = count.ok_or_else(|| missing("params"))?;
        let params = lines
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|_| ScodError::Parse(format!("bad parameter at line {}", i + 3)))
            })
            .collect::<Result<Vec<_>>>()?;
        if params.len() != count {
            return Err(ScodError::DimensionMismatch {
                expected: count,
                actual: params.len(),
            });
        }
        Self::from_params(arch, params)
    }
}
