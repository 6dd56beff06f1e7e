use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::environment::ScodEnvironment;
use crate::{par, Result, ScodError};

/// Samples per independent generator stream. Stream `k` of seed `s` always
/// produces samples `k·CHUNK .. (k+1)·CHUNK`, so output does not depend on
/// how chunks are scheduled across threads.
pub const SAMPLING_CHUNK: usize = 1024;

/// Which distribution to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Inlier,
    Outlier,
    Wild,
    Test,
}

/// Provenance of a sample. Synthetic draws always carry their true origin;
/// `Wild` marks unlabeled mixture data whose origin is unknown (ingested
/// files).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Inlier,
    Outlier,
    Wild,
    StrictInlier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: Option<usize>,
    pub origin: Origin,
}

impl Sample {
    pub fn is_inlier(&self) -> bool {
        matches!(self.origin, Origin::Inlier | Origin::StrictInlier)
    }
}

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_one(env: &ScodEnvironment, source: Source, rng: &mut ChaCha8Rng) -> Sample {
    let inlier_weight = match source {
        Source::Inlier => 1.0,
        Source::Outlier => 0.0,
        Source::Wild => env.pi_mix(),
        Source::Test => env.pi_in_star(),
    };
    let from_inlier = match source {
        Source::Inlier => true,
        Source::Outlier => false,
        _ => rng.random::<f64>() < inlier_weight,
    };
    if from_inlier {
        let (features, label) = env.inlier().sample_labeled(rng);
        Sample {
            features,
            label: Some(label),
            origin: Origin::Inlier,
        }
    } else {
        Sample {
            features: env.outlier().sample(rng),
            label: None,
            origin: Origin::Outlier,
        }
    }
}

/// Draws `n` samples. Mixture sources (`Wild`, `Test`) flip a coin per
/// sample and record the true component in `origin`.
pub fn sample(env: &ScodEnvironment, source: Source, n: usize, seed: u64) -> Vec<Sample> {
    let chunks = par::map_chunks(n, SAMPLING_CHUNK, |k, range| {
        let mut rng = stream_rng(seed, k as u64);
        range
            .map(|_| draw_one(env, source, &mut rng))
            .collect::<Vec<_>>()
    });
    chunks.into_iter().flatten().collect()
}

/// How the strictly-inlier set is realised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrictInlierMode {
    /// Rejection-sample `P_in` outside the outlier support. Exact, but only
    /// available when the outlier density vanishes somewhere.
    SupportExcluded,
    /// `P_in` draws where `P_out(x) ≤ 10⁻³ · P_in(x)`. An approximation for
    /// outlier densities that never vanish.
    Surrogate,
    /// `SupportExcluded` when possible, otherwise `Surrogate`.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrictInlierSet {
    pub samples: Vec<Sample>,
    /// True when the set came from the surrogate realisation.
    pub surrogate: bool,
}

const MAX_REJECTION_ATTEMPTS_PER_SAMPLE: usize = 10_000;

/// Largest `P_out/P_in` accepted by the surrogate realisation.
pub const SURROGATE_MAX_RATIO: f64 = 1e-3;

/// Draws `n` samples certified (or flagged) as strictly inlier.
pub fn sample_strict_inliers(
    env: &ScodEnvironment,
    n: usize,
    seed: u64,
    mode: StrictInlierMode,
) -> Result<StrictInlierSet> {
    let exact = match mode {
        StrictInlierMode::SupportExcluded => {
            if env.outlier().has_full_support() {
                return Err(ScodError::InvalidConfiguration(
                    "support-excluded strict inliers need an outlier density with bounded support"
                        .into(),
                ));
            }
            true
        }
        StrictInlierMode::Surrogate => false,
        StrictInlierMode::Auto => !env.outlier().has_full_support(),
    };
    let chunks = par::map_chunks(n, SAMPLING_CHUNK, |k, range| -> Result<Vec<Sample>> {
        let mut rng = stream_rng(seed, k as u64);
        let want = range.len();
        let mut out = Vec::with_capacity(want);
        let mut attempts = 0usize;
        while out.len() < want {
            attempts += 1;
            if attempts > MAX_REJECTION_ATTEMPTS_PER_SAMPLE * want {
                return Err(ScodError::InvalidConfiguration(
                    "inlier mass outside the outlier support is too small to sample strict inliers"
                        .into(),
                ));
            }
            let (features, label) = env.inlier().sample_labeled(&mut rng);
            let keep = if exact {
                env.outlier().vanishes_at(&features)
            } else {
                env.log_p_out(&features) - env.log_p_in(&features) <= SURROGATE_MAX_RATIO.ln()
            };
            if !keep {
                continue;
            }
            out.push(Sample {
                features,
                label: Some(label),
                origin: Origin::StrictInlier,
            });
        }
        Ok(out)
    });
    let mut samples = Vec::with_capacity(n);
    for chunk in chunks {
        samples.extend(chunk?);
    }
    Ok(StrictInlierSet {
        samples,
        surrogate: !exact,
    })
}
