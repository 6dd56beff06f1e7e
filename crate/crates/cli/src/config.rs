use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scod::distributions::{EnvironmentConfig, StrictInlierMode};
use scod::scorer_models::TrainConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Msp,
    MaxLogit,
    Energy,
    SircL1,
    SircRes,
    PluginBbL1,
    PluginBbRes,
    PluginLb,
    Coupled,
    BayesOracle,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Msp,
        Method::MaxLogit,
        Method::Energy,
        Method::SircL1,
        Method::SircRes,
        Method::PluginBbL1,
        Method::PluginBbRes,
        Method::PluginLb,
        Method::Coupled,
        Method::BayesOracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Msp => "msp",
            Method::MaxLogit => "max-logit",
            Method::Energy => "energy",
            Method::SircL1 => "sirc-l1",
            Method::SircRes => "sirc-res",
            Method::PluginBbL1 => "plugin-bb-l1",
            Method::PluginBbRes => "plugin-bb-res",
            Method::PluginLb => "plugin-lb",
            Method::Coupled => "coupled",
            Method::BayesOracle => "bayes-oracle",
        }
    }

    pub fn parse(name: &str) -> CliResult<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| {
                let known: Vec<&str> = Method::ALL.iter().map(Method::name).collect();
                CliError::Config(format!(
                    "unknown method `{name}` (known: {})",
                    known.join(", ")
                ))
            })
    }

    /// Methods with plug-in inputs `(s_sc, s_ood)`, usable by the budget search.
    pub fn is_plugin(&self) -> bool {
        matches!(
            self,
            Method::PluginBbL1 | Method::PluginBbRes | Method::PluginLb | Method::BayesOracle
        )
    }

    /// Needs the inlier-only classifier.
    pub fn uses_classifier(&self) -> bool {
        matches!(
            self,
            Method::Msp
                | Method::MaxLogit
                | Method::Energy
                | Method::SircL1
                | Method::SircRes
                | Method::PluginBbL1
                | Method::PluginBbRes
        )
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("scod-out")
}

fn default_c_fn() -> f64 {
    0.75
}

fn default_grid_size() -> usize {
    101
}

fn default_strict_fraction() -> f64 {
    0.05
}

fn default_strict_mode() -> StrictInlierMode {
    StrictInlierMode::Auto
}

fn default_hidden() -> usize {
    16
}

fn default_b_rej() -> f64 {
    0.2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub train_inliers: usize,
    pub wild: usize,
    /// Draws from the test distribution, inliers with weight `π*_in`.
    pub test: usize,
    /// Size of the strictly-inlier set as a fraction of `test`.
    #[serde(default = "default_strict_fraction")]
    pub strict_inlier_fraction: f64,
    #[serde(default = "default_strict_mode")]
    pub strict_mode: StrictInlierMode,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
    /// The OOD head reads the classifier's hidden layer instead of its own.
    #[serde(default = "default_shared")]
    pub shared_embedding: bool,
}

fn default_shared() -> bool {
    true
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden_dim: default_hidden(),
            shared_embedding: default_shared(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    pub c_in: f64,
    pub c_out: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SircConfig {
    /// Principal subspace dimension for the residual score.
    #[serde(default)]
    pub residual_dim: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    #[serde(default = "default_b_rej")]
    pub b_rej: f64,
    /// Test inlier fraction assumed by plug-in scores; defaults to `π̂_mix`.
    #[serde(default)]
    pub pi_in_star: Option<f64>,
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            b_rej: default_b_rej(),
            pi_in_star: None,
            lambdas: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
    seeds: Vec<u64>,
    #[serde(default = "default_c_fn")]
    c_fn: f64,
    #[serde(default = "default_grid_size")]
    grid_size: usize,
    #[serde(default)]
    decision_dump: bool,
    #[serde(default)]
    export_logits: bool,
    environment: EnvironmentConfig,
    data: DataConfig,
    #[serde(default)]
    model: ModelConfig,
    #[serde(default)]
    training: Option<TrainConfig>,
    costs: CostConfig,
    #[serde(default)]
    sirc: SircConfig,
    #[serde(default)]
    budget: BudgetConfig,
    methods: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub c_fn: f64,
    pub grid_size: usize,
    pub decision_dump: bool,
    pub export_logits: bool,
    pub environment: EnvironmentConfig,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub training: TrainConfig,
    pub costs: CostConfig,
    pub sirc: SircConfig,
    pub budget: BudgetConfig,
    pub methods: Vec<Method>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let methods = raw
            .methods
            .iter()
            .map(|m| Method::parse(m))
            .collect::<CliResult<Vec<_>>>()?;
        let cfg = Self {
            output_dir: raw.output_dir,
            seeds: raw.seeds,
            c_fn: raw.c_fn,
            grid_size: raw.grid_size,
            decision_dump: raw.decision_dump,
            export_logits: raw.export_logits,
            environment: raw.environment,
            data: raw.data,
            model: raw.model,
            training: raw.training.unwrap_or_default(),
            costs: raw.costs,
            sirc: raw.sirc,
            budget: raw.budget,
            methods,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn validate(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.seeds.is_empty() {
            return bad("`seeds` must list at least one seed");
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return bad("`seeds` contains duplicates");
        }
        if self.methods.is_empty() {
            return bad("`methods` must list at least one method");
        }
        let mut m = self.methods.clone();
        m.sort_unstable();
        m.dedup();
        if m.len() != self.methods.len() {
            return bad("`methods` contains duplicates");
        }
        if !(0.0..=1.0).contains(&self.c_fn) {
            return bad("`c_fn` must lie in [0, 1]");
        }
        if self.grid_size < 2 {
            return bad("`grid_size` must be at least 2");
        }
        if self.data.train_inliers == 0 || self.data.test == 0 {
            return bad("`data.train_inliers` and `data.test` must be positive");
        }
        if !(self.data.strict_inlier_fraction > 0.0 && self.data.strict_inlier_fraction <= 1.0) {
            return bad("`data.strict_inlier_fraction` must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.budget.b_rej) {
            return bad("`budget.b_rej` must lie in [0, 1]");
        }
        if let Some(p) = self.budget.pi_in_star {
            if !(p > 0.0 && p < 1.0) {
                return bad("`budget.pi_in_star` must lie in (0, 1)");
            }
        }
        scod::bayes_rules::CostSpec::new(self.costs.c_in, self.costs.c_out)?;
        Ok(())
    }

    /// Number of strictly-inlier samples drawn per seed.
    pub fn strict_count(&self) -> usize {
        ((self.data.strict_inlier_fraction * self.data.test as f64).ceil() as usize).max(2)
    }

    /// True when some method needs the decoupled scorer, directly or for
    /// the `π̂_mix` default of `π*_in`.
    pub fn needs_decoupled(&self) -> bool {
        self.export_logits
            || self.methods.contains(&Method::PluginLb)
            || (self.budget.pi_in_star.is_none()
                && self
                    .methods
                    .iter()
                    .any(|m| matches!(m, Method::PluginBbL1 | Method::PluginBbRes)))
    }
}
