use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use scod::bayes_rules::BudgetSpec;
use scod::distributions::Origin;
use scod::metrics::EvaluationSet;
use scod::par;
use scod::plugin_rejectors::{budget_search, default_lambda_grid};

mod config;
mod error;
mod logits;
mod methods;
mod pipeline;
mod report;

use config::{ExperimentConfig, Method};
use error::{CliError, CliResult};
use logits::LogitsFile;
use methods::{score_records, ScoreOptions};
use report::{evaluate, mean_std, method_json, write_file, write_json};

#[derive(Parser)]
#[command(
    name = "scod",
    version,
    about = "Selective classification with out-of-distribution detection"
)]
struct Cli {
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true, env = "SCOD_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every method of an experiment config over its seeds.
    Run { config: PathBuf },
    /// Validate a logits file and print its record counts.
    IngestCheck { logits: PathBuf },
    /// Risk-coverage curve of one method on an ingested logits file.
    Curve {
        logits: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long)]
        c_fn: f64,
        /// Test inlier fraction for plug-in scores; defaults to the
        /// mixture-weight estimate from the strict_in records.
        #[arg(long)]
        pi_in_star: Option<f64>,
        #[arg(long, default_value_t = 101)]
        grid_size: usize,
        #[arg(long)]
        residual_dim: Option<usize>,
    },
    /// Lagrangian search for the abstention-budget formulation.
    Budget { config: PathBuf },
    /// Run a bundled scenario.
    Demo { scenario: Scenario },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    OpenSet,
    UniformOutlier,
    WildMixture,
}

impl Scenario {
    fn config_text(self) -> &'static str {
        match self {
            Scenario::OpenSet => include_str!("../configs/open-set.toml"),
            Scenario::UniformOutlier => include_str!("../configs/uniform-outlier.toml"),
            Scenario::WildMixture => include_str!("../configs/wild-mixture.toml"),
        }
    }
}

fn output_dir(cli_dir: &Option<PathBuf>, cfg_dir: &Path) -> PathBuf {
    cli_dir.clone().unwrap_or_else(|| cfg_dir.to_path_buf())
}

fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let env = cfg
        .environment
        .build()
        .map_err(|e| CliError::Config(format!("environment: {e}")))?;
    let runs = par::map(&cfg.seeds, |&seed| {
        pipeline::run_seed(cfg, &env, &cfg.methods, seed)
    })
    .into_iter()
    .collect::<CliResult<Vec<_>>>()?;

    let mut per_method: BTreeMap<&str, Vec<[f64; 3]>> = BTreeMap::new();
    for run in &runs {
        for (method, scores) in &run.scores {
            let e = evaluate(scores, &run.eval, cfg.c_fn, cfg.grid_size)?;
            let dir = out.join(method.name());
            write_file(
                &dir.join(format!("seed-{}.csv", run.seed)),
                &e.curve.to_csv(),
            )?;
            write_json(
                &dir.join(format!("seed-{}.json", run.seed)),
                &method_json(method.name(), Some(run.seed), scores, &e),
            )?;
            if cfg.decision_dump {
                write_file(
                    &dir.join(format!("seed-{}-decisions.csv", run.seed)),
                    &report::decisions_csv(&run.eval, scores),
                )?;
            }
            per_method.entry(method.name()).or_default().push([
                e.curve.auc_rc,
                e.ood.auc_roc,
                e.ood.fpr_at_95tpr,
            ]);
        }
        if let Some(file) = &run.logits {
            write_file(
                &out.join("logits").join(format!("seed-{}.txt", run.seed)),
                &file.to_text(),
            )?;
        }
    }

    let mut summary = serde_json::Map::new();
    println!(
        "{:<14} {:>22} {:>22} {:>22}",
        "method", "auc_rc", "auc_roc", "fpr_at_95tpr"
    );
    for method in &cfg.methods {
        let rows = &per_method[method.name()];
        let stats: Vec<_> = (0..3)
            .map(|k| mean_std(&rows.iter().map(|r| r[k]).collect::<Vec<_>>()))
            .collect();
        println!(
            "{:<14} {:>22} {:>22} {:>22}",
            method.name(),
            format!("{:.4} ± {:.4}", stats[0].mean, stats[0].std),
            format!("{:.4} ± {:.4}", stats[1].mean, stats[1].std),
            format!("{:.4} ± {:.4}", stats[2].mean, stats[2].std),
        );
        summary.insert(
            method.name().into(),
            json!({ "auc_rc": stats[0], "auc_roc": stats[1], "fpr_at_95tpr": stats[2] }),
        );
    }
    write_json(
        &out.join("summary.json"),
        &json!({ "seeds": cfg.seeds, "c_fn": cfg.c_fn, "grid_size": cfg.grid_size, "methods": summary }),
    )?;
    println!("wrote {}", out.display());
    Ok(())
}

fn run_budget(cfg: &ExperimentConfig, out: &Path) -> CliResult<()> {
    let env = cfg
        .environment
        .build()
        .map_err(|e| CliError::Config(format!("environment: {e}")))?;
    let methods: Vec<Method> = cfg
        .methods
        .iter()
        .copied()
        .filter(Method::is_plugin)
        .collect();
    for m in cfg.methods.iter().filter(|m| !m.is_plugin()) {
        eprintln!(
            "skipping `{}`: the budget search needs plug-in estimates",
            m.name()
        );
    }
    if methods.is_empty() {
        return Err(CliError::Config(
            "no plug-in method to run the budget search on".into(),
        ));
    }
    let runs = par::map(&cfg.seeds, |&seed| {
        pipeline::run_seed(cfg, &env, &methods, seed)
    })
    .into_iter()
    .collect::<CliResult<Vec<_>>>()?;
    for run in &runs {
        for (method, scores) in &run.scores {
            let inputs = scores.plugin.as_ref().expect("plug-in inputs");
            let pi = scores.pi_in_star.expect("plug-in prior");
            let budget = BudgetSpec::new(cfg.c_fn, cfg.budget.b_rej, pi)?;
            let grid = cfg
                .budget
                .lambdas
                .clone()
                .unwrap_or_else(|| default_lambda_grid(&budget));
            let search = budget_search(inputs, &run.eval, &budget, &grid)?;
            println!(
                "{} seed {}: lambda={} abstention={} objective={} feasible={}",
                method.name(),
                run.seed,
                search.best.lambda,
                search.best.abstention,
                search.best.objective,
                search.feasible
            );
            write_json(
                &out.join("budget")
                    .join(method.name())
                    .join(format!("seed-{}.json", run.seed)),
                &json!({ "method": method.name(), "seed": run.seed, "b_rej": cfg.budget.b_rej, "pi_in_star": pi, "search": search }),
            )?;
        }
    }
    Ok(())
}

fn load_logits(path: &Path) -> CliResult<LogitsFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    LogitsFile::parse(&text)
}

fn ingest_check(path: &Path) -> CliResult<()> {
    let file = load_logits(path)?;
    let with_ood = file
        .records
        .iter()
        .filter(|r| r.ood_logit.is_some())
        .count();
    println!(
        "ok: L={} E={} records={} in={} out={} wild={} strict_in={} with_ood_logit={}",
        file.num_classes,
        file.embedding_dim,
        file.records.len(),
        file.count(Origin::Inlier),
        file.count(Origin::Outlier),
        file.count(Origin::Wild),
        file.count(Origin::StrictInlier),
        with_ood
    );
    Ok(())
}

struct CurveArgs<'a> {
    path: &'a Path,
    method: &'a str,
    c_fn: f64,
    pi_in_star: Option<f64>,
    grid_size: usize,
    residual_dim: Option<usize>,
}

fn curve(args: CurveArgs<'_>, out: &Path) -> CliResult<()> {
    let method = Method::parse(args.method)?;
    if !(0.0..=1.0).contains(&args.c_fn) {
        return Err(CliError::Config("--c-fn must lie in [0, 1]".into()));
    }
    if args.pi_in_star.is_some_and(|p| !(p > 0.0 && p < 1.0)) {
        return Err(CliError::Config("--pi-in-star must lie in (0, 1)".into()));
    }
    let file = load_logits(args.path)?;
    let test: Vec<_> = file
        .records
        .iter()
        .filter(|r| matches!(r.origin, Origin::Inlier | Origin::Outlier))
        .cloned()
        .collect();
    let strict: Vec<_> = file
        .records
        .iter()
        .filter(|r| r.origin == Origin::StrictInlier)
        .cloned()
        .collect();
    if test.is_empty() {
        return Err(CliError::Data(
            "no `in` or `out` records to evaluate".into(),
        ));
    }
    let eval = EvaluationSet::new(test.iter().map(|r| r.label).collect())?;
    let opts = ScoreOptions {
        c_fn: args.c_fn,
        pi_in_star: args.pi_in_star,
        residual_dim: args.residual_dim,
    };
    let scores = score_records(method, &test, &strict, &opts)?;
    let e = evaluate(&scores, &eval, args.c_fn, args.grid_size)?;
    write_file(
        &out.join(format!("{}.csv", method.name())),
        &e.curve.to_csv(),
    )?;
    write_json(
        &out.join(format!("{}.json", method.name())),
        &method_json(method.name(), None, &scores, &e),
    )?;
    println!(
        "{}: auc_rc={} auc_roc={} fpr_at_95tpr={}",
        method.name(),
        e.curve.auc_rc,
        e.ood.auc_roc,
        e.ood.fpr_at_95tpr
    );
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            run_experiment(&cfg, &output_dir(&cli.output_dir, &cfg.output_dir))
        }
        Command::Budget { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            run_budget(&cfg, &output_dir(&cli.output_dir, &cfg.output_dir))
        }
        Command::Demo { scenario } => {
            let cfg = ExperimentConfig::from_toml_str(scenario.config_text())?;
            run_experiment(&cfg, &output_dir(&cli.output_dir, &cfg.output_dir))
        }
        Command::IngestCheck { logits } => ingest_check(&logits),
        Command::Curve {
            logits,
            method,
            c_fn,
            pi_in_star,
            grid_size,
            residual_dim,
        } => {
            let out = output_dir(&cli.output_dir, Path::new("scod-out/curve"));
            curve(
                CurveArgs {
                    path: &logits,
                    method: &method,
                    c_fn,
                    pi_in_star,
                    grid_size,
                    residual_dim,
                },
                &out,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("scod: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
