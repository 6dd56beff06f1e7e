use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scod::distributions::{sample, EnvironmentConfig, ScodEnvironment, Source};
use scod::scenarios;

fn scod(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scod"));
    cmd.args(args).env_remove("SCOD_OUTPUT_DIR");
    if let Some(dir) = out {
        cmd.arg("--output-dir").arg(dir);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(format!("{name}.toml"))
}

/// The wild-mixture demo shrunk to one seed and a few thousand samples.
fn small_config(dir: &Path, edits: &[(&str, toml::Value)]) -> PathBuf {
    let mut cfg: toml::Table =
        toml::from_str(&std::fs::read_to_string(config_path("wild-mixture")).unwrap()).unwrap();
    cfg.insert(
        "seeds".into(),
        toml::Value::Array(vec![toml::Value::Integer(7)]),
    );
    cfg.insert(
        "methods".into(),
        toml::Value::try_from(["msp", "energy", "plugin-lb", "bayes-oracle"]).unwrap(),
    );
    let data = cfg["data"].as_table().unwrap().clone();
    let mut data = data;
    data.insert("train_inliers".into(), 1500.into());
    data.insert("wild".into(), 1500.into());
    data.insert("test".into(), 3000.into());
    cfg.insert("data".into(), data.into());
    let mut training = cfg["training"].as_table().unwrap().clone();
    training.insert("epochs".into(), 10.into());
    training.insert(
        "anneal_epochs".into(),
        toml::Value::try_from([7, 9]).unwrap(),
    );
    cfg.insert("training".into(), training.into());
    for (key, value) in edits {
        match key.split_once('.') {
            Some((table, field)) => {
                cfg.get_mut(table)
                    .unwrap()
                    .as_table_mut()
                    .unwrap()
                    .insert(field.into(), value.clone());
            }
            None => {
                cfg.insert(key.to_string(), value.clone());
            }
        }
    }
    let path = dir.join("config.toml");
    std::fs::write(&path, toml::to_string(&cfg).unwrap()).unwrap();
    path
}

fn read_csv(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn run_writes_curves_summary_and_exports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(
        tmp.path(),
        &[
            ("export_logits", true.into()),
            ("decision_dump", true.into()),
        ],
    );
    let out = tmp.path().join("out");
    let o = scod(&["run", cfg.to_str().unwrap()], Some(&out));
    assert!(o.status.success(), "{}", stderr(&o));

    let (header, rows) = read_csv(&out.join("plugin-lb/seed-7.csv"));
    assert_eq!(
        header,
        "target_fraction,realized_fraction,joint_risk,inlier_accuracy,ood_precision,ood_recall"
    );
    assert_eq!(rows.len(), 101);
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1]));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for method in ["msp", "energy", "plugin-lb", "bayes-oracle"] {
        for metric in ["auc_rc", "auc_roc", "fpr_at_95tpr"] {
            assert!(
                summary["methods"][method][metric]["mean"].is_f64(),
                "{method} {metric}"
            );
        }
    }

    // Recompute the curve from the per-sample decision dump.
    let dump = std::fs::read_to_string(out.join("plugin-lb/seed-7-decisions.csv")).unwrap();
    let mut samples: Vec<(Option<usize>, usize, f64)> = dump
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (
                f[1].parse().ok(),
                f[2].parse().unwrap(),
                f[3].parse().unwrap(),
            )
        })
        .collect();
    samples.sort_by(|a, b| b.2.total_cmp(&a.2));
    let n = samples.len();
    for row in &rows {
        let m = (row[1] * n as f64).round() as usize;
        let kept = &samples[m..];
        let wrong = kept
            .iter()
            .filter(|s| s.0.is_some_and(|y| y != s.1))
            .count() as f64;
        let outliers = kept.iter().filter(|s| s.0.is_none()).count() as f64;
        let risk = if kept.is_empty() {
            0.0
        } else {
            (0.25 * wrong + 0.75 * outliers) / kept.len() as f64
        };
        assert!(
            (risk - row[2]).abs() <= 1e-12,
            "fraction {}: {risk} vs {}",
            row[1],
            row[2]
        );
    }

    // The exported logits reproduce the run's plug-in curve.
    let logits = out.join("logits/seed-7.txt");
    let o = scod(&["ingest-check", logits.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let curve_out = tmp.path().join("curve");
    let o = scod(
        &[
            "curve",
            logits.to_str().unwrap(),
            "--method",
            "plugin-lb",
            "--c-fn",
            "0.75",
            "--pi-in-star",
            "0.5",
        ],
        Some(&curve_out),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, replay) = read_csv(&curve_out.join("plugin-lb.csv"));
    assert_eq!(replay.len(), rows.len());
    for (a, b) in replay.iter().zip(&rows) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-9, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn output_dir_env_var_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(
        tmp.path(),
        &[("methods", toml::Value::try_from(["msp"]).unwrap())],
    );
    let out = tmp.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_scod"))
        .args(["run", cfg.to_str().unwrap()])
        .current_dir(tmp.path())
        .env("SCOD_OUTPUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("msp/seed-7.csv").exists());
    assert!(!tmp.path().join("scod-out").exists());
}

#[test]
fn budget_reports_a_search_per_plugin_method() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), &[]);
    let out = tmp.path().join("out");
    let o = scod(&["budget", cfg.to_str().unwrap()], Some(&out));
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("plugin-lb seed 7:"));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("budget/plugin-lb/seed-7.json")).unwrap(),
    )
    .unwrap();
    assert!(
        report["search"]["best"]["abstention"].as_f64().unwrap() <= 0.2
            || report["search"]["feasible"] == false
    );
}

#[test]
fn config_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(
        tmp.path(),
        &[(
            "methods",
            toml::Value::try_from(["msp", "softmax-magic"]).unwrap(),
        )],
    );
    let o = scod(&["run", cfg.to_str().unwrap()], Some(tmp.path()));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("softmax-magic"));

    let cfg = small_config(tmp.path(), &[("seeds", toml::Value::Array(Vec::new()))]);
    let o = scod(&["run", cfg.to_str().unwrap()], Some(tmp.path()));
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let missing = tmp.path().join("nope.toml");
    let o = scod(&["run", missing.to_str().unwrap()], Some(tmp.path()));
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn data_errors_exit_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    let o = scod(&["ingest-check", empty.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3));

    let bad = tmp.path().join("bad.txt");
    std::fs::write(
        &bad,
        "scod-logits v1 L=2 E=1\nin,0,1.5,-0.5,0.3,2\nin,1,1.5,0.3,2\n",
    )
    .unwrap();
    let o = scod(&["ingest-check", bad.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("record 2"), "{}", stderr(&o));

    let o = scod(
        &[
            "curve",
            bad.to_str().unwrap(),
            "--method",
            "msp",
            "--c-fn",
            "0.5",
        ],
        Some(tmp.path()),
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn diverging_training_exits_with_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(
        tmp.path(),
        &[
            ("training.learning_rate", 1.7e308.into()),
            ("methods", toml::Value::try_from(["plugin-lb"]).unwrap()),
        ],
    );
    let o = scod(&["run", cfg.to_str().unwrap()], Some(tmp.path()));
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

fn assert_same_environment(a: &ScodEnvironment, b: &ScodEnvironment) {
    assert_eq!(a.pi_in_star(), b.pi_in_star());
    assert_eq!(a.pi_mix(), b.pi_mix());
    assert_eq!(a.num_classes(), b.num_classes());
    for s in sample(a, Source::Test, 500, 3)
        .iter()
        .chain(&sample(a, Source::Wild, 500, 4))
    {
        let x = &s.features;
        assert_eq!(a.log_p_in(x), b.log_p_in(x));
        assert_eq!(a.log_p_out(x), b.log_p_out(x));
        assert_eq!(a.posterior(x).unwrap(), b.posterior(x).unwrap());
    }
}

#[test]
fn bundled_configs_describe_the_reference_scenarios() {
    let env_of = |name: &str| {
        let table: toml::Table =
            toml::from_str(&std::fs::read_to_string(config_path(name)).unwrap()).unwrap();
        let cfg: EnvironmentConfig = table["environment"].clone().try_into().unwrap();
        cfg.build().unwrap()
    };
    assert_same_environment(&env_of("open-set"), &scenarios::open_set().unwrap());
    assert_same_environment(
        &env_of("wild-mixture"),
        &scenarios::wild_mixture(0.1).unwrap(),
    );
    assert_same_environment(
        &env_of("uniform-outlier"),
        &scenarios::uniform_outlier().unwrap(),
    );
}
