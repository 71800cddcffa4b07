use std::path::Path;
use std::process::{Command, Output};

use anacp::RunReport;

const SMALL: &str = "d=16,classes=8,train=30,test=10";

fn anacp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anacp"))
        .args(args)
        .env_remove("ANACP_THREADS")
        .output()
        .expect("spawn anacp")
}

fn ok(args: &[&str]) -> String {
    let out = anacp(args);
    assert!(
        out.status.success(),
        "anacp {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn reports_in(dir: &Path) -> Vec<RunReport> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| RunReport::read_json(p).unwrap()).collect()
}

#[test]
fn synth_writes_feature_directory_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        ok(&["synth", "--d", "64", "--classes", "20", "--seed", "0", "--out", dir.to_str().unwrap()]);
    }
    for name in ["train.feat", "test.feat", "manifest.json"] {
        let x = std::fs::read(a.join(name)).unwrap();
        assert_eq!(x, std::fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let (train, test, manifest) = anacp::feature_store::load_feature_dir(&a).unwrap();
    assert_eq!((train.len(), test.len(), train.dim()), (2000, 2000, 64));
    assert_eq!(manifest.class_names.len(), 20);
}

#[test]
fn synth_rejects_invalid_dimension() {
    let tmp = tempfile::tempdir().unwrap();
    let out = anacp(&["synth", "--d", "0", "--out", tmp.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension"));
}

#[test]
fn run_writes_one_report_per_repetition() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    ok(&[
        "run", "--synth", SMALL, "--method", "anacp", "--tasks", "4", "--reps", "3", "--rp-dim", "64", "--out", out,
    ]);
    let reports = reports_in(tmp.path());
    assert_eq!(reports.len(), 3);
    let seeds: Vec<u64> = reports.iter().map(|r| r.stream_seed).collect();
    assert_eq!(seeds, [0, 1, 2]);
    assert!(reports.iter().all(|r| r.config.base_seed == 0 && r.config.rp_dim == 64));

    let csv = std::fs::read_to_string(tmp.path().join("aggregate.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().contains("a_last_std"));
    assert!(lines.next().unwrap().starts_with("anacp(rp_dim=64),3,"));
    assert!(tmp.path().join("runs.csv").exists());
}

#[test]
fn raw_ncm_report_has_no_classifier_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["run", "--synth", SMALL, "--method", "raw_ncm", "--out", tmp.path().to_str().unwrap()]);
    let reports = reports_in(tmp.path());
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0].parameters.classifier, 0);
    assert_eq!(reports[0].parameters.total, 8 * 16);
}

#[test]
fn ablation_sweep_emits_one_row_per_setting() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&[
        "run", "--synth", SMALL, "--tasks", "2", "--rp-dim", "32", "--ablate", "H=1,3", "--out",
        tmp.path().to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(tmp.path().join("aggregate.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].contains("heads=1"));
    assert!(!rows[1].contains("heads"), "heads=3 is the default: {}", rows[1]);
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"alpha": 0.5, "heads": 2, "rp_dim": 48}"#).unwrap();
    let out = tmp.path().join("out");
    ok(&[
        "run", "--synth", SMALL, "--tasks", "2", "--config", cfg.to_str().unwrap(), "--heads", "1", "--out",
        out.to_str().unwrap(),
    ]);
    let r = &reports_in(&out)[0];
    assert_eq!((r.config.heads, r.config.alpha, r.config.rp_dim), (1, 0.5, 48));
}

#[test]
fn invalid_configuration_is_rejected_up_front() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let out = anacp(&["run", "--synth", SMALL, "--heads", "0", "--out", dir]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("heads"));
    let out = anacp(&["run", "--synth", SMALL, "--ablate", "gamma=1,2", "--out", dir]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
    let out = anacp(&["run", "--features", "/nonexistent/features", "--out", dir]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/features"));
}

#[test]
fn partial_failures_are_listed_and_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    // an unregularized ridge on more random features than samples is singular
    let out = anacp(&[
        "run", "--synth", SMALL, "--tasks", "2", "--method", "raw_ncm,rp_ridge", "--lambda-cls", "0", "--rp-dim",
        "1000", "--out", tmp.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("1 run(s) failed"), "{stderr}");
    assert!(stderr.contains("rp_ridge"), "{stderr}");
    assert_eq!(reports_in(tmp.path()).len(), 1);
}

#[test]
fn thread_count_must_be_positive() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_anacp"))
        .args(["run", "--synth", SMALL, "--out", tmp.path().to_str().unwrap()])
        .env("ANACP_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ANACP_THREADS"));
}

fn write_report_with(dir: &Path, name: &str, template: &RunReport, method: &str, a_last: f64) -> String {
    let mut value = serde_json::to_value(template).unwrap();
    value["method"] = method.into();
    value["config"]["method"] = method.into();
    value["a_last"] = a_last.into();
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(&value).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn report_compares_and_names_bad_files() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    ok(&["run", "--synth", SMALL, "--method", "raw_ncm", "--out", runs.to_str().unwrap()]);
    let template = reports_in(&runs).remove(0);

    let base = write_report_with(tmp.path(), "base.json", &template, "incremental_ridge", 90.10);
    let best = write_report_with(tmp.path(), "best.json", &template, "anacp", 92.15);
    let table = ok(&["report", &base, &best]);
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].contains("rel_err_%"));
    assert!(lines[1].starts_with("anacp") && lines[1].trim_end().ends_with("20.71"), "{table}");

    let single = ok(&["report", &best]);
    assert!(!single.contains("rel_err"));

    let broken = tmp.path().join("broken.json");
    std::fs::write(&broken, "{\"method\": ").unwrap();
    let out = anacp(&["report", &best, broken.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.json"));
}
