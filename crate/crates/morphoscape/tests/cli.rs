use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use morphoscape::sweep::{read_metrics, write_metrics};
use morphoscape::{RunConfig, Scale};

const TINY: &str = r#"{
  "grid": {"design_bins": 3, "weight_bins": 7},
  "sim": {"max_steps": 1500},
  "train": {"budget": 60, "seeds": [0, 1], "sample": {"stratified": {"per_quartile": 1}}},
  "coopt": {"budget": 80, "seeds": [0, 1, 2], "dtw_bin_width": 20}
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_morphoscape"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    let out = bin()
        .args(args)
        .arg("--config")
        .arg(dir.join("cfg.json"))
        .output()
        .expect("binary runs");
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), TINY).unwrap();
    dir
}

fn out_arg(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn pipeline(dir: &Path, name: &str, workers: &str) -> PathBuf {
    let out = out_arg(dir, name);
    for stage in ["sweep", "train", "coopt", "report"] {
        let o = run(dir, &[stage, "--out", &out, "--workers", workers]);
        assert_eq!(o.status.code(), Some(0), "{stage}");
    }
    dir.join(name)
}

fn read(p: &Path) -> Vec<u8> {
    fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

const TABLES: [&str; 9] = [
    "metrics.csv",
    "training.csv",
    "efficiency.csv",
    "correlations.csv",
    "coopt/summary.csv",
    "coopt/mann_whitney.csv",
    "coopt/success_curve.csv",
    "coopt/dtw_curve.csv",
    "report.json",
];

#[test]
fn worker_count_never_changes_outputs() {
    let dir = setup();
    let a = pipeline(dir.path(), "one", "1");
    let b = pipeline(dir.path(), "three", "3");
    for t in TABLES {
        assert_eq!(read(&a.join(t)), read(&b.join(t)), "{t}");
    }
    for seed in 0..3 {
        for mode in ["free", "fixed"] {
            let f = format!("coopt/{mode}_{seed}.csv");
            assert_eq!(read(&a.join(&f)), read(&b.join(&f)), "{f}");
        }
    }

    // Shapes: 81 designs, 4 sampled x 4 methods x 2 seeds, 8 correlations,
    // 80 / 20 DTW bins.
    let lines = |t: &str| String::from_utf8(read(&a.join(t))).unwrap().lines().count() - 1;
    assert_eq!(lines("metrics.csv"), 81);
    assert_eq!(lines("training.csv"), 32);
    assert_eq!(lines("efficiency.csv"), 16);
    assert_eq!(lines("correlations.csv"), 8);
    assert_eq!(lines("coopt/summary.csv"), 6);
    assert_eq!(lines("coopt/dtw_curve.csv"), 4);
    assert_eq!(lines("coopt/success_curve.csv"), 80);
    assert!(!read(&a.join("metrics.csv")).contains(&b'\r'));

    let report: serde_json::Value = serde_json::from_slice(&read(&a.join("report.json"))).unwrap();
    for key in ["best_ml_design", "correlations", "u_test", "dtw_trend"] {
        assert!(report.get(key).is_some(), "{key}");
    }
    assert_eq!(report["u_test"]["n1"], 3);

    // Rerunning a finished stage without --resume rewrites identical bytes.
    let before = read(&a.join("metrics.csv"));
    assert_eq!(run(dir.path(), &["sweep", "--out", &out_arg(dir.path(), "one")]).status.code(), Some(0));
    assert_eq!(read(&a.join("metrics.csv")), before);
}

#[test]
fn interrupted_sweep_resumes_to_the_same_table() {
    let dir = setup();
    let full = out_arg(dir.path(), "full");
    assert!(run(dir.path(), &["sweep", "--out", &full]).status.success());
    let expected = read(&dir.path().join("full/metrics.csv"));

    let part = dir.path().join("part");
    assert!(run(dir.path(), &["sweep", "--out", &out_arg(dir.path(), "part")]).status.success());
    // Keep the header and five records, then a torn sixth; drop the outputs.
    let ckpt = part.join("sweep.ckpt");
    let mut bytes = read(&ckpt);
    bytes.truncate(48 + 5 * 36 + 11);
    fs::write(&ckpt, bytes).unwrap();
    fs::remove_file(part.join("metrics.csv")).unwrap();
    fs::remove_file(part.join("sweep.done")).unwrap();

    let o = run(dir.path(), &["sweep", "--out", &out_arg(dir.path(), "part"), "--resume"]);
    assert!(o.status.success());
    assert_eq!(read(&part.join("metrics.csv")), expected);
}

#[test]
fn exit_codes() {
    let dir = setup();
    let out = out_arg(dir.path(), "o");
    let code = |o: Output| o.status.code();

    assert_eq!(code(bin().args(["sweep", "--scale", "huge"]).output().unwrap()), Some(2));
    fs::write(dir.path().join("bad.json"), r#"{"grid": {"bins": 3}}"#).unwrap();
    let bad = bin()
        .args(["sweep", "--out", &out, "--config"])
        .arg(dir.path().join("bad.json"))
        .output()
        .unwrap();
    assert_eq!(code(bad), Some(2));
    fs::write(dir.path().join("dup.json"), r#"{"coopt": {"seeds": [1, 1]}}"#).unwrap();
    let dup = bin()
        .args(["coopt", "--out", &out, "--config"])
        .arg(dir.path().join("dup.json"))
        .output()
        .unwrap();
    assert_eq!(code(dup), Some(2));

    assert_eq!(code(run(dir.path(), &["train", "--out", &out])), Some(4));
    assert_eq!(code(run(dir.path(), &["report", "--out", &out])), Some(4));

    assert_eq!(code(run(dir.path(), &["sweep", "--out", &out])), Some(0));
    fs::write(dir.path().join("other.json"), r#"{"grid": {"design_bins": 3, "weight_bins": 5}}"#).unwrap();
    let other = bin()
        .args(["sweep", "--resume", "--out", &out, "--config"])
        .arg(dir.path().join("other.json"))
        .output()
        .unwrap();
    assert_eq!(code(other), Some(3));

    fs::write(dir.path().join("o/metrics.csv"), "l1x,l1y\n0,0\n").unwrap();
    assert_eq!(code(run(dir.path(), &["train", "--out", &out])), Some(4));

    assert_eq!(code(run(dir.path(), &["coopt", "--out", &out])), Some(0));
    fs::write(dir.path().join("o/coopt/runs/free_1.json"), "{\"seed\": 1, ").unwrap();
    assert_eq!(code(run(dir.path(), &["coopt", "--out", &out, "--resume"])), Some(4));
    // Without --resume the corrupt record is simply recomputed.
    assert_eq!(code(run(dir.path(), &["coopt", "--out", &out])), Some(0));
}

#[test]
fn coopt_resume_reuses_finished_runs() {
    let dir = setup();
    let out = out_arg(dir.path(), "c");
    assert!(run(dir.path(), &["coopt", "--out", &out]).status.success());
    let summary = read(&dir.path().join("c/coopt/summary.csv"));
    fs::remove_file(dir.path().join("c/coopt/fixed_2.csv")).unwrap();
    fs::remove_file(dir.path().join("c/coopt/runs/free_0.json")).unwrap();
    fs::remove_file(dir.path().join("c/coopt.done")).unwrap();
    assert!(run(dir.path(), &["coopt", "--out", &out, "--resume"]).status.success());
    assert_eq!(read(&dir.path().join("c/coopt/summary.csv")), summary);
    assert!(dir.path().join("c/coopt/fixed_2.csv").exists());
}

#[test]
fn metrics_table_round_trips() {
    let cfg = RunConfig::from_json(TINY, Some(Scale::Desk)).unwrap();
    let spec = cfg.grid_spec();
    let envs = morphoscape_core::default_environments();
    let metrics = morphoscape_core::landscape::sweep(&spec, &envs, &cfg.sim_config()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    write_metrics(&path, &metrics, 4).unwrap();
    assert_eq!(read_metrics(&path, &spec, 4).unwrap(), metrics);
}
