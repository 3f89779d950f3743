use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qisim::cli::{config_digest, RunRecord, CHARACTERIZE_CSV_HEADER};
use qisim::model::ExperimentConfig;

fn qisim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qisim"))
        .current_dir(dir)
        .env_remove("QISIM_CONFIG")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ledger(dir: &Path) -> Vec<RunRecord> {
    fs::read_to_string(dir.join("qisim-runs.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn characterize_g2_falls_with_mu_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mus = "0.001,0.003,0.005,0.01,0.015,0.02,0.025";
    let o = qisim(dir.path(), &["characterize", "--mu", mus, "--out", "a.csv", "--threads", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = qisim(dir.path(), &["characterize", "--mu", mus, "--out", "b.csv"]);
    assert!(o.status.success());
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CHARACTERIZE_CSV_HEADER));
    let g2: Vec<f64> = lines.map(|l| l.split(',').nth(8).unwrap().parse().unwrap()).collect();
    assert_eq!(g2.len(), 7);
    assert!(g2.windows(2).all(|w| w[1] < w[0]), "{g2:?}");

    let records = ledger(dir.path());
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].command, "characterize");
    assert_eq!(records[0].config_digest, config_digest(&ExperimentConfig::paper_default()));
    assert_eq!(records[0].config_digest, records[1].config_digest);
}

#[test]
fn ledger_is_append_only() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["characterize", "--mu", "0.01", "--dwell-s", "1", "--out", "c.csv"];
    assert!(qisim(dir.path(), &args).status.success());
    let first = fs::read_to_string(dir.path().join("qisim-runs.jsonl")).unwrap();
    assert!(qisim(dir.path(), &args).status.success());
    let second = fs::read_to_string(dir.path().join("qisim-runs.jsonl")).unwrap();
    assert!(second.starts_with(&first));
    assert_eq!(second.lines().count(), 2);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qisim(dir.path(), &["characterize", "--out", "x.csv"]).status.code(), Some(2));
    assert_eq!(qisim(dir.path(), &["characterize", "--mu", "", "--out", "x.csv"]).status.code(), Some(2));
    assert_eq!(qisim(dir.path(), &["frobnicate"]).status.code(), Some(2));
    let o = qisim(dir.path(), &["sweep", "--variable", "colour", "--values", "1", "--out", "s.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(qisim(dir.path(), &["--help"]).status.success());
}

#[test]
fn invalid_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::paper_default();
    cfg.source.mu = -0.5;
    fs::write(dir.path().join("bad.json"), serde_json::to_string(&cfg).unwrap()).unwrap();
    let o = qisim(dir.path(), &["--config", "bad.json", "characterize", "--mu", "0.01", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("mu"), "{}", stderr(&o));

    fs::write(dir.path().join("junk.json"), "{ not json").unwrap();
    let o = qisim(dir.path(), &["--config", "junk.json", "characterize", "--mu", "0.01", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::paper_default().with_mu(0.02);
    fs::write(dir.path().join("env.json"), cfg.to_json().unwrap()).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qisim"))
        .current_dir(dir.path())
        .env("QISIM_CONFIG", "env.json")
        .args(["characterize", "--mu", "0.01", "--dwell-s", "1", "--out", "e.csv"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(ledger(dir.path())[0].config_digest, config_digest(&cfg));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = qisim(
        dir.path(),
        &["characterize", "--mu", "0.01", "--dwell-s", "1", "--out", "missing/dir/x.csv", "--ledger", "l.jsonl"],
    );
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = qisim(
        dir.path(),
        &["sweep", "--variable", "background", "--values", "1000,100000", "--dwell-s", "200", "--out", "s.csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("value,n_in_singles"));
    assert_eq!(ledger(dir.path())[0].summary["rows_ok"], 2.0);

    // Every row invalid: nothing succeeded.
    let o = qisim(dir.path(), &["sweep", "--variable", "mu", "--values", "-1,-2", "--dwell-s", "4", "--out", "t.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

fn write_scene(path: &Path) {
    let mut pgm = String::from("P2\n# two-level test scene\n16 16\n255\n");
    for r in 0..16 {
        let row: Vec<&str> = (0..16)
            .map(|c| if (4..12).contains(&r) && (4..12).contains(&c) { "255" } else { "0" })
            .collect();
        pgm.push_str(&row.join(" "));
        pgm.push('\n');
    }
    fs::write(path, pgm).unwrap();
}

#[test]
fn image_under_jamming_favours_qi() {
    let dir = tempfile::tempdir().unwrap();
    write_scene(&dir.path().join("scene.pgm"));
    // Long per-pixel dwell so the contrast estimates are well resolved.
    let args = [
        "image", "--scene", "scene.pgm", "--dwell-s", "3000", "--mu", "0.0079", "--background-hz", "14000", "--out", "img",
    ];
    let o = qisim(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["img_ci.pgm", "img_qi.pgm", "img_ci.csv", "img_qi.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let pgm = fs::read_to_string(dir.path().join("img_qi.pgm")).unwrap();
    assert!(pgm.starts_with("P2\n31 31\n65535\n"));
    let summary = &ledger(dir.path())[0].summary;
    assert!(summary["qi_contrast"] > summary["ci_contrast"], "{summary:?}");

    let first = fs::read(dir.path().join("img_ci.csv")).unwrap();
    assert!(qisim(dir.path(), &args).status.success());
    assert_eq!(first, fs::read(dir.path().join("img_ci.csv")).unwrap());
}

#[test]
fn image_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = qisim(dir.path(), &["image", "--scene", "nope.pgm", "--out", "img"]);
    assert_eq!(o.status.code(), Some(4));
    fs::write(dir.path().join("bad.pgm"), "P2\n2 2\n255\n0 0 0\n").unwrap();
    let o = qisim(dir.path(), &["image", "--scene", "bad.pgm", "--out", "img"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("bad scene"), "{}", stderr(&o));
}

#[test]
fn tags_then_correlate() {
    let dir = tempfile::tempdir().unwrap();
    for file in ["t.qitt", "t.csv"] {
        let o = qisim(dir.path(), &["--preset", "bare-source", "tags", "--pulses", "200000", "--out", file]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = qisim(dir.path(), &["--preset", "bare-source", "correlate", "--input", "t.qitt", "--out", "a.json"]);
    let b = qisim(dir.path(), &["--preset", "bare-source", "correlate", "--input", "t.csv", "--out", "b.json"]);
    assert!(a.status.success() && b.status.success());
    let a = fs::read_to_string(dir.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b.json")).unwrap());
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["n_pulses"], 200000.0);
    assert!(v["g2"].as_f64().unwrap() > 10.0);
}
