use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures")
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        if e.file_type().unwrap().is_dir() {
            if e.file_name() != "out" {
                copy_dir(&e.path(), &to.join(e.file_name()));
            }
        } else {
            std::fs::copy(e.path(), to.join(e.file_name())).unwrap();
        }
    }
}

fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixtures(), dir.path());
    dir
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finmwe"))
        .arg("--config")
        .arg(dir.join("config.toml"))
        .args(args)
        .output()
        .unwrap()
}

fn counts(out: &Output) -> BTreeMap<String, f64> {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(k, v)| (k.to_string(), v.parse().unwrap()))
        .collect()
}

fn edit_config(dir: &Path, from: &str, to: &str) {
    let path = dir.join("config.toml");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains(from), "config has no '{from}'");
    std::fs::write(&path, text.replacen(from, to, 1)).unwrap();
}

#[test]
fn missing_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["extract"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn missing_corpus_is_reported() {
    let dir = workspace();
    edit_config(dir.path(), "corpus = \"filings\"", "corpus = \"nowhere\"");
    let out = run(dir.path(), &["extract"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere"));
}

#[test]
fn empty_corpus_gives_zero_counts() {
    let dir = workspace();
    std::fs::create_dir(dir.path().join("empty")).unwrap();
    edit_config(dir.path(), "corpus = \"filings\"", "corpus = \"empty\"");
    let c = counts(&run(dir.path(), &["extract"]));
    assert_eq!(c["filings"], 0.0);
    assert_eq!(c["candidates"], 0.0);
    assert_eq!(std::fs::read_to_string(dir.path().join("out/sentences.tsv")).unwrap(), "");
}

#[test]
fn unknown_feature_set_is_rejected() {
    let dir = workspace();
    let out = run(dir.path(), &["--feature-set", "Z", "train"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains('Z'));
}

#[test]
fn tagging_with_other_features_than_training_fails() {
    let dir = workspace();
    counts(&run(dir.path(), &["train"]));
    let records = dir.path().join("annotated.jsonl");
    let out = run(dir.path(), &["--feature-set", "W", "tag", "--input", records.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("trained with features"));
}

#[test]
fn wider_tau_moves_firm_years_to_zero() {
    let dir = workspace();
    let mut prev: Option<BTreeMap<String, f64>> = None;
    for tau in ["0.1", "0.5", "1.0", "2.0"] {
        let c = counts(&run(dir.path(), &["--tau", tau, "sue"]));
        assert_eq!(c["outcome.-1"] + c["outcome.0"] + c["outcome.+1"], c["firm_years"]);
        if let Some(p) = &prev {
            assert!(c["outcome.0"] >= p["outcome.0"]);
            assert!(c["outcome.-1"] <= p["outcome.-1"]);
            assert!(c["outcome.+1"] <= p["outcome.+1"]);
        }
        prev = Some(c);
    }
    assert!(run(dir.path(), &["--tau", "0", "sue"]).status.code() != Some(0));
}

#[test]
fn empty_allow_list_gives_controls_only_regression() {
    let dir = workspace();
    std::fs::write(dir.path().join("allow.txt"), "").unwrap();
    edit_config(dir.path(), "polarity = \"polarity.tsv\"", "polarity = \"polarity.tsv\"\nallow_list = \"allow.txt\"");
    counts(&run(dir.path(), &["extract"]));
    counts(&run(dir.path(), &["train"]));
    counts(&run(dir.path(), &["tag"]));
    let c = counts(&run(dir.path(), &["analyze"]));
    assert_eq!(c["weight.expressions"], 0.0);
    assert_eq!(c["rank.expressions"], 0.0);
    assert!(c["regress.observations"] > 0.0);
    let report = std::fs::read_to_string(dir.path().join("out/regression.tsv")).unwrap();
    assert!(report.lines().any(|l| l.contains("\tbm\t")), "{report}");
}

#[test]
fn run_log_records_config_seed_and_inputs() {
    let dir = workspace();
    counts(&run(dir.path(), &["extract"]));
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/runlog-extract.json")).unwrap()).unwrap();
    let config = std::fs::read(dir.path().join("config.toml")).unwrap();
    assert_eq!(log["config_sha256"], hex::encode(Sha256::digest(&config)));
    assert_eq!(log["seed"], 7);
    let inputs = log["inputs"].as_array().unwrap();
    assert!(inputs.iter().any(|i| i["name"] == "acme_2003.html"));
    assert!(inputs.iter().all(|i| i["sha256"].as_str().unwrap().len() == 64));

    let out = run(dir.path(), &["--seed", "9", "extract"]);
    counts(&out);
    let log2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/runlog-extract.json")).unwrap()).unwrap();
    assert_eq!(log2["seed"], 9);
    assert_ne!(log2["config_sha256"], log["config_sha256"]);
}

#[test]
fn every_subcommand_runs_on_the_fixture() {
    let dir = workspace();
    for cmd in ["extract", "featurize", "train", "tag", "eval", "harvest", "weight", "sue", "regress", "rank", "report"] {
        let out = run(dir.path(), &[cmd]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let table = dir.path().join("coefficients.tsv");
    let c = counts(&run(dir.path(), &["rank", "--coefficients", table.to_str().unwrap()]));
    assert_eq!(c["rows"], 9.0);
    let ranks = std::fs::read_to_string(dir.path().join("out/ranks.tsv")).unwrap();
    assert!(ranks.lines().any(|l| l.starts_with("v20\t") && l.ends_with("2nd")), "{ranks}");
}
