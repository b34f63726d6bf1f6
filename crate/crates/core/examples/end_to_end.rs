//! Runs every pipeline stage on a scratch copy of the fixture workspace and
//! prints the ranked expressions.
//!
//! `cargo run --release --example end_to_end`

use std::path::Path;

use finmwe::pipeline::{
    cmd_analyze, cmd_eval, cmd_extract, cmd_featurize, cmd_report, cmd_tag, cmd_train, PipelineConfig, RunLog,
};

fn copy_dir(from: &Path, to: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(to)?;
    for e in std::fs::read_dir(from)? {
        let e = e?;
        if e.file_type()?.is_dir() {
            if e.file_name() != "out" {
                copy_dir(&e.path(), &to.join(e.file_name()))?;
            }
        } else {
            std::fs::copy(e.path(), to.join(e.file_name()))?;
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scratch = tempfile::tempdir()?;
    copy_dir(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures"), scratch.path())?;
    let cfg = PipelineConfig::load(&scratch.path().join("config.toml"))?;

    let stages: [(&str, fn(&PipelineConfig) -> Result<RunLog, _>); 7] = [
        ("extract", cmd_extract),
        ("featurize", cmd_featurize),
        ("train", cmd_train),
        ("tag", cmd_tag),
        ("eval", cmd_eval),
        ("analyze", cmd_analyze),
        ("report", cmd_report),
    ];
    for (name, stage) in stages {
        let log = stage(&cfg)?;
        let counts: Vec<String> = log.counts.iter().take(4).map(|(k, v)| format!("{k}={v}")).collect();
        println!("{name:<10} {}", counts.join(" "));
    }

    println!("\n{}", std::fs::read_to_string(cfg.out("ranked.tsv"))?);
    Ok(())
}
