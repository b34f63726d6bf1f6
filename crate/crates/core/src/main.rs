use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finmwe::econ::CovFlavor;
use finmwe::pipeline::{self, PipelineConfig, RunLog};

#[derive(Parser)]
#[command(name = "finmwe", version, about = "Opinion holders and subjective expressions in annual filings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (TOML).
    #[arg(long, short, global = true, default_value = "config.toml")]
    config: PathBuf,
    /// Output directory, overriding `paths.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Named feature set A-W.
    #[arg(long, global = true)]
    feature_set: Option<String>,
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Outcome threshold on |SUE|.
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// `model` or `robust`.
    #[arg(long, global = true)]
    covariance: Option<CovFlavor>,
}

#[derive(Subcommand)]
enum Command {
    /// Candidate opinion sentences from HTML filings.
    Extract,
    /// Attribute rows for annotated records.
    Featurize {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Train a CRF on the annotated records.
    Train,
    /// Tag records or extracted sentences with the trained model.
    Tag {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Phrase-level evaluation on the held-out records.
    Eval {
        /// Also score sentences with an explicit expression only.
        #[arg(long)]
        explicit: bool,
    },
    /// Collect expressions from tagged records.
    Harvest,
    /// Weight the selected expressions per document.
    Weight,
    /// Standardized unexpected earnings and outcome categories.
    Sue,
    /// Fit the multinomial logit.
    Regress,
    /// Rank the fitted expressions, or an external coefficient table.
    Rank {
        #[arg(long)]
        coefficients: Option<PathBuf>,
    },
    /// Holder, polarity and rank table.
    Report,
    /// Harvest through report in one run.
    Analyze,
}

fn configure(common: &Common) -> Result<PipelineConfig, pipeline::PipelineError> {
    let mut cfg = PipelineConfig::load(&common.config)?;
    let mut changed = false;
    if let Some(o) = &common.out {
        cfg.paths.out = o.clone();
        changed = true;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
        changed = true;
    }
    if let Some(f) = &common.feature_set {
        cfg.features.set = Some(f.clone());
        cfg.features.families.clear();
        changed = true;
    }
    if let Some(m) = &common.model {
        cfg.paths.model = Some(m.clone());
        changed = true;
    }
    if let Some(t) = common.tau {
        cfg.analysis.tau = t;
        changed = true;
    }
    if let Some(c) = common.covariance {
        cfg.analysis.covariance = c;
        changed = true;
    }
    if changed {
        cfg.mark_modified();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<RunLog, pipeline::PipelineError> {
    let mut cfg = configure(&cli.common)?;
    match cli.command {
        Command::Extract => pipeline::cmd_extract(&cfg),
        Command::Featurize { input } => {
            if input.is_some() {
                cfg.paths.tag_input = input;
                cfg.mark_modified();
            }
            pipeline::cmd_featurize(&cfg)
        }
        Command::Train => pipeline::cmd_train(&cfg),
        Command::Tag { input } => {
            if input.is_some() {
                cfg.paths.tag_input = input;
                cfg.mark_modified();
            }
            pipeline::cmd_tag(&cfg)
        }
        Command::Eval { explicit } => {
            if explicit {
                cfg.explicit = true;
                cfg.mark_modified();
            }
            pipeline::cmd_eval(&cfg)
        }
        Command::Harvest => pipeline::cmd_harvest(&cfg),
        Command::Weight => pipeline::cmd_weight(&cfg),
        Command::Sue => pipeline::cmd_sue(&cfg),
        Command::Regress => pipeline::cmd_regress(&cfg),
        Command::Rank { coefficients } => pipeline::cmd_rank(&cfg, coefficients.as_deref()),
        Command::Report => pipeline::cmd_report(&cfg),
        Command::Analyze => pipeline::cmd_analyze(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(log) => {
            for (k, v) in &log.counts {
                println!("{k}\t{v}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
