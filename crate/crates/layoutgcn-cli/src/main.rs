//! Command-line front end for the layoutgcn pipeline.
//!
//! Subcommands mirror the pipeline stages: `ingest` and `gen-synth` produce
//! canonical page files, `build-graphs` exports aspect graphs for
//! inspection, `train-relations` / `pretrain` / `train` fill a model
//! directory stage by stage, `predict` / `eval` / `render` consume it, and
//! `ablate` / `compare-pooling` rerun the classifier harnesses over a
//! trained model.
//!
//! Exit codes: 0 success, 1 usage, 2 data or structural problems, 3 numeric
//! failure during training. Every file-producing run writes a manifest next
//! to its output (config, seeds, output hashes) so results can be reproduced
//! bit for bit. The only environment variable read is `RUST_LOG`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use layoutgcn::corpus::FunsdSplit;
use layoutgcn::graphs::GraphKind;
use layoutgcn::pipeline::LinkSource;

mod commands;
mod config;

/// Usage-level failure (bad flags or flag combinations), exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "layoutgcn", version, about = "Graph-convolutional document layout analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Config file + overrides, shared by every command that trains something.
#[derive(Args, Debug)]
pub struct ConfigArgs {
    /// TOML config file; flags override its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed. Required here or in the config file; never defaulted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override one config key, e.g. --set classifier_epochs=80 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Convert a dataset to canonical page JSONL.
    Ingest {
        #[arg(long, value_enum)]
        format: IngestFormat,
        /// Source file (canonical) or dataset root (funsd).
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Dataset split to ingest (funsd only).
        #[arg(long, value_enum, default_value_t = SplitArg::Train)]
        split: SplitArg,
    },
    /// Generate a synthetic corpus (or an on-disk FUNSD-format fixture).
    GenSynth {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value_t = SynthKind::Mixed)]
        kind: SynthKind,
        /// Page count (ignored by funsd-fixture, which has fixed splits).
        #[arg(long, default_value_t = 40)]
        pages: usize,
        /// Output file, or output directory for funsd-fixture.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Export every page's six aspect graphs as JSONL records.
    BuildGraphs {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Train the parent-relation model on pages with gold links.
    TrainRelations {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Checkpoint file to write (use MODEL_DIR/relations.json to feed
        /// the later stages).
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
    },
    /// Pretrain aspect GCNs on node classification into a model directory.
    Pretrain {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = AspectArg::All)]
        aspect: AspectArg,
        #[arg(long = "model-dir", value_name = "PATH")]
        model_dir: PathBuf,
    },
    /// Train the fused classifier over pretrained aspect checkpoints.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long = "model-dir", value_name = "PATH")]
        model_dir: PathBuf,
    },
    /// Classify every segment; parent links are predicted for pages that
    /// lack them.
    Predict {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long = "model-dir", value_name = "PATH")]
        model_dir: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// auto: gold links where present; predict: always predict links.
        #[arg(long, value_enum, default_value_t = LinksArg::Auto)]
        links: LinksArg,
    },
    /// Score predictions against gold labels.
    Eval {
        /// Predictions JSONL, or a canonical page file to use its labels.
        #[arg(long, value_name = "PATH")]
        pred: PathBuf,
        /// Canonical page file with gold labels.
        #[arg(long, value_name = "PATH")]
        gold: PathBuf,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
        /// Also write the JSON report to a file.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Retrain the classifier on aspect subsets over a trained model's
    /// hiddens and report each score.
    Ablate {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long = "model-dir", value_name = "PATH")]
        model_dir: PathBuf,
        /// Comma-separated subset (syn,sem,dens,appr); default: every
        /// single aspect plus the full set.
        #[arg(long, value_name = "LIST")]
        aspects: Option<String>,
        /// Held-out pages to score (defaults to the training pages).
        #[arg(long, value_name = "PATH")]
        eval: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Retrain the classifier under min/avg/max pooling and report each.
    ComparePooling {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long = "model-dir", value_name = "PATH")]
        model_dir: PathBuf,
        /// Held-out pages to score (defaults to the training pages).
        #[arg(long, value_name = "PATH")]
        eval: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Write one SVG per page: colored rectangles plus labels.
    Render {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Predictions JSONL; when given, predicted labels replace gold.
        #[arg(long, value_name = "PATH")]
        pred: Option<PathBuf>,
        /// Output directory, one SVG per page.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum IngestFormat {
    Canonical,
    Funsd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
}

impl From<SplitArg> for FunsdSplit {
    fn from(s: SplitArg) -> FunsdSplit {
        match s {
            SplitArg::Train => FunsdSplit::Train,
            SplitArg::Test => FunsdSplit::Test,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SynthKind {
    /// Six-class corpus mixing density, position, parse, and feature-cluster
    /// label factors.
    Mixed,
    /// Two-class density corpus with chain parent links.
    Stacked,
    /// Corpus whose aspect pairs collapse under the wrong pooling.
    PoolingTie,
    /// FUNSD-format directory tree with train/test splits.
    FunsdFixture,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AspectArg {
    Den1,
    Den2,
    Appr,
    Syn1,
    Syn2,
    Semc,
    All,
}

impl AspectArg {
    pub fn kinds(self) -> Vec<GraphKind> {
        match self {
            AspectArg::Den1 => vec![GraphKind::Den1],
            AspectArg::Den2 => vec![GraphKind::Den2],
            AspectArg::Appr => vec![GraphKind::Appr],
            AspectArg::Syn1 => vec![GraphKind::Syn1],
            AspectArg::Syn2 => vec![GraphKind::Syn2],
            AspectArg::Semc => vec![GraphKind::Semc],
            AspectArg::All => GraphKind::ALL.to_vec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AspectArg::Den1 => "den1",
            AspectArg::Den2 => "den2",
            AspectArg::Appr => "appr",
            AspectArg::Syn1 => "syn1",
            AspectArg::Syn2 => "syn2",
            AspectArg::Semc => "semc",
            AspectArg::All => "all",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LinksArg {
    Auto,
    Predict,
}

impl From<LinksArg> for LinkSource {
    fn from(l: LinksArg) -> LinkSource {
        match l {
            LinksArg::Auto => LinkSource::GoldOrPredict,
            LinksArg::Predict => LinkSource::AlwaysPredict,
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<layoutgcn::Error>() {
        Some(layoutgcn::Error::Numeric { .. }) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 2 by default; remap to the 0/1 contract.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
