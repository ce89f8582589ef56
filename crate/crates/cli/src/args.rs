use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use modaprompt::synth::SuiteName;

use crate::config::RunOptions;

#[derive(Debug, Parser)]
#[command(name = "modaprompt", version, about = "Multi-modal visual prompting for object tracking")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Auxiliary blend weight of the dual prompt.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Triple prompt weight of the first auxiliary stream.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Triple prompt weight of the second auxiliary stream.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Triple prompt weight of the visible stream.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// jet, red, gray or event.
    #[arg(long, global = true)]
    pub colormap: Option<String>,
    /// Auxiliary modalities to blend, comma separated, in weight order.
    #[arg(long, global = true, value_delimiter = ',')]
    pub aux: Option<Vec<String>>,
    /// mosse, oracle, always or external.
    #[arg(long, global = true)]
    pub tracker: Option<String>,
    /// Command line of the external tracker.
    #[arg(long, global = true)]
    pub tracker_cmd: Option<String>,
    /// Tracker seed and first suite seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sequences evaluated in parallel.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory (default: $MODAPROMPT_OUT or ./out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl GlobalArgs {
    pub fn options(&self) -> RunOptions {
        RunOptions {
            lambda: self.lambda,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            colormap: self.colormap.clone(),
            aux: self.aux.clone(),
            tracker: self.tracker.clone(),
            tracker_cmd: self.tracker_cmd.clone(),
            seed: self.seed,
            jobs: self.jobs,
            out: self.out.clone(),
            mosse: None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Sequence manifest (repeatable).
    #[arg(long = "manifest", short = 'm')]
    pub manifests: Vec<PathBuf>,
    /// Synthetic suite to generate in memory instead of reading manifests.
    #[arg(long, value_parser = parse_suite, conflicts_with = "manifests")]
    pub suite: Option<SuiteName>,
    /// Number of seeds in the synthetic suite.
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
}

pub fn parse_suite(s: &str) -> Result<SuiteName, String> {
    s.parse().map_err(|e: modaprompt::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Lambda,
    Colormap,
    Modality,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic suite as manifest directories.
    Synth {
        #[arg(long, value_parser = parse_suite)]
        suite: SuiteName,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        /// Auxiliary modality of the generated sequences.
        #[arg(long = "aux-kind", default_value = "depth")]
        aux_kind: String,
    },
    /// Write the dyed frames of one auxiliary stream.
    Dye {
        #[arg(long, short = 'm')]
        manifest: PathBuf,
        /// Stream to dye; defaults to the first auxiliary stream.
        #[arg(long)]
        modality: Option<String>,
    },
    /// Write prompted frames and a manifest that points at them.
    Prompt {
        #[arg(long, short = 'm')]
        manifest: PathBuf,
    },
    /// Prompt and track one sequence; writes one `x,y,w,h,confidence` line
    /// per frame.
    Track {
        #[arg(long, short = 'm')]
        manifest: PathBuf,
    },
    /// Prompt, track and score sequences.
    Eval {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// One evaluation per grid point of an ablation axis.
    Ablate {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated λ values for the lambda axis.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
}
