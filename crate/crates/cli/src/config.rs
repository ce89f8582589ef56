//! Run settings: TOML config file, command-line flags and environment.
//!
//! Flags take precedence over the config file; the output directory falls
//! back to `$MODAPROMPT_OUT`, then `./out`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use modaprompt::dye::ColormapKind;
use modaprompt::prompt::{PromptConfig, DEFAULT_LAMBDA};
use modaprompt::track::MosseParams;
use modaprompt::ModalityKind;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const OUT_ENV: &str = "MODAPROMPT_OUT";
pub const DEFAULT_OUT: &str = "out";

/// Every setting that can come from a flag or the config file. Field names
/// double as TOML keys.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub colormap: Option<String>,
    /// Auxiliary modalities to blend, in weight order.
    pub aux: Option<Vec<String>>,
    pub tracker: Option<String>,
    /// Command line of an external tracker program.
    pub tracker_cmd: Option<String>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub mosse: Option<MosseParams>,
}

impl RunOptions {
    pub fn from_toml_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `self` win over `base`.
    pub fn over(self, base: RunOptions) -> RunOptions {
        RunOptions {
            lambda: self.lambda.or(base.lambda),
            alpha: self.alpha.or(base.alpha),
            beta: self.beta.or(base.beta),
            gamma: self.gamma.or(base.gamma),
            colormap: self.colormap.or(base.colormap),
            aux: self.aux.or(base.aux),
            tracker: self.tracker.or(base.tracker),
            tracker_cmd: self.tracker_cmd.or(base.tracker_cmd),
            seed: self.seed.or(base.seed),
            jobs: self.jobs.or(base.jobs),
            out: self.out.or(base.out),
            mosse: self.mosse.or(base.mosse),
        }
    }

    pub fn resolve(&self) -> Result<Settings, CliError> {
        let prompt = self.prompt_config()?;
        let seed = self.seed.unwrap_or(0);
        let tracker = self.tracker_spec(seed)?;
        if self.jobs == Some(0) {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        let out = self
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Ok(Settings {
            prompt,
            tracker,
            seed,
            jobs: self.jobs,
            out,
        })
    }

    fn prompt_config(&self) -> Result<PromptConfig, CliError> {
        let mut cfg = match (self.alpha, self.beta, self.gamma) {
            (None, None, None) => PromptConfig::dual(self.lambda.unwrap_or(DEFAULT_LAMBDA)),
            (Some(a), Some(b), Some(g)) => {
                if self.lambda.is_some() {
                    return Err(CliError::Config(
                        "--lambda cannot be combined with --alpha/--beta/--gamma".into(),
                    ));
                }
                PromptConfig::triple(a, b, g)
            }
            _ => {
                return Err(CliError::Config(
                    "--alpha, --beta and --gamma must be given together".into(),
                ))
            }
        };
        if let Some(name) = &self.colormap {
            let map = ColormapKind::from_str(name).map_err(|e| CliError::Config(e.to_string()))?;
            cfg = cfg.with_colormap(map);
        }
        if let Some(aux) = &self.aux {
            cfg.aux_modalities = aux
                .iter()
                .map(|s| s.parse::<ModalityKind>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    fn tracker_spec(&self, seed: u64) -> Result<TrackerSpec, CliError> {
        let name = self.tracker.as_deref().unwrap_or("mosse");
        match name.to_ascii_lowercase().as_str() {
            "mosse" => Ok(TrackerSpec::Mosse(MosseParams {
                seed,
                ..self.mosse.clone().unwrap_or_default()
            })),
            "oracle" | "perfect" => Ok(TrackerSpec::Oracle),
            "always" | "always-report" => Ok(TrackerSpec::AlwaysReport),
            "external" => {
                let cmd = self.tracker_cmd.as_deref().unwrap_or("").trim();
                let mut parts = cmd.split_whitespace().map(str::to_string);
                let program = parts
                    .next()
                    .ok_or_else(|| CliError::Config("--tracker external needs --tracker-cmd".into()))?;
                Ok(TrackerSpec::External {
                    program,
                    args: parts.collect(),
                })
            }
            other => Err(CliError::Config(format!(
                "unknown tracker `{other}` (expected mosse, oracle, always or external)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum TrackerSpec {
    Mosse(MosseParams),
    /// Replays the ground truth: reports exactly the target-present frames.
    Oracle,
    /// Replays the ground truth and also reports on target-absent frames.
    AlwaysReport,
    External { program: String, args: Vec<String> },
}

impl TrackerSpec {
    pub fn name(&self) -> String {
        match self {
            TrackerSpec::Mosse(_) => "mosse".into(),
            TrackerSpec::Oracle => "oracle".into(),
            TrackerSpec::AlwaysReport => "always".into(),
            TrackerSpec::External { program, .. } => format!("external:{program}"),
        }
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub prompt: PromptConfig,
    pub tracker: TrackerSpec,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: PathBuf,
}
