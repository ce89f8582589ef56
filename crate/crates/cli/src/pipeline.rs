//! prompt → track → metrics for one sequence, and ordered fan-out over many.

use std::fs;
use std::path::{Path, PathBuf};

use modaprompt::ingest::{frame_file_name, load_manifest, load_sequence, save_png8};
use modaprompt::metrics::{lt_pr_re_f, precision_curve, success_curve, EvalCurves, LtCurves};
use modaprompt::prompt::{prompt_sequence, PromptConfig};
use modaprompt::synth::{make_suite_from, SuiteName};
use modaprompt::track::{run_tracker, ExternalTracker, MosseTracker, ScriptedTracker, TrackerOutput};
use modaprompt::{ModalSequence, PixelImage};
use rayon::prelude::*;

use crate::config::TrackerSpec;
use crate::error::CliError;
use crate::record::{MetricRecord, STATUS_OK};

/// Where the sequences of a run come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Manifests(Vec<PathBuf>),
    Suite { suite: SuiteName, n_seeds: usize, base_seed: u64 },
}

impl Source {
    pub fn manifest_paths(&self) -> Vec<PathBuf> {
        match self {
            Source::Manifests(paths) => paths.clone(),
            Source::Suite { .. } => Vec::new(),
        }
    }
}

/// A sequence, or the reason it could not be loaded.
pub type Loaded = (String, Result<ModalSequence, String>);

pub fn load_sources(source: &Source) -> Result<Vec<Loaded>, CliError> {
    match source {
        Source::Manifests(paths) => {
            if paths.is_empty() {
                return Err(CliError::Config("at least one manifest is required".into()));
            }
            Ok(paths
                .par_iter()
                .map(|p| {
                    let seq = load_manifest(p).and_then(|m| load_sequence(&m));
                    let name = match &seq {
                        Ok(s) => s.name().to_string(),
                        Err(_) => p.display().to_string(),
                    };
                    (name, seq.map_err(|e| e.to_string()))
                })
                .collect())
        }
        Source::Suite {
            suite,
            n_seeds,
            base_seed,
        } => Ok(make_suite_from(*suite, *n_seeds, *base_seed)?
            .into_iter()
            .map(|(_, seq)| (seq.name().to_string(), Ok(seq)))
            .collect()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceResult {
    pub metrics: MetricRecord,
    pub success: EvalCurves,
    pub precision: EvalCurves,
    pub long_term: LtCurves,
    pub outputs: Vec<TrackerOutput>,
}

/// Runs `tracker` over already-prompted frames. External trackers get the
/// frames as numbered 8-bit PNGs under `scratch`.
pub fn track_frames(
    seq: &ModalSequence,
    frames: &[PixelImage],
    tracker: &TrackerSpec,
    scratch: &Path,
) -> Result<Vec<TrackerOutput>, CliError> {
    let initial = *seq.annotations()[0]
        .bbox()
        .ok_or_else(|| CliError::Config(format!("`{}`: target absent on the first frame", seq.name())))?;
    let out = match tracker {
        TrackerSpec::Mosse(params) => run_tracker(&mut MosseTracker::new(params.clone()), frames, initial)?,
        TrackerSpec::Oracle => run_tracker(&mut ScriptedTracker::perfect(seq.annotations()), frames, initial)?,
        TrackerSpec::AlwaysReport => {
            run_tracker(&mut ScriptedTracker::always_report(seq.annotations()), frames, initial)?
        }
        TrackerSpec::External { program, args } => {
            let dir = scratch.join(seq.name());
            write_frames(frames, &dir)?;
            ExternalTracker::new(program.clone(), args.clone()).run(&dir, frames.len(), initial)?
        }
    };
    Ok(out)
}

pub fn write_frames(frames: &[PixelImage], dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    frames
        .par_iter()
        .enumerate()
        .try_for_each(|(i, f)| save_png8(f, &dir.join(frame_file_name(i))))?;
    Ok(())
}

pub fn evaluate_sequence(
    seq: &ModalSequence,
    prompt: &PromptConfig,
    tracker: &TrackerSpec,
    scratch: &Path,
) -> Result<SequenceResult, CliError> {
    let frames = prompt_sequence(seq, prompt)?;
    let outputs = track_frames(seq, &frames, tracker, scratch)?;
    let gts = seq.annotations();
    let success = success_curve(&outputs, gts)?;
    let precision = precision_curve(&outputs, gts)?;
    let (lt, long_term) = lt_pr_re_f(&outputs, gts)?;
    let metrics = MetricRecord {
        name: seq.name().to_string(),
        pr: lt.pr,
        re: lt.re,
        f: lt.f,
        tau_star: lt.tau_star.is_finite().then_some(lt.tau_star),
        success_auc: success.summary,
        precision_at_20: precision.summary,
        status: STATUS_OK.into(),
    };
    Ok(SequenceResult {
        metrics,
        success,
        precision,
        long_term,
        outputs,
    })
}

/// Per-sequence outcome, in sequence-name order.
pub type Evaluated = Vec<(String, Result<SequenceResult, String>)>;

/// Evaluates every sequence, at most `jobs` at a time, and returns the
/// results sorted by name so parallelism never changes the output. A prompt
/// that does not fit a loaded sequence (e.g. a missing auxiliary stream) is
/// a configuration error for the whole run.
pub fn evaluate_all(
    seqs: &[Loaded],
    prompt: &PromptConfig,
    tracker: &TrackerSpec,
    jobs: Option<usize>,
    scratch: &Path,
) -> Result<Evaluated, CliError> {
    prompt.validate()?;
    for seq in seqs.iter().filter_map(|(_, s)| s.as_ref().ok()) {
        prompt.resolve_aux(seq)?;
    }
    let work = || -> Evaluated {
        let mut results: Evaluated = seqs
            .par_iter()
            .map(|(name, seq)| {
                let result = match seq {
                    Ok(seq) => evaluate_sequence(seq, prompt, tracker, scratch).map_err(|e| e.to_string()),
                    Err(e) => Err(e.clone()),
                };
                if let Err(e) = &result {
                    log::warn!("{name}: {e}");
                }
                (name.clone(), result)
            })
            .collect();
        results.sort_by(|a, b| a.0.cmp(&b.0));
        results
    };
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

pub fn metric_records(results: &Evaluated) -> Vec<MetricRecord> {
    results
        .iter()
        .map(|(name, r)| match r {
            Ok(r) => r.metrics.clone(),
            Err(e) => MetricRecord::failed(name, e),
        })
        .collect()
}
