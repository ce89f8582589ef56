use std::fs;
use std::path::{Path, PathBuf};

use modaprompt::dye::ColormapKind;
use modaprompt::ingest::{
    load_manifest, load_sequence, serialize_groundtruth, write_manifest_file, write_sequence,
    ManifestFile, StreamEntry, MANIFEST_FILE,
};
use modaprompt::prompt::{dye_aux_frame, prompt_sequence, PromptConfig, PromptWeights, LAMBDA_GRID};
use modaprompt::synth::{suite_configs, generate, SuiteName};
use modaprompt::track::format_output_line;
use modaprompt::ModalityKind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::Axis;
use crate::config::Settings;
use crate::error::CliError;
use crate::pipeline::{evaluate_all, load_sources, metric_records, track_frames, write_frames, Evaluated, Loaded, Source};
use crate::record::{aggregate, toolkit_version, MetricPayload, MetricRecord, RunRecord};
use crate::report::{mean_curve, metrics_table, svg_plot, write_text};

pub const RUN_FILE: &str = "run.json";
pub const METRICS_FILE: &str = "metrics.json";

fn load_one(manifest: &Path) -> Result<modaprompt::ModalSequence, CliError> {
    let m = load_manifest(manifest)?;
    Ok(load_sequence(&m)?)
}

/// Writes `seeds` sequences of `suite` under `settings.out`, one manifest
/// directory each. Returns the manifest paths.
pub fn cmd_synth(settings: &Settings, suite: SuiteName, seeds: usize, aux_kind: &str) -> Result<Vec<PathBuf>, CliError> {
    let kind: ModalityKind = aux_kind.parse()?;
    let configs = suite_configs(suite, seeds, settings.seed)?;
    configs
        .into_par_iter()
        .map(|mut cfg| {
            cfg.aux_kind = kind;
            let seq = generate(&cfg)?;
            let dir = settings.out.join(seq.name());
            Ok(write_sequence(&seq, &dir)?)
        })
        .collect()
}

/// Writes the dyed frames of one auxiliary stream as 8-bit PNGs.
pub fn cmd_dye(settings: &Settings, manifest: &Path, modality: Option<&str>) -> Result<PathBuf, CliError> {
    let seq = load_one(manifest)?;
    let kind = match modality {
        Some(m) => m.parse::<ModalityKind>()?,
        None => *seq
            .auxiliary_modalities()
            .first()
            .ok_or_else(|| CliError::Config(format!("`{}` has no auxiliary stream", seq.name())))?,
    };
    if seq.stream(kind).is_none() {
        return Err(CliError::Config(format!("`{}` has no {kind} stream", seq.name())));
    }
    let frames = (0..seq.len())
        .into_par_iter()
        .map(|i| dye_aux_frame(&seq, &settings.prompt, kind, i))
        .collect::<Result<Vec<_>, _>>()?;
    let dir = settings.out.join(seq.name()).join(format!("dyed-{kind}"));
    write_frames(&frames, &dir)?;
    Ok(dir)
}

/// Writes prompted frames plus a manifest with them as the visible stream.
/// Returns the new manifest path.
pub fn cmd_prompt(settings: &Settings, manifest: &Path) -> Result<PathBuf, CliError> {
    let seq = load_one(manifest)?;
    let frames = prompt_sequence(&seq, &settings.prompt)?;
    let dir = settings.out.join(seq.name());
    write_frames(&frames, &dir.join("prompted"))?;
    write_text(&dir.join("groundtruth.txt"), &serialize_groundtruth(seq.annotations()))?;
    let derived = ManifestFile {
        name: seq.name().to_string(),
        groundtruth: "groundtruth.txt".into(),
        event_window_us: None,
        event_t0_us: None,
        fps: None,
        event_aggregation: None,
        streams: vec![StreamEntry {
            kind: ModalityKind::Visible.name().into(),
            pattern: "prompted/*.png".into(),
            bit_depth: 8,
            norm: None,
            sensor_width: None,
            sensor_height: None,
        }],
    };
    let path = dir.join(MANIFEST_FILE);
    write_manifest_file(&derived, &path)?;
    Ok(path)
}

/// Prompts and tracks one sequence; writes `track.txt` in the external
/// tracker line format.
pub fn cmd_track(settings: &Settings, manifest: &Path) -> Result<PathBuf, CliError> {
    let seq = load_one(manifest)?;
    let frames = prompt_sequence(&seq, &settings.prompt)?;
    let outputs = track_frames(&seq, &frames, &settings.tracker, &settings.out.join("frames"))?;
    let mut text = String::new();
    for o in &outputs {
        text.push_str(&format_output_line(o));
        text.push('\n');
    }
    let path = settings.out.join(seq.name()).join("track.txt");
    write_text(&path, &text)?;
    Ok(path)
}

fn payload(settings: &Settings, source: &Source, prompt: &PromptConfig, records: Vec<MetricRecord>) -> MetricPayload {
    let tracker_params = match &settings.tracker {
        crate::config::TrackerSpec::Mosse(p) => serde_json::to_value(p).unwrap_or_default(),
        crate::config::TrackerSpec::External { program, args } => {
            serde_json::json!({ "program": program, "args": args })
        }
        _ => serde_json::Value::Null,
    };
    MetricPayload {
        manifest_paths: source.manifest_paths(),
        prompt_config: prompt.clone(),
        tracker_name: settings.tracker.name(),
        tracker_params,
        aggregate: aggregate(&records),
        per_sequence_results: records,
        toolkit_version: toolkit_version(),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("records serialize") + "\n"
}

/// Evaluates already loaded sequences under `prompt`.
pub fn evaluate_loaded(
    settings: &Settings,
    source: &Source,
    seqs: &[Loaded],
    prompt: &PromptConfig,
) -> Result<(MetricPayload, Evaluated), CliError> {
    let results = evaluate_all(seqs, prompt, &settings.tracker, settings.jobs, &settings.out.join("frames"))?;
    let records = metric_records(&results);
    Ok((payload(settings, source, prompt, records), results))
}

/// Full evaluation run. Writes `run.json`, `metrics.json` (the run record
/// without run id and timestamp), `summary.txt`, per-sequence curve CSVs
/// and SVG plots of the mean success and precision curves.
pub fn cmd_eval(settings: &Settings, source: &Source) -> Result<RunRecord, CliError> {
    let seqs = load_sources(source)?;
    let (payload, results) = evaluate_loaded(settings, source, &seqs, &settings.prompt)?;
    let out = &settings.out;
    let record = RunRecord::new(payload);
    write_text(&out.join(RUN_FILE), &to_json(&record))?;
    write_text(&out.join(METRICS_FILE), &to_json(&record.payload))?;

    let mut rows: Vec<(String, &MetricRecord)> = record
        .payload
        .per_sequence_results
        .iter()
        .map(|r| (r.name.clone(), r))
        .collect();
    rows.push(("aggregate".into(), &record.payload.aggregate));
    write_text(&out.join("summary.txt"), &metrics_table("sequence", &rows))?;

    let ok: Vec<_> = results.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
    for r in &ok {
        let base = out.join("curves");
        write_text(&base.join(format!("{}-success.csv", r.metrics.name)), &r.success.to_csv())?;
        write_text(&base.join(format!("{}-precision.csv", r.metrics.name)), &r.precision.to_csv())?;
        write_text(&base.join(format!("{}-longterm.csv", r.metrics.name)), &r.long_term.to_csv())?;
    }
    if let (Some(s), Some(p)) = (
        mean_curve(ok.iter().map(|r| &r.success)),
        mean_curve(ok.iter().map(|r| &r.precision)),
    ) {
        let label = format!("mean of {}", ok.len());
        write_text(
            &out.join("plots").join("success.svg"),
            &svg_plot("Success plot", "overlap threshold", &[(label.clone(), &s)]),
        )?;
        write_text(
            &out.join("plots").join("precision.svg"),
            &svg_plot("Precision plot", "location error threshold (px)", &[(label, &p)]),
        )?;
    }
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub setting: String,
    pub prompt_config: PromptConfig,
    pub aggregate: MetricRecord,
    pub per_sequence_results: Vec<MetricRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub axis: String,
    pub tracker_name: String,
    pub sequences: Vec<String>,
    pub rows: Vec<AblationRow>,
    pub toolkit_version: String,
}

impl AblationTable {
    pub fn to_text(&self) -> String {
        let rows: Vec<(String, &MetricRecord)> = self.rows.iter().map(|r| (r.setting.clone(), &r.aggregate)).collect();
        format!(
            "axis: {}  sequences: {}  tracker: {}\n{}",
            self.axis,
            self.sequences.len(),
            self.tracker_name,
            metrics_table(&self.axis, &rows)
        )
    }

    pub fn row(&self, setting: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.setting == setting)
    }
}

fn with_lambda(base: &PromptConfig, lambda: f64) -> PromptConfig {
    PromptConfig {
        weights: PromptWeights::Dual { lambda },
        ..base.clone()
    }
}

/// Grid points of an ablation axis as (row label, prompt config).
pub fn ablation_grid(base: &PromptConfig, axis: Axis, grid: Option<&[f64]>) -> Result<Vec<(String, PromptConfig)>, CliError> {
    if grid.is_some() && axis != Axis::Lambda {
        return Err(CliError::Config("--grid only applies to the lambda axis".into()));
    }
    Ok(match axis {
        Axis::Lambda => grid
            .unwrap_or(&LAMBDA_GRID)
            .iter()
            .map(|&l| (format!("{l}"), with_lambda(base, l)))
            .collect(),
        Axis::Colormap => [ColormapKind::Jet, ColormapKind::Red, ColormapKind::Gray]
            .into_iter()
            .map(|m| (m.name().to_string(), base.clone().with_colormap(m)))
            .collect(),
        Axis::Modality => vec![
            ("default".into(), base.clone()),
            ("visible-only".into(), with_lambda(base, 0.0)),
            ("auxiliary-only".into(), with_lambda(base, 1.0)),
        ],
    })
}

pub fn ablate_loaded(
    settings: &Settings,
    source: &Source,
    seqs: &[Loaded],
    axis: Axis,
    grid: Option<&[f64]>,
) -> Result<AblationTable, CliError> {
    let points = ablation_grid(&settings.prompt, axis, grid)?;
    for (_, cfg) in &points {
        cfg.validate()?;
    }
    let mut rows = Vec::with_capacity(points.len());
    for (setting, cfg) in points {
        let (payload, _) = evaluate_loaded(settings, source, seqs, &cfg)?;
        rows.push(AblationRow {
            setting,
            prompt_config: cfg,
            aggregate: payload.aggregate,
            per_sequence_results: payload.per_sequence_results,
        });
    }
    let mut sequences: Vec<String> = seqs.iter().map(|(n, _)| n.clone()).collect();
    sequences.sort();
    Ok(AblationTable {
        axis: format!("{axis:?}").to_lowercase(),
        tracker_name: settings.tracker.name(),
        sequences,
        rows,
        toolkit_version: toolkit_version(),
    })
}

/// Writes `ablate-<axis>.json` and `ablate-<axis>.txt`.
pub fn cmd_ablate(settings: &Settings, source: &Source, axis: Axis, grid: Option<&[f64]>) -> Result<AblationTable, CliError> {
    ablation_grid(&settings.prompt, axis, grid)?;
    let seqs = load_sources(source)?;
    let table = ablate_loaded(settings, source, &seqs, axis, grid)?;
    let stem = format!("ablate-{}", table.axis);
    write_text(&settings.out.join(format!("{stem}.json")), &to_json(&table))?;
    write_text(&settings.out.join(format!("{stem}.txt")), &table.to_text())?;
    Ok(table)
}

/// Number of failed sequences in a set of records.
pub fn failures(records: &[MetricRecord]) -> usize {
    records.iter().filter(|r| !r.is_ok()).count()
}

pub fn remove_dir_if_exists(dir: &Path) -> Result<(), CliError> {
    match fs::remove_dir_all(dir) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(CliError::io(dir, e)),
    }
}
