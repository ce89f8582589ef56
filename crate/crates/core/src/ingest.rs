//! Manifest-driven loading of multi-modal sequences.
//!
//! A manifest is a JSON document:
//!
//! ```json
//! {
//!   "name": "seq01",
//!   "groundtruth": "groundtruth.txt",
//!   "event_window_us": 33333,
//!   "streams": [
//!     { "kind": "visible", "pattern": "color/*.png", "bit_depth": 8 },
//!     { "kind": "depth", "pattern": "depth/*.png", "bit_depth": 16,
//!       "norm": { "mode": "fixed_range", "lo": 0, "hi": 10000 } }
//!   ]
//! }
//! ```
//!
//! Paths are relative to the manifest's directory. `*` globs expand in
//! lexicographic order. A stream whose pattern names a single `.csv` file is
//! read as an event stream and accumulated into one polarity frame per
//! visible frame.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma, Rgb};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dye::NormPolicy;
use crate::error::{Error, Result};
use crate::events::{accumulate_with, encode_polarity, parse_event_stream, Aggregation};
use crate::geometry::{Annotation, BBox};
use crate::image::{quantize_u16, resample_bilinear, PixelImage};
use crate::sequence::{ModalSequence, ModalityKind};

pub const MANIFEST_FILE: &str = "manifest.json";

/// On-disk manifest schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub name: String,
    pub groundtruth: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_window_us: Option<i64>,
    /// Start time of the first event window; defaults to 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_t0_us: Option<i64>,
    /// Visible frame rate, used for the event window when
    /// `event_window_us` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_aggregation: Option<Aggregation>,
    pub streams: Vec<StreamEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEntry {
    pub kind: String,
    pub pattern: String,
    #[serde(default = "default_bit_depth")]
    pub bit_depth: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormPolicy>,
    /// Event sensor size; defaults to the visible frame size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor_height: Option<usize>,
}

fn default_bit_depth() -> u8 {
    8
}

#[derive(Debug, Clone, PartialEq)]
pub enum StreamSource {
    Frames(Vec<PathBuf>),
    EventCsv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestStream {
    pub kind: ModalityKind,
    pub bit_depth: u8,
    /// Normalization in raw sensor units, as written in the manifest.
    pub norm: Option<NormPolicy>,
    pub source: StreamSource,
    pub sensor_size: Option<(usize, usize)>,
}

/// A validated manifest with expanded file lists.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub name: String,
    pub base_dir: PathBuf,
    pub groundtruth: PathBuf,
    pub event_window_us: Option<i64>,
    pub event_t0_us: i64,
    pub event_aggregation: Aggregation,
    pub streams: Vec<ManifestStream>,
    pub frame_count: usize,
}

impl Manifest {
    pub fn stream(&self, kind: ModalityKind) -> Option<&ManifestStream> {
        self.streams.iter().find(|s| s.kind == kind)
    }

    pub fn modalities(&self) -> Vec<ModalityKind> {
        self.streams.iter().map(|s| s.kind).collect()
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ManifestFile = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("malformed manifest {}: {e}", path.display())))?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    resolve_manifest(file, &base_dir)
}

/// Validates a parsed manifest against the files under `base_dir`.
pub fn resolve_manifest(file: ManifestFile, base_dir: &Path) -> Result<Manifest> {
    let mut kinds = Vec::with_capacity(file.streams.len());
    for entry in &file.streams {
        kinds.push(entry.kind.parse::<ModalityKind>()?);
    }
    match kinds.iter().filter(|k| **k == ModalityKind::Visible).count() {
        0 => return Err(Error::NoVisibleStream),
        1 => {}
        n => return Err(Error::Config(format!("{n} visible streams; expected exactly one"))),
    }
    for (i, k) in kinds.iter().enumerate() {
        if kinds[..i].contains(k) {
            return Err(Error::Config(format!("duplicate {k} stream")));
        }
    }

    let mut streams = Vec::with_capacity(kinds.len());
    for (entry, kind) in file.streams.iter().zip(kinds) {
        if entry.bit_depth != 8 && entry.bit_depth != 16 {
            return Err(Error::Config(format!(
                "{kind} stream: bit_depth must be 8 or 16, got {}",
                entry.bit_depth
            )));
        }
        if let Some(norm) = &entry.norm {
            norm.validate()?;
        }
        let files = expand_pattern(base_dir, &entry.pattern)?;
        let is_csv = files.len() == 1
            && files[0]
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let source = if is_csv {
            if kind != ModalityKind::Event {
                return Err(Error::Config(format!(
                    "{kind} stream points at a CSV file; only event streams may"
                )));
            }
            StreamSource::EventCsv(files.into_iter().next().unwrap())
        } else {
            StreamSource::Frames(files)
        };
        let sensor_size = match (entry.sensor_width, entry.sensor_height) {
            (Some(w), Some(h)) if w > 0 && h > 0 => Some((w, h)),
            (None, None) => None,
            _ => {
                return Err(Error::Config(format!(
                    "{kind} stream: sensor_width and sensor_height must both be positive"
                )))
            }
        };
        streams.push(ManifestStream {
            kind,
            bit_depth: entry.bit_depth,
            norm: entry.norm,
            source,
            sensor_size,
        });
    }

    let frame_count = streams
        .iter()
        .find_map(|s| match (&s.source, s.kind) {
            (StreamSource::Frames(f), ModalityKind::Visible) => Some(f.len()),
            _ => None,
        })
        .ok_or_else(|| Error::Config("visible stream must be a frame sequence".into()))?;
    for s in &streams {
        if let StreamSource::Frames(f) = &s.source {
            if f.len() != frame_count {
                return Err(Error::LengthMismatch(format!(
                    "{} stream has {} frames, visible has {frame_count}",
                    s.kind,
                    f.len()
                )));
            }
        }
    }

    let event_window_us = match (file.event_window_us, file.fps) {
        (Some(w), _) if w > 0 => Some(w),
        (Some(w), _) => return Err(Error::Config(format!("event_window_us must be positive, got {w}"))),
        (None, Some(fps)) if fps > 0.0 => Some((1e6 / fps).round() as i64),
        (None, Some(fps)) => return Err(Error::Config(format!("fps must be positive, got {fps}"))),
        (None, None) => None,
    };
    let has_csv = streams
        .iter()
        .any(|s| matches!(s.source, StreamSource::EventCsv(_)));
    if has_csv && event_window_us.is_none() {
        return Err(Error::Config(
            "event CSV stream requires `event_window_us` or `fps`".into(),
        ));
    }

    Ok(Manifest {
        name: file.name,
        base_dir: base_dir.to_path_buf(),
        groundtruth: base_dir.join(&file.groundtruth),
        event_window_us,
        event_t0_us: file.event_t0_us.unwrap_or(0),
        event_aggregation: file.event_aggregation.unwrap_or_default(),
        streams,
        frame_count,
    })
}

fn expand_pattern(base_dir: &Path, pattern: &str) -> Result<Vec<PathBuf>> {
    let full = base_dir.join(pattern);
    let full_str = full.to_string_lossy();
    let paths = glob::glob(&full_str)
        .map_err(|e| Error::Config(format!("bad pattern `{pattern}`: {e}")))?;
    let mut files: Vec<PathBuf> = paths
        .filter_map(|p| p.ok())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::EmptyPattern(pattern.to_string()));
    }
    Ok(files)
}

/// Parses a ground-truth file: one `x,y,w,h` line per frame. A line of
/// `nan` values, or an empty line, marks the target absent. Fields may be
/// separated by commas, tabs or spaces.
pub fn parse_groundtruth(source: &str) -> Result<Vec<Annotation>> {
    source
        .lines()
        .enumerate()
        .map(|(i, line)| parse_groundtruth_line(line, i + 1))
        .collect()
}

fn parse_groundtruth_line(line: &str, lineno: usize) -> Result<Annotation> {
    let line = line.trim();
    if line.is_empty() {
        return Ok(Annotation::absent());
    }
    let fields: Vec<&str> = line
        .split([',', '\t', ' '])
        .filter(|f| !f.is_empty())
        .collect();
    if fields.len() != 4 {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected 4 fields, found {}", fields.len()),
        });
    }
    let nan_count = fields
        .iter()
        .filter(|f| f.eq_ignore_ascii_case("nan"))
        .count();
    if nan_count == 4 {
        return Ok(Annotation::absent());
    }
    let mut v = [0.0; 4];
    for (slot, field) in v.iter_mut().zip(&fields) {
        let parsed: f64 = field.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("non-numeric field `{field}`"),
        })?;
        if !parsed.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("non-finite field `{field}`"),
            });
        }
        *slot = parsed;
    }
    if v[2] < 0.0 || v[3] < 0.0 {
        return Err(Error::Parse {
            line: lineno,
            message: format!("negative extent w={} h={}", v[2], v[3]),
        });
    }
    Ok(Annotation::present(BBox {
        x: v[0],
        y: v[1],
        w: v[2],
        h: v[3],
    }))
}

pub fn serialize_groundtruth(annotations: &[Annotation]) -> String {
    let mut out = String::new();
    for a in annotations {
        match a.bbox() {
            Some(b) => out.push_str(&format!("{},{},{},{}\n", b.x, b.y, b.w, b.h)),
            None => out.push_str("nan,nan,nan,nan\n"),
        }
    }
    out
}

/// Decodes an image file into `[0, 1]` intensities. Alpha is dropped.
pub fn load_image(path: &Path) -> Result<PixelImage> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (channels, data): (usize, Vec<f64>) = match &img {
        DynamicImage::ImageLuma8(b) => (1, b.as_raw().iter().map(|&v| f64::from(v) / 255.0).collect()),
        DynamicImage::ImageLuma16(b) => (1, b.as_raw().iter().map(|&v| f64::from(v) / 65535.0).collect()),
        DynamicImage::ImageLumaA8(_) => (1, img.to_luma8().as_raw().iter().map(|&v| f64::from(v) / 255.0).collect()),
        DynamicImage::ImageLumaA16(_) => (1, img.to_luma16().as_raw().iter().map(|&v| f64::from(v) / 65535.0).collect()),
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => {
            (3, img.to_rgb16().as_raw().iter().map(|&v| f64::from(v) / 65535.0).collect())
        }
        _ => (3, img.to_rgb8().as_raw().iter().map(|&v| f64::from(v) / 255.0).collect()),
    };
    PixelImage::new(w, h, channels, data).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes an 8-bit PNG (grayscale or RGB).
pub fn save_png8(img: &PixelImage, path: &Path) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let bytes = img.to_u8();
    let res = if img.channels() == 1 {
        ImageBuffer::<Luma<u8>, _>::from_raw(w, h, bytes).map(|b| b.save(path))
    } else {
        ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, bytes).map(|b| b.save(path))
    };
    finish_save(res, path)
}

/// Writes a 16-bit PNG (grayscale or RGB).
pub fn save_png16(img: &PixelImage, path: &Path) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let words: Vec<u16> = img.data().iter().map(|&v| quantize_u16(v)).collect();
    let res = if img.channels() == 1 {
        ImageBuffer::<Luma<u16>, _>::from_raw(w, h, words).map(|b| b.save(path))
    } else {
        ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, words).map(|b| b.save(path))
    };
    finish_save(res, path)
}

fn finish_save(res: Option<image::ImageResult<()>>, path: &Path) -> Result<()> {
    match res {
        Some(Ok(())) => Ok(()),
        Some(Err(e)) => Err(Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        }),
        None => Err(Error::Image {
            path: path.to_path_buf(),
            message: "buffer size mismatch".into(),
        }),
    }
}

/// Loads every stream of `m`, aligning auxiliary frames to the visible
/// resolution and accumulating event CSVs per window.
pub fn load_sequence(m: &Manifest) -> Result<ModalSequence> {
    let visible = m.stream(ModalityKind::Visible).ok_or(Error::NoVisibleStream)?;
    let visible_frames = match &visible.source {
        StreamSource::Frames(files) => load_frames(files)?,
        StreamSource::EventCsv(_) => {
            return Err(Error::Config("visible stream must be a frame sequence".into()))
        }
    };
    let (vw, vh) = visible_frames[0].dims();
    if let Some(bad) = visible_frames.iter().position(|f| f.dims() != (vw, vh)) {
        return Err(Error::LengthMismatch(format!(
            "visible frame {bad} is {:?}, expected {:?}",
            visible_frames[bad].dims(),
            (vw, vh)
        )));
    }

    let mut streams = BTreeMap::new();
    let mut aux_norm = BTreeMap::new();
    for s in m.streams.iter().filter(|s| s.kind != ModalityKind::Visible) {
        let frames = match &s.source {
            StreamSource::Frames(files) => load_frames(files)?,
            StreamSource::EventCsv(path) => load_event_frames(m, s, path, (vw, vh))?,
        };
        let frames = frames
            .into_iter()
            .map(|f| {
                if f.dims() == (vw, vh) {
                    Ok(f)
                } else {
                    resample_bilinear(&f, vw, vh)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let raw_max = if s.bit_depth == 16 { 65535.0 } else { 255.0 };
        if let Some(norm) = s.norm {
            aux_norm.insert(s.kind, norm.scaled(1.0 / raw_max));
        } else if matches!(s.source, StreamSource::EventCsv(_)) {
            aux_norm.insert(s.kind, NormPolicy::FixedRange { lo: 0.0, hi: 1.0 });
        }
        streams.insert(s.kind, frames);
    }
    streams.insert(ModalityKind::Visible, visible_frames);

    let gt_text = fs::read_to_string(&m.groundtruth).map_err(|e| Error::io(&m.groundtruth, e))?;
    let annotations = parse_groundtruth(&gt_text)?;
    if annotations.len() != m.frame_count {
        return Err(Error::LengthMismatch(format!(
            "{} annotations for {} frames",
            annotations.len(),
            m.frame_count
        )));
    }
    ModalSequence::new(m.name.clone(), streams, annotations, aux_norm)
}

fn load_frames(files: &[PathBuf]) -> Result<Vec<PixelImage>> {
    files.par_iter().map(|p| load_image(p)).collect()
}

fn load_event_frames(
    m: &Manifest,
    s: &ManifestStream,
    path: &Path,
    visible_dims: (usize, usize),
) -> Result<Vec<PixelImage>> {
    let (sw, sh) = s.sensor_size.unwrap_or(visible_dims);
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let events = parse_event_stream(BufReader::new(file), sw, sh)?;
    let window = m
        .event_window_us
        .ok_or_else(|| Error::Config("event window is not configured".into()))?;
    (0..m.frame_count)
        .map(|i| {
            let t0 = m.event_t0_us + i as i64 * window;
            let p = accumulate_with(&events, t0, t0 + window, sw, sh, m.event_aggregation)?;
            Ok(encode_polarity(&p))
        })
        .collect()
}

/// Writes `seq` as a manifest directory: `visible/NNNNN.png` (8-bit),
/// auxiliary 1-channel streams as 16-bit PNGs (event streams as 8-bit
/// polarity encodings), `groundtruth.txt` and `manifest.json`. Returns the
/// manifest path.
pub fn write_sequence(seq: &ModalSequence, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    for kind in seq.modalities() {
        let sub = dir.join(kind.name());
        fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        let frames = seq.stream(kind).expect("listed modality");
        let sixteen = kind != ModalityKind::Visible
            && kind != ModalityKind::Event
            && frames[0].channels() == 1;
        frames
            .par_iter()
            .enumerate()
            .map(|(i, f)| {
                let path = sub.join(frame_file_name(i));
                if sixteen {
                    save_png16(f, &path)
                } else {
                    save_png8(f, &path)
                }
            })
            .collect::<Result<()>>()?;
        let bit_depth = if sixteen { 16 } else { 8 };
        let norm = seq
            .norm_for(kind)
            .map(|n| n.scaled(if sixteen { 65535.0 } else { 255.0 }));
        entries.push(StreamEntry {
            kind: kind.name().to_string(),
            pattern: format!("{}/*.png", kind.name()),
            bit_depth,
            norm,
            sensor_width: None,
            sensor_height: None,
        });
    }
    let gt = dir.join("groundtruth.txt");
    fs::write(&gt, serialize_groundtruth(seq.annotations())).map_err(|e| Error::io(&gt, e))?;
    let manifest = ManifestFile {
        name: seq.name().to_string(),
        groundtruth: "groundtruth.txt".into(),
        event_window_us: None,
        event_t0_us: None,
        fps: None,
        event_aggregation: None,
        streams: entries,
    };
    let path = dir.join(MANIFEST_FILE);
    write_manifest_file(&manifest, &path)?;
    Ok(path)
}

pub fn write_manifest_file(manifest: &ManifestFile, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Config(format!("cannot serialize manifest: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Zero-padded frame file name used by every writer in the toolkit.
pub fn frame_file_name(index: usize) -> String {
    format!("{:05}.png", index + 1)
}
