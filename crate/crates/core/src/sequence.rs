use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dye::NormPolicy;
use crate::error::{Error, Result};
use crate::geometry::Annotation;
use crate::image::PixelImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModalityKind {
    Visible,
    Depth,
    Thermal,
    Event,
}

impl ModalityKind {
    pub const ALL: [ModalityKind; 4] = [
        ModalityKind::Visible,
        ModalityKind::Depth,
        ModalityKind::Thermal,
        ModalityKind::Event,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModalityKind::Visible => "visible",
            ModalityKind::Depth => "depth",
            ModalityKind::Thermal => "thermal",
            ModalityKind::Event => "event",
        }
    }

    pub fn is_auxiliary(self) -> bool {
        self != ModalityKind::Visible
    }
}

impl fmt::Display for ModalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModalityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "visible" | "rgb" | "color" => Ok(ModalityKind::Visible),
            "depth" => Ok(ModalityKind::Depth),
            "thermal" | "infrared" | "tir" => Ok(ModalityKind::Thermal),
            "event" | "events" => Ok(ModalityKind::Event),
            other => Err(Error::UnknownModality(other.to_string())),
        }
    }
}

/// Index-aligned per-modality frame streams with per-frame ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalSequence {
    name: String,
    streams: BTreeMap<ModalityKind, Vec<PixelImage>>,
    annotations: Vec<Annotation>,
    aux_norm: BTreeMap<ModalityKind, NormPolicy>,
}

impl ModalSequence {
    /// Validates stream lengths, frame sizes and the visible stream.
    ///
    /// 1-channel visible frames are replicated to three channels.
    pub fn new(
        name: impl Into<String>,
        mut streams: BTreeMap<ModalityKind, Vec<PixelImage>>,
        annotations: Vec<Annotation>,
        aux_norm: BTreeMap<ModalityKind, NormPolicy>,
    ) -> Result<Self> {
        let visible = streams
            .get_mut(&ModalityKind::Visible)
            .ok_or(Error::NoVisibleStream)?;
        for frame in visible.iter_mut() {
            if frame.channels() == 1 {
                *frame = frame.to_rgb();
            }
        }
        let n = visible.len();
        if n == 0 {
            return Err(Error::invalid("sequence must contain at least one frame"));
        }
        let dims = visible[0].dims();
        for (kind, frames) in &streams {
            if frames.len() != n {
                return Err(Error::LengthMismatch(format!(
                    "{kind} stream has {} frames, visible has {n}",
                    frames.len()
                )));
            }
            if let Some(bad) = frames.iter().position(|f| f.dims() != dims) {
                return Err(Error::LengthMismatch(format!(
                    "{kind} frame {bad} is {:?}, expected {:?}",
                    frames[bad].dims(),
                    dims
                )));
            }
        }
        if annotations.len() != n {
            return Err(Error::LengthMismatch(format!(
                "{} annotations for {n} frames",
                annotations.len()
            )));
        }
        for policy in aux_norm.values() {
            policy.validate()?;
        }
        Ok(Self {
            name: name.into(),
            streams,
            annotations,
            aux_norm,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.visible()[0].dims()
    }

    pub fn visible(&self) -> &[PixelImage] {
        &self.streams[&ModalityKind::Visible]
    }

    pub fn stream(&self, kind: ModalityKind) -> Option<&[PixelImage]> {
        self.streams.get(&kind).map(Vec::as_slice)
    }

    pub fn modalities(&self) -> impl Iterator<Item = ModalityKind> + '_ {
        self.streams.keys().copied()
    }

    pub fn auxiliary_modalities(&self) -> Vec<ModalityKind> {
        self.modalities().filter(|k| k.is_auxiliary()).collect()
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    /// Normalization policy recorded for an auxiliary stream, if any.
    pub fn norm_for(&self, kind: ModalityKind) -> Option<&NormPolicy> {
        self.aux_norm.get(&kind)
    }

    pub fn aux_norm(&self) -> &BTreeMap<ModalityKind, NormPolicy> {
        &self.aux_norm
    }
}
