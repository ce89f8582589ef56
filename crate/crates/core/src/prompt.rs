//! Multi-modal prompt compositor.
//!
//! The dual prompt is `λ·Color(A) + (1−λ)·Color(V)`; the triple prompt is
//! `α·Color(A₁) + β·Color(A₂) + γ·Color(V)` with `α + β + γ = 1`. Blending is
//! done in real arithmetic on stored intensities; quantization happens only
//! when frames are written to disk.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dye::{color_with_background, ColormapKind, NormPolicy};
use crate::error::{Error, Result};
use crate::events::EventBackground;
use crate::image::{clamp_unit, PixelImage};
use crate::sequence::{ModalSequence, ModalityKind};

pub const DEFAULT_LAMBDA: f64 = 0.05;

/// λ values swept by the ablation.
pub const LAMBDA_GRID: [f64; 5] = [0.0, 0.01, 0.05, 0.1, 0.2];

const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PromptWeights {
    Dual { lambda: f64 },
    Triple { alpha: f64, beta: f64, gamma: f64 },
}

impl PromptWeights {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PromptWeights::Dual { lambda } => check_lambda(lambda),
            PromptWeights::Triple { alpha, beta, gamma } => check_triple(alpha, beta, gamma),
        }
    }

    fn aux_count(&self) -> usize {
        match self {
            PromptWeights::Dual { .. } => 1,
            PromptWeights::Triple { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptConfig {
    pub weights: PromptWeights,
    /// Auxiliary streams to blend, in weight order. Empty means "the
    /// sequence's auxiliary streams in tag order".
    #[serde(default)]
    pub aux_modalities: Vec<ModalityKind>,
    /// Per-modality colormap overrides; unlisted modalities use
    /// [`ColormapKind::default_for`].
    #[serde(default)]
    pub colormaps: BTreeMap<ModalityKind, ColormapKind>,
    /// Overrides the normalization recorded in the sequence.
    #[serde(default)]
    pub norm: Option<NormPolicy>,
    #[serde(default)]
    pub event_background: EventBackground,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self::dual(DEFAULT_LAMBDA)
    }
}

impl PromptConfig {
    pub fn dual(lambda: f64) -> Self {
        Self {
            weights: PromptWeights::Dual { lambda },
            aux_modalities: Vec::new(),
            colormaps: BTreeMap::new(),
            norm: None,
            event_background: EventBackground::default(),
        }
    }

    pub fn triple(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            weights: PromptWeights::Triple { alpha, beta, gamma },
            ..Self::dual(DEFAULT_LAMBDA)
        }
    }

    /// Sets the colormap for every auxiliary modality. The polarity map is
    /// only applied to event streams.
    pub fn with_colormap(mut self, map: ColormapKind) -> Self {
        for kind in [ModalityKind::Depth, ModalityKind::Thermal, ModalityKind::Event] {
            if kind != ModalityKind::Event && map == ColormapKind::EventPolarity {
                continue;
            }
            self.colormaps.insert(kind, map);
        }
        self
    }

    pub fn colormap_for(&self, kind: ModalityKind) -> ColormapKind {
        self.colormaps
            .get(&kind)
            .copied()
            .unwrap_or_else(|| ColormapKind::default_for(kind))
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if let Some(norm) = &self.norm {
            norm.validate()?;
        }
        if self.aux_modalities.contains(&ModalityKind::Visible) {
            return Err(Error::Config("visible cannot be an auxiliary stream".into()));
        }
        Ok(())
    }

    /// Resolves which auxiliary streams of `seq` this config blends.
    pub fn resolve_aux(&self, seq: &ModalSequence) -> Result<Vec<ModalityKind>> {
        let need = self.weights.aux_count();
        let chosen = if self.aux_modalities.is_empty() {
            seq.auxiliary_modalities()
        } else {
            self.aux_modalities.clone()
        };
        for kind in &chosen {
            if seq.stream(*kind).is_none() {
                return Err(Error::Config(format!(
                    "sequence `{}` has no {kind} stream",
                    seq.name()
                )));
            }
        }
        if chosen.len() < need {
            return Err(Error::Config(format!(
                "sequence `{}` needs {need} auxiliary stream(s) (depth, thermal or event), found {}",
                seq.name(),
                chosen.len()
            )));
        }
        if self.aux_modalities.is_empty() && chosen.len() > need {
            return Err(Error::Config(format!(
                "sequence `{}` has {} auxiliary streams; name the one(s) to blend",
                seq.name(),
                chosen.len()
            )));
        }
        Ok(chosen.into_iter().take(need).collect())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::invalid(format!("lambda {lambda} outside [0, 1]")))
    }
}

fn check_triple(alpha: f64, beta: f64, gamma: f64) -> Result<()> {
    if !(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0) {
        return Err(Error::invalid(format!(
            "triple weights must be non-negative, got ({alpha}, {beta}, {gamma})"
        )));
    }
    let sum = alpha + beta + gamma;
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::invalid(format!(
            "triple weights must sum to 1, got {sum}"
        )));
    }
    Ok(())
}

fn check_rgb_pair(v: &PixelImage, a: &PixelImage) -> Result<()> {
    if v.dims() != a.dims() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {:?} vs {:?}",
            v.dims(),
            a.dims()
        )));
    }
    if v.channels() != 3 || a.channels() != 3 {
        return Err(Error::invalid("prompt inputs must be dyed 3-channel images"));
    }
    Ok(())
}

/// `λ·a + (1−λ)·v` per pixel and channel.
pub fn compose_dual(v: &PixelImage, a: &PixelImage, lambda: f64) -> Result<PixelImage> {
    check_lambda(lambda)?;
    check_rgb_pair(v, a)?;
    let keep = 1.0 - lambda;
    let data = v
        .data()
        .iter()
        .zip(a.data())
        .map(|(&vv, &aa)| clamp_unit(lambda * aa + keep * vv))
        .collect();
    Ok(PixelImage::from_parts(v.width(), v.height(), 3, data))
}

/// `α·a1 + β·a2 + γ·v` per pixel and channel.
pub fn compose_triple(
    v: &PixelImage,
    a1: &PixelImage,
    a2: &PixelImage,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> Result<PixelImage> {
    check_triple(alpha, beta, gamma)?;
    check_rgb_pair(v, a1)?;
    check_rgb_pair(v, a2)?;
    let data = v
        .data()
        .iter()
        .zip(a1.data())
        .zip(a2.data())
        .map(|((&vv, &x1), &x2)| clamp_unit(alpha * x1 + beta * x2 + gamma * vv))
        .collect();
    Ok(PixelImage::from_parts(v.width(), v.height(), 3, data))
}

/// Dyes one auxiliary frame of `seq` under `cfg`.
pub fn dye_aux_frame(
    seq: &ModalSequence,
    cfg: &PromptConfig,
    kind: ModalityKind,
    index: usize,
) -> Result<PixelImage> {
    let frames = seq.stream(kind).ok_or_else(|| {
        Error::Config(format!("sequence `{}` has no {kind} stream", seq.name()))
    })?;
    let frame = frames
        .get(index)
        .ok_or_else(|| Error::invalid(format!("frame {index} out of range")))?;
    let norm = cfg
        .norm
        .or_else(|| seq.norm_for(kind).copied())
        .unwrap_or_default();
    color_with_background(frame, kind, cfg.colormap_for(kind), &norm, cfg.event_background)
}

/// Prompts every frame of `seq`. Frame `i` of the output blends dyed
/// visible frame `i` with the dyed auxiliary frame(s) `i`. The first frame
/// (which carries the initial box) is prompted like every other frame.
pub fn prompt_sequence(seq: &ModalSequence, cfg: &PromptConfig) -> Result<Vec<PixelImage>> {
    cfg.validate()?;
    let aux = cfg.resolve_aux(seq)?;
    (0..seq.len())
        .into_par_iter()
        .map(|i| prompt_frame(seq, cfg, &aux, i))
        .collect()
}

fn prompt_frame(
    seq: &ModalSequence,
    cfg: &PromptConfig,
    aux: &[ModalityKind],
    i: usize,
) -> Result<PixelImage> {
    let v = seq.visible()[i].to_rgb();
    match cfg.weights {
        PromptWeights::Dual { lambda } => {
            // λ = 0 never looks at the auxiliary stream
            if lambda == 0.0 {
                return Ok(v);
            }
            let a = dye_aux_frame(seq, cfg, aux[0], i)?;
            compose_dual(&v, &a, lambda)
        }
        PromptWeights::Triple { alpha, beta, gamma } => {
            let a1 = dye_aux_frame(seq, cfg, aux[0], i)?;
            let a2 = dye_aux_frame(seq, cfg, aux[1], i)?;
            compose_triple(&v, &a1, &a2, alpha, beta, gamma)
        }
    }
}
