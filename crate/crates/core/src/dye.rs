//! Dyeing: maps any modality to a 3-channel color image.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{decode_polarity, polarity_to_color_with, EventBackground};
use crate::image::{clamp_unit, PixelImage};
use crate::sequence::ModalityKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColormapKind {
    Jet,
    Red,
    Gray,
    EventPolarity,
    Passthrough,
}

impl ColormapKind {
    pub fn name(self) -> &'static str {
        match self {
            ColormapKind::Jet => "jet",
            ColormapKind::Red => "red",
            ColormapKind::Gray => "gray",
            ColormapKind::EventPolarity => "event",
            ColormapKind::Passthrough => "passthrough",
        }
    }

    /// Colormap used when none is configured for a modality.
    pub fn default_for(kind: ModalityKind) -> Self {
        match kind {
            ModalityKind::Visible => ColormapKind::Passthrough,
            ModalityKind::Depth | ModalityKind::Thermal => ColormapKind::Jet,
            ModalityKind::Event => ColormapKind::EventPolarity,
        }
    }
}

impl fmt::Display for ColormapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ColormapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "jet" => Ok(ColormapKind::Jet),
            "red" => Ok(ColormapKind::Red),
            "gray" | "grey" => Ok(ColormapKind::Gray),
            "event" | "event_polarity" | "polarity" => Ok(ColormapKind::EventPolarity),
            "passthrough" | "none" => Ok(ColormapKind::Passthrough),
            other => Err(Error::invalid(format!("unknown colormap `{other}`"))),
        }
    }
}

/// How raw single-channel values are scaled into `[0, 1]` before mapping.
///
/// `FixedRange` bounds are expressed in the same units as the stored image;
/// use [`NormPolicy::scaled`] to convert sensor units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum NormPolicy {
    FixedRange { lo: f64, hi: f64 },
    Percentile { p_lo: f64, p_hi: f64 },
    MinMax,
}

impl Default for NormPolicy {
    fn default() -> Self {
        NormPolicy::Percentile {
            p_lo: 2.0,
            p_hi: 98.0,
        }
    }
}

impl NormPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NormPolicy::FixedRange { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::invalid(format!(
                        "fixed range requires lo < hi, got [{lo}, {hi}]"
                    )));
                }
            }
            NormPolicy::Percentile { p_lo, p_hi } => {
                if !(0.0 <= p_lo && p_lo < p_hi && p_hi <= 100.0) {
                    return Err(Error::invalid(format!(
                        "percentiles require 0 <= p_lo < p_hi <= 100, got ({p_lo}, {p_hi})"
                    )));
                }
            }
            NormPolicy::MinMax => {}
        }
        Ok(())
    }

    /// Rescales a fixed range by `factor` (e.g. `1/65535` for raw 16-bit
    /// units); other modes are unaffected.
    pub fn scaled(self, factor: f64) -> Self {
        match self {
            NormPolicy::FixedRange { lo, hi } => NormPolicy::FixedRange {
                lo: lo * factor,
                hi: hi * factor,
            },
            other => other,
        }
    }
}

/// Affinely maps a single-channel image into `[0, 1]` and clamps.
/// A degenerate range maps every pixel to 0.5.
pub fn normalize(img: &PixelImage, policy: &NormPolicy) -> Result<PixelImage> {
    if img.channels() != 1 {
        return Err(Error::invalid(format!(
            "normalize expects a 1-channel image, got {} channels",
            img.channels()
        )));
    }
    policy.validate()?;
    let (lo, hi) = match *policy {
        NormPolicy::FixedRange { lo, hi } => (lo, hi),
        NormPolicy::MinMax => img
            .data()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            }),
        NormPolicy::Percentile { p_lo, p_hi } => {
            let mut sorted = img.data().to_vec();
            sorted.sort_by(f64::total_cmp);
            (percentile(&sorted, p_lo), percentile(&sorted, p_hi))
        }
    };
    let span = hi - lo;
    if span <= 0.0 {
        return Ok(img.map(|_| 0.5));
    }
    Ok(img.map(|v| (v - lo) / span))
}

/// Linear interpolation between order statistics of an ascending slice.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let i = rank.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    let f = rank - i as f64;
    sorted[i] * (1.0 - f) + sorted[j] * f
}

fn check_unit(v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("colormap input {v} outside [0, 1]")))
    }
}

/// Piecewise-linear JET: dark blue at 0, green at 0.5, dark red at 1.
pub fn jet(v: f64) -> Result<[f64; 3]> {
    check_unit(v)?;
    Ok(jet_unchecked(v))
}

#[inline]
fn jet_unchecked(v: f64) -> [f64; 3] {
    let s = 4.0 * v;
    [
        clamp_unit(1.5 - (s - 3.0).abs()),
        clamp_unit(1.5 - (s - 2.0).abs()),
        clamp_unit(1.5 - (s - 1.0).abs()),
    ]
}

/// Single-hue ramp from black to pure red.
pub fn red(v: f64) -> Result<[f64; 3]> {
    check_unit(v)?;
    Ok([v, 0.0, 0.0])
}

pub fn gray(v: f64) -> Result<[f64; 3]> {
    check_unit(v)?;
    Ok([v, v, v])
}

/// Dyes a frame into three channels (`Color(·)`).
///
/// 3-channel visible frames are returned untouched; 1-channel visible frames
/// are replicated. Auxiliary frames are normalized under `policy` and mapped
/// per pixel. Event frames under [`ColormapKind::EventPolarity`] are decoded
/// from their polarity encoding and painted red/blue on a mid-gray background.
pub fn color(
    frame: &PixelImage,
    kind: ModalityKind,
    map: ColormapKind,
    policy: &NormPolicy,
) -> Result<PixelImage> {
    color_with_background(frame, kind, map, policy, EventBackground::default())
}

pub fn color_with_background(
    frame: &PixelImage,
    kind: ModalityKind,
    map: ColormapKind,
    policy: &NormPolicy,
    background: EventBackground,
) -> Result<PixelImage> {
    if kind == ModalityKind::Visible {
        return Ok(frame.to_rgb());
    }
    if map == ColormapKind::EventPolarity && kind != ModalityKind::Event {
        return Err(Error::invalid(format!(
            "event polarity colormap cannot dye a {kind} frame"
        )));
    }
    match map {
        ColormapKind::Passthrough => Ok(frame.to_rgb()),
        ColormapKind::EventPolarity => {
            if frame.channels() == 3 {
                // pre-rendered event frame
                Ok(frame.clone())
            } else {
                Ok(polarity_to_color_with(&decode_polarity(frame), background))
            }
        }
        ColormapKind::Jet | ColormapKind::Red | ColormapKind::Gray => {
            let single = frame.luminance();
            let normed = normalize(&single, policy)?;
            let lut: fn(f64) -> [f64; 3] = match map {
                ColormapKind::Jet => jet_unchecked,
                ColormapKind::Red => |v| [v, 0.0, 0.0],
                _ => |v| [v, v, v],
            };
            let data = normed.data().iter().flat_map(|&v| lut(v)).collect();
            PixelImage::new(frame.width(), frame.height(), 3, data)
        }
    }
}
