use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box with top-left origin covering `[x, x+w) × [y, y+h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(Error::invalid("box coordinates must be finite"));
        }
        if w < 0.0 || h < 0.0 {
            return Err(Error::invalid(format!(
                "box extent must be non-negative, got w={w} h={h}"
            )));
        }
        Ok(Self { x, y, w, h })
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self {
            x: cx - w / 2.0,
            y: cy - h / 2.0,
            w,
            h,
        }
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self {
            x: self.x + dx,
            y: self.y + dy,
            ..*self
        }
    }

    /// Whether the box lies entirely within a `width × height` frame.
    pub fn inside(&self, width: usize, height: usize) -> bool {
        self.x >= 0.0
            && self.y >= 0.0
            && self.x + self.w <= width as f64
            && self.y + self.h <= height as f64
    }
}

/// Per-frame ground truth. `box` is `None` exactly when the target is absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    #[serde(rename = "box")]
    bbox: Option<BBox>,
}

impl Annotation {
    pub fn present(bbox: BBox) -> Self {
        Self { bbox: Some(bbox) }
    }

    pub fn absent() -> Self {
        Self { bbox: None }
    }

    pub fn is_present(&self) -> bool {
        self.bbox.is_some()
    }

    pub fn bbox(&self) -> Option<&BBox> {
        self.bbox.as_ref()
    }
}

impl From<Option<BBox>> for Annotation {
    fn from(bbox: Option<BBox>) -> Self {
        Self { bbox }
    }
}
