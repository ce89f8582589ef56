//! Tracker contract and implementations.
//!
//! A tracker is initialised with the first frame and its box, then stepped
//! through the remaining frames one at a time. Trackers only ever read the
//! frames they are given.

mod external;
mod mosse;
mod scripted;

use serde::{Deserialize, Serialize};

pub use self::external::{format_output_line, parse_output_line, parse_tracker_output, ExternalTracker};
pub use self::mosse::{tracker_init, CorrelationFilter, MosseParams, MosseTracker};
pub use self::scripted::ScriptedTracker;

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::image::PixelImage;

/// Confidence attached to the echoed initial box.
pub const INIT_CONFIDENCE: f64 = f64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerOutput {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub confidence: f64,
    /// When false the box is the last known one carried forward.
    pub reported: bool,
}

pub trait Tracker {
    fn init(&mut self, frame: &PixelImage, initial: BBox) -> Result<()>;
    fn step(&mut self, frame: &PixelImage) -> TrackerOutput;
}

/// Runs `tracker` over `frames`. The first output echoes `initial` with
/// [`INIT_CONFIDENCE`]; the rest come from sequential steps.
pub fn run_tracker(
    tracker: &mut dyn Tracker,
    frames: &[PixelImage],
    initial: BBox,
) -> Result<Vec<TrackerOutput>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::invalid("cannot track an empty frame list"))?;
    tracker.init(first, initial)?;
    let mut out = Vec::with_capacity(frames.len());
    out.push(TrackerOutput {
        bbox: initial,
        confidence: INIT_CONFIDENCE,
        reported: true,
    });
    out.extend(frames[1..].iter().map(|f| tracker.step(f)));
    Ok(out)
}
