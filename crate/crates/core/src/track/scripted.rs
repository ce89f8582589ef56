use crate::error::Result;
use crate::geometry::{Annotation, BBox};
use crate::image::PixelImage;

use super::{Tracker, TrackerOutput};

/// Replays a fixed list of outputs, one per frame (index 0 is the init
/// frame and is never replayed). Used as a protocol stub.
#[derive(Debug, Clone)]
pub struct ScriptedTracker {
    outputs: Vec<TrackerOutput>,
    next: usize,
}

impl ScriptedTracker {
    pub fn new(outputs: Vec<TrackerOutput>) -> Self {
        Self { outputs, next: 1 }
    }

    /// Reports the ground-truth box with confidence 1 on every frame where
    /// the target is present, and stays silent when it is absent.
    pub fn perfect(gts: &[Annotation]) -> Self {
        Self::from_ground_truth(gts, false)
    }

    /// Like [`ScriptedTracker::perfect`] but also reports the last known box
    /// on target-absent frames.
    pub fn always_report(gts: &[Annotation]) -> Self {
        Self::from_ground_truth(gts, true)
    }

    fn from_ground_truth(gts: &[Annotation], report_absent: bool) -> Self {
        let mut last = gts
            .iter()
            .find_map(|a| a.bbox().copied())
            .unwrap_or(BBox { x: 0.0, y: 0.0, w: 0.0, h: 0.0 });
        let outputs = gts
            .iter()
            .map(|a| match a.bbox() {
                Some(b) => {
                    last = *b;
                    TrackerOutput {
                        bbox: *b,
                        confidence: 1.0,
                        reported: true,
                    }
                }
                None => TrackerOutput {
                    bbox: last,
                    confidence: if report_absent { 1.0 } else { 0.0 },
                    reported: report_absent,
                },
            })
            .collect();
        Self::new(outputs)
    }
}

impl Tracker for ScriptedTracker {
    fn init(&mut self, _frame: &PixelImage, _initial: BBox) -> Result<()> {
        self.next = 1;
        Ok(())
    }

    fn step(&mut self, _frame: &PixelImage) -> TrackerOutput {
        let out = self
            .outputs
            .get(self.next)
            .or_else(|| self.outputs.last())
            .copied()
            .unwrap_or(TrackerOutput {
                bbox: BBox { x: 0.0, y: 0.0, w: 0.0, h: 0.0 },
                confidence: 0.0,
                reported: false,
            });
        self.next += 1;
        out
    }
}
