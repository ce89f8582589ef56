//! Subprocess protocol for third-party trackers.
//!
//! The tracker program is invoked as
//! `<program> [args...] <frames_dir> <x>,<y>,<w>,<h>` where `frames_dir`
//! holds numbered 8-bit PNGs (`00001.png`, `00002.png`, ...) and the box is
//! the initial target box on the first frame. It must print exactly one line
//! per frame on standard output, LF-terminated:
//!
//! ```text
//! x,y,w,h,confidence
//! ```
//!
//! A line whose four box fields are `nan` means "target not reported"; the
//! previous box is carried forward.

use std::path::Path;
use std::process::Command;

use crate::error::{Error, Result};
use crate::geometry::BBox;

use super::{TrackerOutput, INIT_CONFIDENCE};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalTracker {
    pub program: String,
    pub args: Vec<String>,
}

impl ExternalTracker {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
        }
    }

    /// Runs the program over `n_frames` frames in `frames_dir`. The first
    /// output is replaced by the echoed initial box.
    pub fn run(&self, frames_dir: &Path, n_frames: usize, initial: BBox) -> Result<Vec<TrackerOutput>> {
        let output = Command::new(&self.program)
            .args(&self.args)
            .arg(frames_dir)
            .arg(format!("{},{},{},{}", initial.x, initial.y, initial.w, initial.h))
            .output()
            .map_err(|e| Error::External(format!("cannot start `{}`: {e}", self.program)))?;
        if !output.status.success() {
            return Err(Error::External(format!(
                "`{}` exited with {}: {}",
                self.program,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let stdout = String::from_utf8(output.stdout)
            .map_err(|_| Error::External("tracker output is not UTF-8".into()))?;
        let mut outputs = parse_tracker_output(&stdout, initial)?;
        if outputs.len() != n_frames {
            return Err(Error::External(format!(
                "expected {n_frames} output lines, got {}",
                outputs.len()
            )));
        }
        outputs[0] = TrackerOutput {
            bbox: initial,
            confidence: INIT_CONFIDENCE,
            reported: true,
        };
        Ok(outputs)
    }
}

/// Parses one `x,y,w,h,confidence` line. Returns `None` for the box when
/// all four box fields are `nan`.
pub fn parse_output_line(line: &str, lineno: usize) -> Result<(Option<BBox>, f64)> {
    let fields: Vec<&str> = line.trim().split(',').map(str::trim).collect();
    if fields.len() != 5 {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected `x,y,w,h,confidence`, found {} fields", fields.len()),
        });
    }
    let mut v = [0.0f64; 5];
    for (slot, f) in v.iter_mut().zip(&fields) {
        *slot = f.parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("non-numeric field `{f}`"),
        })?;
    }
    let confidence = v[4];
    if confidence.is_nan() {
        return Err(Error::Parse {
            line: lineno,
            message: "confidence is nan".into(),
        });
    }
    if v[..4].iter().all(|x| x.is_nan()) {
        return Ok((None, confidence));
    }
    let bbox = BBox::new(v[0], v[1], v[2], v[3]).map_err(|e| Error::Parse {
        line: lineno,
        message: e.to_string(),
    })?;
    Ok((Some(bbox), confidence))
}

/// Parses a full tracker transcript into outputs.
pub fn parse_tracker_output(text: &str, initial: BBox) -> Result<Vec<TrackerOutput>> {
    let mut last = initial;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let (bbox, confidence) = parse_output_line(line, i + 1)?;
            Ok(match bbox {
                Some(b) => {
                    last = b;
                    TrackerOutput {
                        bbox: b,
                        confidence,
                        reported: true,
                    }
                }
                None => TrackerOutput {
                    bbox: last,
                    confidence,
                    reported: false,
                },
            })
        })
        .collect()
}

/// Formats an output in the protocol's line format (without newline).
pub fn format_output_line(out: &TrackerOutput) -> String {
    if out.reported {
        let b = out.bbox;
        format!("{},{},{},{},{}", b.x, b.y, b.w, b.h, out.confidence)
    } else {
        format!("nan,nan,nan,nan,{}", out.confidence)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_lines() {
        let (b, c) = parse_output_line("1,2,3,4,0.5", 1).unwrap();
        assert_eq!(b, Some(BBox { x: 1.0, y: 2.0, w: 3.0, h: 4.0 }));
        assert_eq!(c, 0.5);
        let (b, c) = parse_output_line("nan,nan,nan,nan,0.1", 1).unwrap();
        assert!(b.is_none());
        assert_eq!(c, 0.1);
        assert!(parse_output_line("1,2,3,4", 3).is_err());
        assert!(parse_output_line("1,2,-3,4,1", 3).is_err());
        assert!(parse_output_line("1,2,3,4,x", 3).is_err());
    }

    #[test]
    fn transcript_carries_box_forward() {
        let init = BBox { x: 0.0, y: 0.0, w: 2.0, h: 2.0 };
        let outs = parse_tracker_output("0,0,2,2,9\n5,5,2,2,3\nnan,nan,nan,nan,0\n", init).unwrap();
        assert_eq!(outs.len(), 3);
        assert!(!outs[2].reported);
        assert_eq!(outs[2].bbox, outs[1].bbox);
        assert_eq!(format_output_line(&outs[1]), "5,5,2,2,3");
        assert_eq!(format_output_line(&outs[2]), "nan,nan,nan,nan,0");
    }
}
