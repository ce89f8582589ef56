//! Multi-modal visual prompting for single-object tracking.
//!
//! Auxiliary modalities (depth, thermal, event) are dyed into three-channel
//! color images and blended into the visible stream at a small weight. The
//! resulting frames can be fed to any RGB tracker without retraining it.
//!
//! The crate is organised bottom-up:
//!
//! - [`image`], [`geometry`], [`sequence`]: shared value types.
//! - [`dye`]: normalization and colormaps (`Color(·)`).
//! - [`events`]: event-camera CSV parsing and polarity frames.
//! - [`prompt`]: the dual and triple blend compositors.
//! - [`ingest`]: manifest-driven sequence loading and ground-truth files.
//! - [`track`]: the tracker contract and a correlation-filter reference tracker.
//! - [`metrics`]: short-term curves and the long-term Pr/Re/F protocol.
//! - [`synth`]: seeded synthetic multi-modal sequences.

pub mod dye;
pub mod error;
pub mod events;
pub mod geometry;
pub mod image;
pub mod ingest;
pub mod metrics;
pub mod prompt;
pub mod sequence;
pub mod synth;
pub mod track;

pub use crate::error::{Error, Result};
pub use crate::geometry::{Annotation, BBox};
pub use crate::image::PixelImage;
pub use crate::sequence::{ModalSequence, ModalityKind};
