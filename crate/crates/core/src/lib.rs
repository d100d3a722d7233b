//! Mask-based multi-object tracking and segmentation.
//!
//! Detections are linked frame to frame with optical flow ([`sta`]), the
//! resulting tracklets are merged across occlusions by appearance similarity
//! ([`lta`]) and the output is scored with HOTA, CLEAR-MOTS and IDF1
//! ([`metrics`]).

pub mod error;
pub mod io;
pub mod lta;
pub mod mask;
pub mod metrics;
pub mod model;
pub mod oracles;
pub mod pipeline;
pub mod raster;
pub mod similarity;
pub mod sta;
pub mod synth;

pub use error::{Error, Result};
pub use mask::BinaryMask;
pub use model::{
    BackendKind, ClassId, Detection, FrameIdx, PipelineConfig, RefVariant, SequenceMeta, Track,
    TrackId, TrackedMask, Tracklet,
};
