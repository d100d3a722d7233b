//! Detections, tracklets and pipeline configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mask::BinaryMask;

pub type FrameIdx = u32;
pub type ClassId = u32;
pub type TrackId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceMeta {
    pub sequence_id: String,
    pub width: u32,
    pub height: u32,
    pub fps: f64,
    pub frame_count: u32,
}

impl SequenceMeta {
    pub fn new(
        sequence_id: impl Into<String>,
        width: u32,
        height: u32,
        fps: f64,
        frame_count: u32,
    ) -> Result<Self> {
        let meta = SequenceMeta {
            sequence_id: sequence_id.into(),
            width,
            height,
            fps,
            frame_count,
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config(format!(
                "sequence {}: image dimensions must be positive",
                self.sequence_id
            )));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Config(format!(
                "sequence {}: fps must be positive",
                self.sequence_id
            )));
        }
        if self.frame_count == 0 {
            return Err(Error::Config(format!(
                "sequence {}: frame_count must be at least 1",
                self.sequence_id
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame: FrameIdx,
    pub class_id: ClassId,
    pub score: f64,
    pub mask: BinaryMask,
}

impl Detection {
    pub fn new(frame: FrameIdx, class_id: ClassId, score: f64, mask: BinaryMask) -> Self {
        Detection {
            frame,
            class_id,
            score,
            mask,
        }
    }
}

/// Frame-ordered detections believed to belong to one object. A merged
/// long-term track uses the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    pub id: TrackId,
    pub class_id: ClassId,
    pub detections: Vec<Detection>,
}

pub type Track = Tracklet;

impl Tracklet {
    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    pub fn first(&self) -> &Detection {
        &self.detections[0]
    }

    pub fn last(&self) -> &Detection {
        &self.detections[self.detections.len() - 1]
    }

    pub fn first_frame(&self) -> FrameIdx {
        self.first().frame
    }

    pub fn last_frame(&self) -> FrameIdx {
        self.last().frame
    }

    pub fn frames(&self) -> impl Iterator<Item = FrameIdx> + '_ {
        self.detections.iter().map(|d| d.frame)
    }

    pub fn detection_at(&self, frame: FrameIdx) -> Option<&Detection> {
        self.detections
            .binary_search_by_key(&frame, |d| d.frame)
            .ok()
            .map(|i| &self.detections[i])
    }

    pub fn max_score(&self) -> f64 {
        self.detections
            .iter()
            .map(|d| d.score)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A mask carrying a track identity, as found in result and ground-truth files.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedMask {
    pub frame: FrameIdx,
    pub track_id: TrackId,
    pub class_id: ClassId,
    pub mask: BinaryMask,
}

/// Flattens tracks into per-frame records sorted by `(frame, track_id)`.
pub fn tracks_to_records(tracks: &[Track]) -> Vec<TrackedMask> {
    let mut out: Vec<TrackedMask> = tracks
        .iter()
        .flat_map(|t| {
            t.detections.iter().map(move |d| TrackedMask {
                frame: d.frame,
                track_id: t.id,
                class_id: t.class_id,
                mask: d.mask.clone(),
            })
        })
        .collect();
    out.sort_by_key(|r| (r.frame, r.track_id));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RefVariant {
    /// Closest frame only.
    Frame1,
    /// Two closest frames.
    Frames12,
    /// Closest frame plus the n-th one when available, else the second.
    Frames15_2,
    /// Two closest frames plus the n-th one when available.
    Frames125,
}

impl RefVariant {
    pub const ALL: [RefVariant; 4] = [
        RefVariant::Frame1,
        RefVariant::Frames12,
        RefVariant::Frames15_2,
        RefVariant::Frames125,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RefVariant::Frame1 => "frame1",
            RefVariant::Frames12 => "frames12",
            RefVariant::Frames15_2 => "frames15_2",
            RefVariant::Frames125 => "frames125",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackendKind {
    StmHeatmap,
    Rgb2x2,
    RgbNxP,
    Reid2x2,
    ReidNxP,
    Oracle,
}

impl BackendKind {
    pub const ALL: [BackendKind; 6] = [
        BackendKind::StmHeatmap,
        BackendKind::Rgb2x2,
        BackendKind::RgbNxP,
        BackendKind::Reid2x2,
        BackendKind::ReidNxP,
        BackendKind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BackendKind::StmHeatmap => "stm_heatmap",
            BackendKind::Rgb2x2 => "rgb_2x2",
            BackendKind::RgbNxP => "rgb_nxp",
            BackendKind::Reid2x2 => "reid_2x2",
            BackendKind::ReidNxP => "reid_nxp",
            BackendKind::Oracle => "oracle",
        }
    }
}

macro_rules! named_enum_parse {
    ($ty:ty, $what:literal) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                let norm = s.trim().to_ascii_lowercase().replace('-', "_");
                <$ty>::ALL
                    .iter()
                    .copied()
                    .find(|v| v.name() == norm)
                    .ok_or_else(|| Error::Config(format!(concat!("unknown ", $what, " '{}'"), s)))
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

named_enum_parse!(RefVariant, "reference variant");
named_enum_parse!(BackendKind, "similarity backend");

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Minimum detection score.
    pub theta_d: f64,
    /// Minimum mask area in pixels.
    pub theta_a: u64,
    /// Short-term mask IoU gate (strict).
    pub theta_s: f64,
    /// Maximum temporal cost in seconds.
    pub tau_t: f64,
    /// Maximum normalized centroid distance.
    pub tau_s: f64,
    /// Maximum number of shared frames.
    pub tau_o: u32,
    /// Offset of the farther reference mask.
    pub n_ref: usize,
    /// Long-term similarity threshold (strict).
    pub theta_l: f64,
    /// Minimum peak detection score of a final track.
    pub theta_f: f64,
    pub ref_variant: RefVariant,
    pub backend: BackendKind,
    /// Bins per colour channel for histogram backends.
    pub histogram_bins: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            theta_d: 0.50,
            theta_a: 128,
            theta_s: 0.15,
            tau_t: 1.5,
            tau_s: 0.2,
            tau_o: 1,
            n_ref: 5,
            theta_l: 0.30,
            theta_f: 0.90,
            ref_variant: RefVariant::Frames15_2,
            backend: BackendKind::StmHeatmap,
            histogram_bins: 8,
        }
    }
}

impl PipelineConfig {
    pub const KEYS: [&'static str; 12] = [
        "theta_d",
        "theta_a",
        "theta_s",
        "tau_t",
        "tau_s",
        "tau_o",
        "n_ref",
        "theta_l",
        "theta_f",
        "ref_variant",
        "backend",
        "histogram_bins",
    ];

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
        }
        match key {
            "theta_d" => self.theta_d = num(key, value)?,
            "theta_a" => self.theta_a = num(key, value)?,
            "theta_s" => self.theta_s = num(key, value)?,
            "tau_t" => self.tau_t = num(key, value)?,
            "tau_s" => self.tau_s = num(key, value)?,
            "tau_o" => self.tau_o = num(key, value)?,
            "n_ref" => self.n_ref = num(key, value)?,
            "theta_l" => self.theta_l = num(key, value)?,
            "theta_f" => self.theta_f = num(key, value)?,
            "ref_variant" => self.ref_variant = value.parse()?,
            "backend" => self.backend = value.parse()?,
            "histogram_bins" => self.histogram_bins = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown configuration key '{key}'"))),
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v.is_finite() && (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("theta_d", self.theta_d)?;
        unit("theta_s", self.theta_s)?;
        unit("theta_f", self.theta_f)?;
        if self.theta_l.is_nan() {
            return Err(Error::Config("theta_l must be a number".into()));
        }
        if !(self.tau_t >= 0.0 && self.tau_s >= 0.0) {
            return Err(Error::Config("tau_t and tau_s must be non-negative".into()));
        }
        if self.n_ref < 2 {
            return Err(Error::Config("n_ref must be at least 2".into()));
        }
        if self.histogram_bins == 0 || self.histogram_bins > 256 {
            return Err(Error::Config("histogram_bins must lie in [1, 256]".into()));
        }
        Ok(())
    }
}

/// Keeps detections with `score >= theta_d` and `area >= theta_a`, in input order.
pub fn filter_detections(
    dets: &[Detection],
    meta: &SequenceMeta,
    cfg: &PipelineConfig,
) -> Result<Vec<Detection>> {
    for d in dets {
        if d.mask.dims() != meta.dims() {
            return Err(Error::dims(
                meta.dims(),
                d.mask.dims(),
                format!("detection in frame {}", d.frame),
            ));
        }
    }
    Ok(dets
        .iter()
        .filter(|d| d.score >= cfg.theta_d && d.mask.area() >= cfg.theta_a)
        .cloned()
        .collect())
}

/// Class with the highest summed detection score; ties go to the smaller id.
pub fn tracklet_class(dets: &[Detection]) -> Option<ClassId> {
    let mut sums: BTreeMap<ClassId, f64> = BTreeMap::new();
    for d in dets {
        *sums.entry(d.class_id).or_default() += d.score;
    }
    let mut best: Option<(ClassId, f64)> = None;
    for (class, sum) in sums {
        if best.map_or(true, |(_, b)| sum > b) {
            best = Some((class, sum));
        }
    }
    best.map(|(c, _)| c)
}
