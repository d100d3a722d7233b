//! Tracklet-to-tracklet similarity backends.
//!
//! Every backend compares an earlier tracklet `A` with a later tracklet `B`
//! and returns `None` when an input it needs is unavailable; such pairs are
//! never merged.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::warn;

use crate::error::{Error, Result};
use crate::lta::{select_references, Role};
use crate::mask::BinaryMask;
use crate::model::{FrameIdx, PipelineConfig, RefVariant, TrackId, Tracklet};
use crate::oracles::GtIndex;
use crate::raster::{bhattacharyya, masked_histogram, RgbImage};

/// Per-pixel location probability, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    width: u32,
    height: u32,
    values: Vec<f32>,
}

impl Heatmap {
    pub fn new(width: u32, height: u32, values: Vec<f32>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::Config(format!(
                "heatmap of {width}x{height} needs {} values, got {}",
                width as usize * height as usize,
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config("heatmap values must lie in [0, 1]".into()));
        }
        Ok(Heatmap {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        Heatmap {
            width,
            height,
            values: vec![0.0; width as usize * height as usize],
        }
    }

    /// Hard heatmap equal to 1 on the mask.
    pub fn from_mask(mask: &BinaryMask) -> Self {
        let mut h = Heatmap::zeros(mask.width(), mask.height());
        for (x, y) in mask.pixels() {
            h.values[y as usize * mask.width() as usize + x as usize] = 1.0;
        }
        h
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn at(&self, x: u32, y: u32) -> f32 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    /// Separable box blur with the given radius; borders use the in-image mean.
    pub fn box_blur(&self, radius: u32) -> Heatmap {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = (self.width as usize, self.height as usize);
        let r = radius as usize;
        let pass = |src: &[f32], horizontal: bool| -> Vec<f32> {
            let mut out = vec![0f32; src.len()];
            for y in 0..h {
                for x in 0..w {
                    let (c, len) = if horizontal { (x, w) } else { (y, h) };
                    let lo = c.saturating_sub(r);
                    let hi = (c + r).min(len - 1);
                    let mut sum = 0f32;
                    for k in lo..=hi {
                        sum += if horizontal { src[y * w + k] } else { src[k * w + x] };
                    }
                    out[y * w + x] = sum / (hi - lo + 1) as f32;
                }
            }
            out
        };
        let values = pass(&pass(&self.values, true), false)
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect();
        Heatmap {
            width: self.width,
            height: self.height,
            values,
        }
    }
}

/// Cosine similarity between a heatmap and a mask flattened over the full image.
/// Zero when either vector has zero norm.
pub fn cosine_heatmap_mask(heatmap: &Heatmap, mask: &BinaryMask) -> Result<f64> {
    if heatmap.dims() != mask.dims() {
        return Err(Error::dims(heatmap.dims(), mask.dims(), "heatmap vs mask"));
    }
    let area = mask.area();
    let hnorm: f64 = heatmap
        .values
        .iter()
        .map(|&v| v as f64 * v as f64)
        .sum::<f64>()
        .sqrt();
    if area == 0 || hnorm == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = mask.pixels().map(|(x, y)| heatmap.at(x, y) as f64).sum();
    Ok(dot / (hnorm * (area as f64).sqrt()))
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
    let na: f64 = a.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Propagates a tracklet, memorised at its anchor frames, into a query frame.
pub trait HeatmapProvider: Sync {
    /// `anchors[0]` is the anchor closest to the other tracklet.
    fn heatmap(
        &self,
        reference: &Tracklet,
        anchors: &[FrameIdx],
        query: FrameIdx,
    ) -> Option<Cow<'_, Heatmap>>;
}

/// Appearance embedding of a tracklet's detection in one frame.
pub trait FeatureSource: Sync {
    fn feature(&self, tracklet: &Tracklet, frame: FrameIdx) -> Option<Cow<'_, [f32]>>;
}

/// Precomputed embeddings keyed by `(tracklet id, frame)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    pub dim: usize,
    pub rows: BTreeMap<(TrackId, FrameIdx), Vec<f32>>,
}

impl FeatureSource for FeatureTable {
    fn feature(&self, tracklet: &Tracklet, frame: FrameIdx) -> Option<Cow<'_, [f32]>> {
        self.rows
            .get(&(tracklet.id, frame))
            .map(|v| Cow::Borrowed(v.as_slice()))
    }
}

pub trait SimilarityBackend: Sync {
    fn similarity(&self, earlier: &Tracklet, later: &Tracklet) -> Option<f64>;
}

fn anchor_frames(t: &Tracklet, role: Role, variant: RefVariant, n: usize) -> Vec<FrameIdx> {
    select_references(t.len(), role, variant, n)
        .into_iter()
        .map(|i| t.detections[i].frame)
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Memory-propagation similarity: each tracklet's anchors are propagated into
/// the other tracklet's anchor frames and compared against its masks there.
pub struct StmBackend<'a> {
    pub provider: &'a dyn HeatmapProvider,
    pub variant: RefVariant,
    pub n_ref: usize,
}

impl SimilarityBackend for StmBackend<'_> {
    fn similarity(&self, a: &Tracklet, b: &Tracklet) -> Option<f64> {
        let anchors_a = anchor_frames(a, Role::Earlier, self.variant, self.n_ref);
        let anchors_b = anchor_frames(b, Role::Later, self.variant, self.n_ref);
        let mut scores = Vec::with_capacity(anchors_a.len() + anchors_b.len());
        for (reference, anchors, target, queries) in
            [(a, &anchors_a, b, &anchors_b), (b, &anchors_b, a, &anchors_a)]
        {
            for &q in queries.iter() {
                let Some(h) = self.provider.heatmap(reference, anchors, q) else {
                    warn!(
                        "no heatmap for tracklet {} (anchor {}) in frame {q}; skipping pair ({}, {})",
                        reference.id, anchors[0], a.id, b.id
                    );
                    return None;
                };
                let mask = &target.detection_at(q).expect("anchor frame of target").mask;
                match cosine_heatmap_mask(&h, mask) {
                    Ok(s) => scores.push(s),
                    Err(e) => {
                        warn!("heatmap for tracklet {} unusable: {e}", reference.id);
                        return None;
                    }
                }
            }
        }
        Some(mean(&scores))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// Anchor detections of each tracklet only.
    Anchors,
    /// Every detection of each tracklet.
    All,
}

fn paired_frames(
    a: &Tracklet,
    b: &Tracklet,
    pairing: Pairing,
    variant: RefVariant,
    n_ref: usize,
) -> (Vec<FrameIdx>, Vec<FrameIdx>) {
    match pairing {
        Pairing::Anchors => (
            anchor_frames(a, Role::Earlier, variant, n_ref),
            anchor_frames(b, Role::Later, variant, n_ref),
        ),
        Pairing::All => (a.frames().collect(), b.frames().collect()),
    }
}

/// One propagation the heatmap backend needs: tracklet `ref_id` memorised at
/// `anchors` (closest first) and read out in frame `query`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HeatmapRequest {
    pub ref_id: TrackId,
    pub anchors: Vec<FrameIdx>,
    pub query: FrameIdx,
}

impl HeatmapRequest {
    /// Storage key `(ref id, closest anchor, query)`.
    pub fn key(&self) -> (TrackId, FrameIdx, FrameIdx) {
        (self.ref_id, self.anchors[0], self.query)
    }
}

/// Heatmaps the memory backend will look up for the given `(earlier, later)`
/// tracklet index pairs, sorted and deduplicated.
pub fn heatmap_requests(
    tracklets: &[Tracklet],
    pairs: &[(usize, usize)],
    variant: RefVariant,
    n_ref: usize,
) -> Vec<HeatmapRequest> {
    let mut out = BTreeSet::new();
    for &(i, j) in pairs {
        let (a, b) = (&tracklets[i], &tracklets[j]);
        let anchors_a = anchor_frames(a, Role::Earlier, variant, n_ref);
        let anchors_b = anchor_frames(b, Role::Later, variant, n_ref);
        for (reference, anchors, queries) in [(a, &anchors_a, &anchors_b), (b, &anchors_b, &anchors_a)] {
            for &query in queries.iter() {
                out.insert(HeatmapRequest { ref_id: reference.id, anchors: anchors.clone(), query });
            }
        }
    }
    out.into_iter().collect()
}

/// Mean Bhattacharyya coefficient between masked colour histograms.
pub struct RgbBackend<'a> {
    pub images: &'a BTreeMap<FrameIdx, RgbImage>,
    pub pairing: Pairing,
    pub variant: RefVariant,
    pub n_ref: usize,
    pub bins: u32,
}

impl RgbBackend<'_> {
    fn histograms(&self, t: &Tracklet, frames: &[FrameIdx]) -> Option<Vec<crate::raster::ColorHistogram>> {
        frames
            .iter()
            .map(|&f| {
                let Some(img) = self.images.get(&f) else {
                    warn!("no image for frame {f}; skipping pairs of tracklet {}", t.id);
                    return None;
                };
                let det = t.detection_at(f).expect("frame of tracklet");
                masked_histogram(img, &det.mask, self.bins)
                    .map_err(|e| warn!("histogram for tracklet {} frame {f}: {e}", t.id))
                    .ok()
            })
            .collect()
    }
}

impl SimilarityBackend for RgbBackend<'_> {
    fn similarity(&self, a: &Tracklet, b: &Tracklet) -> Option<f64> {
        let (fa, fb) = paired_frames(a, b, self.pairing, self.variant, self.n_ref);
        let ha = self.histograms(a, &fa)?;
        let hb = self.histograms(b, &fb)?;
        let scores: Vec<f64> = ha
            .iter()
            .flat_map(|x| hb.iter().map(move |y| bhattacharyya(x, y)))
            .collect();
        Some(mean(&scores))
    }
}

/// Mean cosine similarity between re-identification embeddings.
pub struct ReidBackend<'a> {
    pub features: &'a dyn FeatureSource,
    pub pairing: Pairing,
    pub variant: RefVariant,
    pub n_ref: usize,
}

impl ReidBackend<'_> {
    fn vectors<'s>(&'s self, t: &Tracklet, frames: &[FrameIdx]) -> Option<Vec<Cow<'s, [f32]>>> {
        frames
            .iter()
            .map(|&f| {
                let v = self.features.feature(t, f);
                if v.is_none() {
                    warn!("no feature for tracklet {} frame {f}; skipping its pairs", t.id);
                }
                v
            })
            .collect()
    }
}

impl SimilarityBackend for ReidBackend<'_> {
    fn similarity(&self, a: &Tracklet, b: &Tracklet) -> Option<f64> {
        let (fa, fb) = paired_frames(a, b, self.pairing, self.variant, self.n_ref);
        let va = self.vectors(a, &fa)?;
        let vb = self.vectors(b, &fb)?;
        let scores: Vec<f64> = va
            .iter()
            .flat_map(|x| vb.iter().map(move |y| cosine(x, y)))
            .collect();
        Some(mean(&scores))
    }
}

/// Ground-truth identity agreement: 1 when both tracklets resolve to the same
/// annotated object, 0 otherwise.
pub struct OracleBackend<'a> {
    pub gt: &'a GtIndex,
}

impl SimilarityBackend for OracleBackend<'_> {
    fn similarity(&self, a: &Tracklet, b: &Tracklet) -> Option<f64> {
        let ia = self.gt.tracklet_identity(a);
        let ib = self.gt.tracklet_identity(b);
        Some(match (ia, ib) {
            (Some(x), Some(y)) if x == y => 1.0,
            _ => 0.0,
        })
    }
}

/// Everything a backend might need, bundled so callers can pick by
/// [`crate::model::BackendKind`].
#[derive(Default)]
pub struct BackendInputs<'a> {
    pub heatmaps: Option<&'a dyn HeatmapProvider>,
    pub images: Option<&'a BTreeMap<FrameIdx, RgbImage>>,
    pub features: Option<&'a dyn FeatureSource>,
    pub gt: Option<&'a GtIndex>,
}

pub fn make_backend<'a>(
    cfg: &PipelineConfig,
    inputs: &BackendInputs<'a>,
) -> Result<Box<dyn SimilarityBackend + 'a>> {
    use crate::model::BackendKind::*;
    let missing = |what: &str| {
        Error::MissingInput(format!("backend {} requires {what}", cfg.backend))
    };
    Ok(match cfg.backend {
        StmHeatmap => Box::new(StmBackend {
            provider: inputs.heatmaps.ok_or_else(|| missing("heatmaps"))?,
            variant: cfg.ref_variant,
            n_ref: cfg.n_ref,
        }),
        Rgb2x2 | RgbNxP => Box::new(RgbBackend {
            images: inputs.images.ok_or_else(|| missing("images"))?,
            pairing: if cfg.backend == Rgb2x2 { Pairing::Anchors } else { Pairing::All },
            variant: cfg.ref_variant,
            n_ref: cfg.n_ref,
            bins: cfg.histogram_bins,
        }),
        Reid2x2 | ReidNxP => Box::new(ReidBackend {
            features: inputs.features.ok_or_else(|| missing("re-identification features"))?,
            pairing: if cfg.backend == Reid2x2 { Pairing::Anchors } else { Pairing::All },
            variant: cfg.ref_variant,
            n_ref: cfg.n_ref,
        }),
        Oracle => Box::new(OracleBackend {
            gt: inputs.gt.ok_or_else(|| missing("ground truth"))?,
        }),
    })
}

/// Heatmaps held in memory, keyed by `(reference tracklet, closest anchor, query)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeatmapStore {
    pub width: u32,
    pub height: u32,
    pub maps: BTreeMap<(TrackId, FrameIdx, FrameIdx), Heatmap>,
}

impl HeatmapProvider for HeatmapStore {
    fn heatmap(
        &self,
        reference: &Tracklet,
        anchors: &[FrameIdx],
        query: FrameIdx,
    ) -> Option<Cow<'_, Heatmap>> {
        self.maps
            .get(&(reference.id, anchors[0], query))
            .map(Cow::Borrowed)
    }
}

/// In-memory features for tests and bindings.
impl FeatureSource for HashMap<(TrackId, FrameIdx), Vec<f32>> {
    fn feature(&self, tracklet: &Tracklet, frame: FrameIdx) -> Option<Cow<'_, [f32]>> {
        self.get(&(tracklet.id, frame)).map(|v| Cow::Borrowed(v.as_slice()))
    }
}
