//! End-to-end association: detection filtering, short-term tracklets,
//! long-term merging and the final score filter.

use std::fmt::Write as _;

use log::{debug, info};

use crate::error::{Error, Result};
use crate::lta::{admissible_pairs, final_filter, greedy_merge, score_pairs};
use crate::metrics::{evaluate, EvalReport};
use crate::model::{filter_detections, tracks_to_records, Detection, PipelineConfig, SequenceMeta, Track, TrackedMask, Tracklet};
use crate::oracles::{oracle_lta, oracle_slta, GtIndex};
use crate::similarity::{make_backend, BackendInputs};
use crate::sta::{build_tracklets, FlowSource};
use crate::synth::{IdealFeatures, IdealHeatmaps, Scenario};

/// How tracklets are turned into tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Association {
    /// Similarity-based merging.
    Full,
    /// Tracklets are reported as tracks.
    ShortTermOnly,
    /// Tracklets are merged by ground-truth identity.
    OracleLta,
    /// Filtered detections are grouped by ground-truth identity directly.
    OracleSlta,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageCounts {
    pub detections: usize,
    pub kept_detections: usize,
    pub tracklets: usize,
    pub admissible_pairs: usize,
    pub scored_pairs: usize,
    pub merged_tracks: usize,
    pub final_tracks: usize,
}

impl StageCounts {
    pub fn to_log(&self) -> String {
        let mut s = String::new();
        for (k, v) in [
            ("detections", self.detections),
            ("kept_detections", self.kept_detections),
            ("tracklets", self.tracklets),
            ("admissible_pairs", self.admissible_pairs),
            ("scored_pairs", self.scored_pairs),
            ("merged_tracks", self.merged_tracks),
            ("final_tracks", self.final_tracks),
        ] {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub tracks: Vec<Track>,
    pub counts: StageCounts,
}

impl RunResult {
    pub fn records(&self) -> Vec<TrackedMask> {
        tracks_to_records(&self.tracks)
    }
}

/// Everything one sequence provides to the pipeline.
pub struct SequenceInputs<'a> {
    pub meta: &'a SequenceMeta,
    pub detections: &'a [Detection],
    pub flows: &'a dyn FlowSource,
    pub backend: BackendInputs<'a>,
}

/// Filters detections and links them into tracklets. Returns the kept
/// detections alongside.
pub fn short_term_stage(
    meta: &SequenceMeta,
    detections: &[Detection],
    flows: &dyn FlowSource,
    cfg: &PipelineConfig,
) -> Result<(Vec<Detection>, Vec<Tracklet>)> {
    let kept = filter_detections(detections, meta, cfg)?;
    let tracklets = build_tracklets(&kept, flows, cfg.theta_s)?;
    Ok((kept, tracklets))
}

pub fn run(inputs: &SequenceInputs<'_>, cfg: &PipelineConfig, mode: Association) -> Result<RunResult> {
    cfg.validate()?;
    inputs.meta.validate()?;
    let meta = inputs.meta;
    let mut counts = StageCounts { detections: inputs.detections.len(), ..Default::default() };
    let (kept, tracklets) = short_term_stage(meta, inputs.detections, inputs.flows, cfg)?;
    counts.kept_detections = kept.len();
    counts.tracklets = tracklets.len();
    debug!("{}: {} detections kept, {} tracklets", meta.sequence_id, kept.len(), tracklets.len());

    let gt = || {
        inputs
            .backend
            .gt
            .ok_or_else(|| Error::MissingInput("oracle association requires ground truth".into()))
    };
    let tracks = match mode {
        Association::Full => {
            let backend = make_backend(cfg, &inputs.backend)?;
            let pairs = admissible_pairs(&tracklets, meta, cfg)?;
            let candidates = score_pairs(&tracklets, &pairs, backend.as_ref());
            counts.admissible_pairs = pairs.len();
            counts.scored_pairs = candidates.len();
            let merged = greedy_merge(&tracklets, &candidates, cfg);
            counts.merged_tracks = merged.len();
            final_filter(merged, cfg.theta_f)
        }
        Association::ShortTermOnly => {
            counts.merged_tracks = tracklets.len();
            final_filter(tracklets, cfg.theta_f)
        }
        Association::OracleLta => {
            let merged = oracle_lta(&tracklets, gt()?);
            counts.merged_tracks = merged.len();
            merged
        }
        Association::OracleSlta => {
            let merged = oracle_slta(&kept, gt()?);
            counts.merged_tracks = merged.len();
            merged
        }
    };
    counts.final_tracks = tracks.len();
    info!(
        "{}: {} tracklets -> {} tracks ({} admissible pairs)",
        meta.sequence_id, counts.tracklets, counts.final_tracks, counts.admissible_pairs
    );
    Ok(RunResult { tracks, counts })
}

/// Ideal-appearance inputs derived from a synthetic scenario's ground truth.
pub struct IdealInputs<'a> {
    pub gt: GtIndex,
    pub heatmap_blur: u32,
    pub feature_dim: usize,
    scenario: &'a Scenario,
}

impl<'a> IdealInputs<'a> {
    pub fn new(scenario: &'a Scenario, heatmap_blur: u32) -> Self {
        IdealInputs { gt: GtIndex::new(&scenario.gt), heatmap_blur, feature_dim: 16, scenario }
    }

    pub fn run(&self, cfg: &PipelineConfig, mode: Association) -> Result<RunResult> {
        let s = self.scenario;
        let heatmaps = IdealHeatmaps {
            gt: &self.gt,
            width: s.meta.width,
            height: s.meta.height,
            blur: self.heatmap_blur,
        };
        let features = IdealFeatures { gt: &self.gt, dim: self.feature_dim, seed: 0 };
        let inputs = SequenceInputs {
            meta: &s.meta,
            detections: &s.detections,
            flows: &s.flows,
            backend: BackendInputs {
                heatmaps: Some(&heatmaps),
                images: Some(&s.images),
                features: Some(&features),
                gt: Some(&self.gt),
            },
        };
        run(&inputs, cfg, mode)
    }

    pub fn evaluate(&self, result: &RunResult) -> Result<EvalReport> {
        evaluate(&result.records(), &self.scenario.gt, None)
    }
}
