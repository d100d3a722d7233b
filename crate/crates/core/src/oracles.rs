//! Ground-truth assisted upper bounds for the association stages.

use std::collections::BTreeMap;

use crate::mask::BinaryMask;
use crate::model::{ClassId, Detection, FrameIdx, TrackId, Track, TrackedMask, Tracklet};
use crate::sta::canonical_order;

/// IoU a detection must exceed to inherit a ground-truth identity.
pub const IDENTITY_IOU: f64 = 0.5;

/// Ground-truth masks indexed by frame.
#[derive(Debug, Clone, Default)]
pub struct GtIndex {
    frames: BTreeMap<FrameIdx, Vec<TrackedMask>>,
    classes: BTreeMap<TrackId, ClassId>,
}

impl GtIndex {
    pub fn new(records: &[TrackedMask]) -> Self {
        let mut frames: BTreeMap<FrameIdx, Vec<TrackedMask>> = BTreeMap::new();
        let mut classes = BTreeMap::new();
        for r in records {
            frames.entry(r.frame).or_default().push(r.clone());
            classes.insert(r.track_id, r.class_id);
        }
        for v in frames.values_mut() {
            v.sort_by_key(|r| r.track_id);
        }
        GtIndex { frames, classes }
    }

    pub fn class_of(&self, id: TrackId) -> Option<ClassId> {
        self.classes.get(&id).copied()
    }

    pub fn mask_of(&self, id: TrackId, frame: FrameIdx) -> Option<&BinaryMask> {
        self.frames
            .get(&frame)?
            .iter()
            .find(|r| r.track_id == id)
            .map(|r| &r.mask)
    }

    /// Best-overlapping ground-truth id with IoU above 0.5; ties go to the lower id.
    pub fn best_match(&self, frame: FrameIdx, mask: &BinaryMask) -> Option<(TrackId, f64)> {
        let mut best: Option<(TrackId, f64)> = None;
        for r in self.frames.get(&frame)? {
            let iou = r.mask.iou(mask).ok()?;
            if iou > IDENTITY_IOU && best.map_or(true, |(_, b)| iou > b) {
                best = Some((r.track_id, iou));
            }
        }
        best
    }

    /// Identity held by the most detections of the tracklet; ties go to the lower id.
    pub fn tracklet_identity(&self, t: &Tracklet) -> Option<TrackId> {
        let mut votes: BTreeMap<TrackId, usize> = BTreeMap::new();
        for d in &t.detections {
            if let Some((id, _)) = self.best_match(d.frame, &d.mask) {
                *votes.entry(id).or_default() += 1;
            }
        }
        let mut best: Option<(TrackId, usize)> = None;
        for (id, n) in votes {
            if best.map_or(true, |(_, b)| n > b) {
                best = Some((id, n));
            }
        }
        best.map(|(id, _)| id)
    }
}

/// Perfect long-term association: tracklets take the ground-truth identity of
/// the majority of their detections and are concatenated per identity;
/// tracklets with no identity are deleted. Candidate selection is bypassed.
pub fn oracle_lta(tracklets: &[Tracklet], gt: &GtIndex) -> Vec<Track> {
    let mut by_id: BTreeMap<TrackId, Vec<Detection>> = BTreeMap::new();
    for t in tracklets {
        if let Some(id) = gt.tracklet_identity(t) {
            by_id.entry(id).or_default().extend(t.detections.iter().cloned());
        }
    }
    by_id
        .into_iter()
        .map(|(id, mut dets)| {
            dets.sort_by(|x, y| {
                x.frame
                    .cmp(&y.frame)
                    .then(y.score.total_cmp(&x.score))
                    .then_with(|| canonical_order(x, y))
            });
            dets.dedup_by_key(|d| d.frame);
            Track {
                id,
                class_id: gt.class_of(id).unwrap_or(dets[0].class_id),
                detections: dets,
            }
        })
        .collect()
}

/// Perfect short- and long-term association: every detection overlapping a
/// ground-truth mask with IoU above 0.5 takes its identity, the rest are
/// removed, and each `(frame, identity)` keeps its best-overlapping detection.
pub fn oracle_slta(detections: &[Detection], gt: &GtIndex) -> Vec<Track> {
    let mut best: BTreeMap<(TrackId, FrameIdx), (f64, &Detection)> = BTreeMap::new();
    for d in detections {
        let Some((id, iou)) = gt.best_match(d.frame, &d.mask) else {
            continue;
        };
        let slot = best.entry((id, d.frame)).or_insert((iou, d));
        let better = iou > slot.0
            || (iou == slot.0
                && (d.score > slot.1.score
                    || (d.score == slot.1.score && canonical_order(d, slot.1).is_lt())));
        if better {
            *slot = (iou, d);
        }
    }
    let mut tracks: BTreeMap<TrackId, Vec<Detection>> = BTreeMap::new();
    for ((id, _), (_, d)) in best {
        tracks.entry(id).or_default().push(d.clone());
    }
    tracks
        .into_iter()
        .map(|(id, detections)| Track {
            id,
            class_id: gt.class_of(id).unwrap_or(detections[0].class_id),
            detections,
        })
        .collect()
}
