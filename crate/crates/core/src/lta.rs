//! Long-term association: candidate pair selection and greedy tracklet merging.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::Result;
use crate::model::{
    FrameIdx, PipelineConfig, RefVariant, SequenceMeta, TrackId, Track, Tracklet,
};
use crate::similarity::SimilarityBackend;
use crate::sta::canonical_order;

/// Which side of a candidate pair a tracklet is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Appears first; its references are taken from the end.
    Earlier,
    /// Appears second; its references are taken from the start.
    Later,
}

/// Indices (0-based, closest first) of the detections used as references.
///
/// For the earlier tracklet the "n-th" reference is the n-th detection counted
/// back from its end; for the later one, the n-th from its start.
pub fn select_references(len: usize, role: Role, variant: RefVariant, n: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    // k-th reference (1-based, counted from the matching end)
    let pos = |k: usize| match role {
        Role::Earlier => len - k,
        Role::Later => k - 1,
    };
    let mut out = vec![pos(1)];
    match variant {
        RefVariant::Frame1 => {}
        RefVariant::Frames12 => {
            if len >= 2 {
                out.push(pos(2));
            }
        }
        RefVariant::Frames15_2 => {
            if len >= n {
                out.push(pos(n));
            } else if len >= 2 {
                out.push(pos(2));
            }
        }
        RefVariant::Frames125 => {
            if len >= 2 {
                out.push(pos(2));
            }
            if len >= n && n > 2 {
                out.push(pos(n));
            }
        }
    }
    out
}

/// Seconds between the end of `a` and the start of `b`.
pub fn temporal_cost(a: &Tracklet, b: &Tracklet, fps: f64) -> f64 {
    (a.last_frame() as f64 - b.first_frame() as f64).abs() / fps
}

/// L1 distance between the centroids of `a`'s last and `b`'s first masks,
/// normalized by the mean image side.
pub fn spatial_cost(a: &Tracklet, b: &Tracklet, meta: &SequenceMeta) -> Result<f64> {
    let (ax, ay) = a.last().mask.centroid()?;
    let (bx, by) = b.first().mask.centroid()?;
    let l1 = (ax - bx).abs() + (ay - by).abs();
    Ok(2.0 * l1 / (meta.height as f64 + meta.width as f64))
}

/// Number of frames in which both tracklets have a detection.
pub fn overlap_cost(a: &Tracklet, b: &Tracklet) -> usize {
    let fa: BTreeSet<FrameIdx> = a.frames().collect();
    b.frames().filter(|f| fa.contains(f)).count()
}

fn appearance_order(a: &Tracklet, b: &Tracklet) -> Ordering {
    a.first_frame()
        .cmp(&b.first_frame())
        .then(a.last_frame().cmp(&b.last_frame()))
        .then(a.id.cmp(&b.id))
}

/// All same-class pairs within the temporal, spatial and overlap bounds, as
/// `(earlier index, later index)` into `tracklets`, sorted.
pub fn admissible_pairs(
    tracklets: &[Tracklet],
    meta: &SequenceMeta,
    cfg: &PipelineConfig,
) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for i in 0..tracklets.len() {
        for j in (i + 1)..tracklets.len() {
            let (ea, la) = match appearance_order(&tracklets[i], &tracklets[j]) {
                Ordering::Greater => (j, i),
                _ => (i, j),
            };
            let (a, b) = (&tracklets[ea], &tracklets[la]);
            if a.class_id != b.class_id {
                continue;
            }
            if temporal_cost(a, b, meta.fps) > cfg.tau_t {
                continue;
            }
            if spatial_cost(a, b, meta)? > cfg.tau_s {
                continue;
            }
            if overlap_cost(a, b) > cfg.tau_o as usize {
                continue;
            }
            out.push((ea, la));
        }
    }
    out.sort_unstable();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCandidate {
    pub earlier: TrackId,
    pub later: TrackId,
    pub similarity: f64,
}

/// Scores admissible pairs; pairs the backend cannot score are dropped.
pub fn score_pairs(
    tracklets: &[Tracklet],
    pairs: &[(usize, usize)],
    backend: &dyn SimilarityBackend,
) -> Vec<PairCandidate> {
    pairs
        .par_iter()
        .filter_map(|&(a, b)| {
            backend
                .similarity(&tracklets[a], &tracklets[b])
                .map(|similarity| PairCandidate {
                    earlier: tracklets[a].id,
                    later: tracklets[b].id,
                    similarity,
                })
        })
        .collect()
}

struct Groups {
    parent: Vec<usize>,
    frames: Vec<BTreeSet<FrameIdx>>,
}

impl Groups {
    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn shared_frames(&self, a: usize, b: usize) -> usize {
        self.frames[a].intersection(&self.frames[b]).count()
    }

    fn union(&mut self, a: usize, b: usize) {
        let (keep, gone) = if a < b { (a, b) } else { (b, a) };
        self.parent[gone] = keep;
        let moved = std::mem::take(&mut self.frames[gone]);
        self.frames[keep].extend(moved);
    }
}

/// Greedily merges the most similar remaining pair while its similarity
/// exceeds `theta_l` and the merged groups still share at most `tau_o` frames.
///
/// Where merged tracklets share a frame only the higher-scoring detection is
/// kept. Each output track takes the smallest id of its members.
pub fn greedy_merge(
    tracklets: &[Tracklet],
    candidates: &[PairCandidate],
    cfg: &PipelineConfig,
) -> Vec<Track> {
    let index: BTreeMap<TrackId, usize> =
        tracklets.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
    let mut order: Vec<(usize, usize, f64)> = candidates
        .iter()
        .filter(|c| c.similarity > cfg.theta_l)
        .filter_map(|c| Some((*index.get(&c.earlier)?, *index.get(&c.later)?, c.similarity)))
        .collect();
    order.sort_by(|x, y| {
        y.2.total_cmp(&x.2)
            .then(tracklets[x.0].first_frame().cmp(&tracklets[y.0].first_frame()))
            .then(tracklets[x.1].first_frame().cmp(&tracklets[y.1].first_frame()))
            .then(tracklets[x.0].id.cmp(&tracklets[y.0].id))
            .then(tracklets[x.1].id.cmp(&tracklets[y.1].id))
    });

    // Group overlap only grows as merges happen, so a pair rejected once stays
    // rejected and a single pass in similarity order is the greedy loop.
    let mut groups = Groups {
        parent: (0..tracklets.len()).collect(),
        frames: tracklets.iter().map(|t| t.frames().collect()).collect(),
    };
    for (a, b, _) in order {
        let (ga, gb) = (groups.find(a), groups.find(b));
        if ga == gb || tracklets[ga].class_id != tracklets[gb].class_id {
            continue;
        }
        if groups.shared_frames(ga, gb) > cfg.tau_o as usize {
            continue;
        }
        groups.union(ga, gb);
    }

    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..tracklets.len() {
        let root = groups.find(i);
        members.entry(root).or_default().push(i);
    }
    let mut tracks: Vec<Track> = members
        .into_values()
        .map(|idx| {
            let mut dets: Vec<_> = idx
                .iter()
                .flat_map(|&i| tracklets[i].detections.iter().cloned())
                .collect();
            dets.sort_by(|x, y| {
                x.frame
                    .cmp(&y.frame)
                    .then(y.score.total_cmp(&x.score))
                    .then_with(|| canonical_order(x, y))
            });
            dets.dedup_by_key(|d| d.frame);
            Track {
                id: idx.iter().map(|&i| tracklets[i].id).min().expect("non-empty group"),
                class_id: tracklets[idx[0]].class_id,
                detections: dets,
            }
        })
        .collect();
    tracks.sort_by_key(|t| t.id);
    tracks
}

/// Removes tracks whose best detection scores below `theta_f`.
pub fn final_filter(tracks: Vec<Track>, theta_f: f64) -> Vec<Track> {
    tracks.into_iter().filter(|t| t.max_score() >= theta_f).collect()
}

/// Admissible-pair selection, scoring and greedy merging in one call.
pub fn long_term_association(
    tracklets: &[Tracklet],
    meta: &SequenceMeta,
    cfg: &PipelineConfig,
    backend: &dyn SimilarityBackend,
) -> Result<Vec<Track>> {
    let pairs = admissible_pairs(tracklets, meta, cfg)?;
    let candidates = score_pairs(tracklets, &pairs, backend);
    Ok(greedy_merge(tracklets, &candidates, cfg))
}
