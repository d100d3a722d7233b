//! Short-term association: adjacent-frame mask matching driven by optical flow.

mod hungarian;

use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::BTreeMap;

pub use hungarian::{hungarian_min, AssignmentResult, CostMatrix};

use crate::error::{Error, Result};
use crate::model::{tracklet_class, Detection, FrameIdx, Tracklet};
use crate::raster::{warp_mask, FlowField};

/// Supplies the flow field from frame `t` to `t + 1`.
pub trait FlowSource {
    fn flow(&self, frame: FrameIdx) -> Result<Option<Cow<'_, FlowField>>>;
}

impl FlowSource for BTreeMap<FrameIdx, FlowField> {
    fn flow(&self, frame: FrameIdx) -> Result<Option<Cow<'_, FlowField>>> {
        Ok(self.get(&frame).map(Cow::Borrowed))
    }
}

/// Matches detections of two adjacent frames. Costs are negative IoU between
/// flow-warped previous masks and next masks; pairs whose IoU does not exceed
/// `theta_s` are released after the global assignment. Classes are ignored.
pub fn sta_step(
    prev: &[Detection],
    next: &[Detection],
    flow: &FlowField,
    theta_s: f64,
) -> Result<AssignmentResult> {
    let warped = prev
        .iter()
        .map(|d| warp_mask(&d.mask, flow))
        .collect::<Result<Vec<_>>>()?;
    let mut ious = vec![vec![0f64; next.len()]; prev.len()];
    for (i, w) in warped.iter().enumerate() {
        for (j, d) in next.iter().enumerate() {
            ious[i][j] = w.iou(&d.mask)?;
        }
    }
    let cost = CostMatrix::from_fn(prev.len(), next.len(), |i, j| -ious[i][j]);
    let raw = hungarian_min(&cost);

    let mut result = AssignmentResult {
        pairs: Vec::with_capacity(raw.pairs.len()),
        unmatched_rows: raw.unmatched_rows,
        unmatched_cols: raw.unmatched_cols,
    };
    for (i, j) in raw.pairs {
        if ious[i][j] > theta_s {
            result.pairs.push((i, j));
        } else {
            result.unmatched_rows.push(i);
            result.unmatched_cols.push(j);
        }
    }
    result.unmatched_rows.sort_unstable();
    result.unmatched_cols.sort_unstable();
    Ok(result)
}

/// Order used for detections sharing a frame, independent of input order.
/// Masks in one frame are disjoint, so the first foreground pixel almost always
/// decides.
pub(crate) fn canonical_order(a: &Detection, b: &Detection) -> Ordering {
    let first = |d: &Detection| d.mask.first_foreground_index().unwrap_or(u64::MAX);
    first(a)
        .cmp(&first(b))
        .then_with(|| a.mask.runs().cmp(b.mask.runs()))
        .then_with(|| a.class_id.cmp(&b.class_id))
        .then_with(|| a.score.total_cmp(&b.score))
}

pub(crate) fn group_by_frame(detections: &[Detection]) -> BTreeMap<FrameIdx, Vec<Detection>> {
    let mut frames: BTreeMap<FrameIdx, Vec<Detection>> = BTreeMap::new();
    for d in detections {
        frames.entry(d.frame).or_default().push(d.clone());
    }
    for dets in frames.values_mut() {
        dets.sort_by(canonical_order);
    }
    frames
}

/// Chains matched detections into contiguous tracklets, votes their class and
/// drops tracklets with a single detection. Ids are assigned from 1 in order of
/// tracklet start.
pub fn build_tracklets(
    detections: &[Detection],
    flows: &dyn FlowSource,
    theta_s: f64,
) -> Result<Vec<Tracklet>> {
    let frames = group_by_frame(detections);
    let mut chains: Vec<Vec<Detection>> = Vec::new();
    // chain index of each detection in the previous frame
    let mut active: Vec<usize> = Vec::new();
    let mut prev_frame: Option<FrameIdx> = None;

    for (&frame, dets) in &frames {
        let mut current = vec![usize::MAX; dets.len()];
        if let Some(pf) = prev_frame.filter(|&pf| pf + 1 == frame) {
            let flow = flows
                .flow(pf)?
                .ok_or(Error::MissingFlow(pf, frame))?;
            let prev_dets = &frames[&pf];
            let step = sta_step(prev_dets, dets, &flow, theta_s)?;
            for (i, j) in step.pairs {
                current[j] = active[i];
            }
        }
        for (j, d) in dets.iter().enumerate() {
            if current[j] == usize::MAX {
                current[j] = chains.len();
                chains.push(Vec::new());
            }
            chains[current[j]].push(d.clone());
        }
        active = current;
        prev_frame = Some(frame);
    }

    let tracklets = chains
        .into_iter()
        .filter(|c| c.len() >= 2)
        .enumerate()
        .map(|(k, detections)| Tracklet {
            id: k as u32 + 1,
            class_id: tracklet_class(&detections).expect("non-empty chain"),
            detections,
        })
        .collect();
    Ok(tracklets)
}
