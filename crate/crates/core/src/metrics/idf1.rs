use std::collections::BTreeMap;

use super::{frame_tables, FrameTable};
use crate::error::Result;
use crate::model::{TrackId, TrackedMask};
use crate::sta::{hungarian_min, CostMatrix};

const MATCH_IOU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Idf1Result {
    pub idf1: f64,
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
}

pub fn idf1(preds: &[TrackedMask], gts: &[TrackedMask]) -> Result<Idf1Result> {
    let tables = frame_tables(preds, gts)?;
    Ok(idf1_from_tables(&tables, gts.len() as u64, preds.len() as u64))
}

/// Identity F1 from a single global track-to-track assignment maximizing the
/// number of frames where paired tracks overlap with IoU above 0.5.
pub(crate) fn idf1_from_tables(tables: &[FrameTable], n_gt: u64, n_pred: u64) -> Idf1Result {
    let mut co: BTreeMap<(TrackId, TrackId), u64> = BTreeMap::new();
    let mut gt_ids: Vec<TrackId> = Vec::new();
    let mut pred_ids: Vec<TrackId> = Vec::new();
    for t in tables {
        gt_ids.extend(&t.gt_ids);
        pred_ids.extend(&t.pred_ids);
        for (g, row) in t.iou.iter().enumerate() {
            for (p, &iou) in row.iter().enumerate() {
                if iou > MATCH_IOU {
                    *co.entry((t.gt_ids[g], t.pred_ids[p])).or_default() += 1;
                }
            }
        }
    }
    gt_ids.sort_unstable();
    gt_ids.dedup();
    pred_ids.sort_unstable();
    pred_ids.dedup();

    let weight = |g: usize, p: usize| co.get(&(gt_ids[g], pred_ids[p])).copied().unwrap_or(0);
    let cost = CostMatrix::from_fn(gt_ids.len(), pred_ids.len(), |g, p| -(weight(g, p) as f64));
    let idtp: u64 = hungarian_min(&cost).pairs.into_iter().map(|(g, p)| weight(g, p)).sum();
    let idf1 = if n_gt + n_pred == 0 {
        1.0
    } else {
        2.0 * idtp as f64 / (n_gt + n_pred) as f64
    };
    Idf1Result { idf1, idtp, idfp: n_pred - idtp, idfn: n_gt - idtp }
}
