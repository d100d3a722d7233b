use std::collections::HashMap;

use super::{frame_tables, FrameTable};
use crate::error::Result;
use crate::model::{TrackId, TrackedMask};
use crate::sta::{hungarian_min, CostMatrix};

/// Pairs with IoU above this count as true positives.
const MATCH_IOU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ClearMots {
    pub smotsa: f64,
    pub motsa: f64,
    pub smotsp: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub idsw: u64,
    /// Sum of IoU over true positives.
    pub soft_tp: f64,
}

pub fn clear_mots(preds: &[TrackedMask], gts: &[TrackedMask]) -> Result<ClearMots> {
    let tables = frame_tables(preds, gts)?;
    Ok(clear_from_tables(&tables, gts.len() as u64, preds.len() as u64))
}

pub(crate) fn clear_from_tables(tables: &[FrameTable], n_gt: u64, n_pred: u64) -> ClearMots {
    // gt id -> pred id it was last matched to
    let mut last: HashMap<TrackId, TrackId> = HashMap::new();
    let mut tp = 0u64;
    let mut idsw = 0u64;
    let mut soft_tp = 0.0;

    for t in tables {
        let ng = t.gt_ids.len();
        let np = t.pred_ids.len();
        let mut gt_used = vec![false; ng];
        let mut pred_used = vec![false; np];
        let mut pairs: Vec<(usize, usize)> = Vec::new();

        // keep last frame's pairings that still overlap enough
        for g in 0..ng {
            let Some(&pid) = last.get(&t.gt_ids[g]) else { continue };
            if let Some(p) = t.pred_ids.iter().position(|&q| q == pid) {
                if !pred_used[p] && t.iou[g][p] > MATCH_IOU {
                    gt_used[g] = true;
                    pred_used[p] = true;
                    pairs.push((g, p));
                }
            }
        }

        let free_g: Vec<usize> = (0..ng).filter(|&g| !gt_used[g]).collect();
        let free_p: Vec<usize> = (0..np).filter(|&p| !pred_used[p]).collect();
        let valid = |g: usize, p: usize| t.iou[free_g[g]][free_p[p]] > MATCH_IOU;
        let cost = CostMatrix::from_fn(free_g.len(), free_p.len(), |g, p| {
            if valid(g, p) {
                -t.iou[free_g[g]][free_p[p]]
            } else {
                0.0
            }
        });
        for (g, p) in hungarian_min(&cost).pairs {
            if valid(g, p) {
                pairs.push((free_g[g], free_p[p]));
            }
        }

        for (g, p) in pairs {
            let gid = t.gt_ids[g];
            let pid = t.pred_ids[p];
            tp += 1;
            soft_tp += t.iou[g][p];
            if let Some(prev) = last.insert(gid, pid) {
                if prev != pid {
                    idsw += 1;
                }
            }
        }
    }

    let fp = n_pred - tp;
    let fn_ = n_gt - tp;
    let (smotsa, motsa) = if n_gt == 0 {
        if n_pred == 0 {
            (1.0, 1.0)
        } else {
            (0.0, 0.0)
        }
    } else {
        let g = n_gt as f64;
        (
            (soft_tp - fp as f64 - idsw as f64) / g,
            (tp as f64 - fp as f64 - idsw as f64) / g,
        )
    };
    let smotsp = if tp > 0 {
        soft_tp / tp as f64
    } else if n_gt + n_pred == 0 {
        1.0
    } else {
        0.0
    };
    ClearMots { smotsa, motsa, smotsp, tp, fp, fn_, idsw, soft_tp }
}
