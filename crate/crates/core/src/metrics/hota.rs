use std::collections::HashMap;

use super::{frame_tables, match_ious, FrameTable};
use crate::error::Result;
use crate::model::{TrackId, TrackedMask};

#[derive(Debug, Clone, PartialEq)]
pub struct HotaResult {
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
    pub alphas: Vec<f64>,
    pub hota_alpha: Vec<f64>,
    pub deta_alpha: Vec<f64>,
    pub assa_alpha: Vec<f64>,
}

/// Localization thresholds 0.05, 0.10, ..., 0.95.
pub fn alpha_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 / 20.0).collect()
}

pub fn hota(preds: &[TrackedMask], gts: &[TrackedMask]) -> Result<HotaResult> {
    let tables = frame_tables(preds, gts)?;
    Ok(hota_from_tables(&tables, gts.len() as u64, preds.len() as u64))
}

pub(crate) fn hota_from_tables(tables: &[FrameTable], n_gt: u64, n_pred: u64) -> HotaResult {
    let alphas = alpha_grid();
    let mut hota_alpha = Vec::with_capacity(alphas.len());
    let mut deta_alpha = Vec::with_capacity(alphas.len());
    let mut assa_alpha = Vec::with_capacity(alphas.len());

    let mut gt_count: HashMap<TrackId, u64> = HashMap::new();
    let mut pred_count: HashMap<TrackId, u64> = HashMap::new();
    for t in tables {
        for &g in &t.gt_ids {
            *gt_count.entry(g).or_default() += 1;
        }
        for &p in &t.pred_ids {
            *pred_count.entry(p).or_default() += 1;
        }
    }

    for &alpha in &alphas {
        if n_gt + n_pred == 0 {
            hota_alpha.push(1.0);
            deta_alpha.push(1.0);
            assa_alpha.push(1.0);
            continue;
        }
        let mut pair_count: HashMap<(TrackId, TrackId), u64> = HashMap::new();
        let mut tp = 0u64;
        for t in tables {
            for (g, p) in match_ious(&t.iou, t.pred_ids.len(), alpha) {
                *pair_count.entry((t.gt_ids[g], t.pred_ids[p])).or_default() += 1;
                tp += 1;
            }
        }
        let det = tp as f64 / (n_gt + n_pred - tp) as f64;
        let ass = if tp == 0 {
            0.0
        } else {
            // every TP of pair (g, p) shares the same association score
            let sum: f64 = pair_count
                .iter()
                .map(|(&(g, p), &n)| {
                    let denom = gt_count[&g] + pred_count[&p] - n;
                    n as f64 * n as f64 / denom as f64
                })
                .sum();
            sum / tp as f64
        };
        hota_alpha.push((det * ass).sqrt());
        deta_alpha.push(det);
        assa_alpha.push(ass);
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    HotaResult {
        hota: mean(&hota_alpha),
        deta: mean(&deta_alpha),
        assa: mean(&assa_alpha),
        alphas,
        hota_alpha,
        deta_alpha,
        assa_alpha,
    }
}
