//! Tracking-and-segmentation evaluation.
//!
//! All matching uses mask IoU. Predictions and ground truth are flat lists of
//! [`TrackedMask`] records; masks within one frame are expected not to overlap.

mod clear;
mod hota;
mod idf1;

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub use clear::{clear_mots, ClearMots};
pub use hota::{alpha_grid, hota, HotaResult};
pub use idf1::{idf1, Idf1Result};

use crate::error::Result;
use crate::mask::BinaryMask;
use crate::model::{ClassId, FrameIdx, TrackId, TrackedMask};
use crate::sta::{hungarian_min, CostMatrix};

/// Ground truth and predictions of one frame with their pairwise IoU.
#[derive(Debug, Clone)]
pub(crate) struct FrameTable {
    pub gt_ids: Vec<TrackId>,
    pub pred_ids: Vec<TrackId>,
    /// `iou[g][p]`
    pub iou: Vec<Vec<f64>>,
}

pub(crate) fn frame_tables(preds: &[TrackedMask], gts: &[TrackedMask]) -> Result<Vec<FrameTable>> {
    let mut frames: BTreeMap<FrameIdx, (Vec<&TrackedMask>, Vec<&TrackedMask>)> = BTreeMap::new();
    for g in gts {
        frames.entry(g.frame).or_default().0.push(g);
    }
    for p in preds {
        frames.entry(p.frame).or_default().1.push(p);
    }
    frames
        .into_values()
        .map(|(mut g, mut p)| {
            g.sort_by_key(|r| r.track_id);
            p.sort_by_key(|r| r.track_id);
            let iou = g
                .iter()
                .map(|gr| p.iter().map(|pr| gr.mask.iou(&pr.mask)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            Ok(FrameTable {
                gt_ids: g.iter().map(|r| r.track_id).collect(),
                pred_ids: p.iter().map(|r| r.track_id).collect(),
                iou,
            })
        })
        .collect()
}

/// Maximum-IoU bijection restricted to pairs with IoU at least `alpha`,
/// as `(gt index, pred index)` pairs.
pub(crate) fn match_ious(iou: &[Vec<f64>], n_pred: usize, alpha: f64) -> Vec<(usize, usize)> {
    let valid = |g: usize, p: usize| iou[g][p] >= alpha && iou[g][p] > 0.0;
    let cost = CostMatrix::from_fn(iou.len(), n_pred, |g, p| {
        if valid(g, p) {
            -iou[g][p]
        } else {
            0.0
        }
    });
    hungarian_min(&cost)
        .pairs
        .into_iter()
        .filter(|&(g, p)| valid(g, p))
        .collect()
}

/// Matches one frame's predictions to its ground truth at localization
/// threshold `alpha`. Returns `(gt index, pred index)` pairs.
pub fn match_frame(
    preds: &[BinaryMask],
    gts: &[BinaryMask],
    alpha: f64,
) -> Result<Vec<(usize, usize)>> {
    let iou = gts
        .iter()
        .map(|g| preds.iter().map(|p| g.iou(p)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(match_ious(&iou, preds.len(), alpha))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub hota: f64,
    pub deta: f64,
    pub assa: f64,
    pub smotsa: f64,
    pub motsa: f64,
    pub smotsp: f64,
    pub idf1: f64,
    pub idsw: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tp: u64,
    pub gt_dets: u64,
    pub pred_dets: u64,
    /// Both inputs were empty and scores were set to 1 by convention.
    pub empty_convention: bool,
    pub alphas: Vec<f64>,
    pub hota_alpha: Vec<f64>,
    pub deta_alpha: Vec<f64>,
    pub assa_alpha: Vec<f64>,
}

/// Full evaluation. With `class` set, only records of that class are scored.
pub fn evaluate(
    preds: &[TrackedMask],
    gts: &[TrackedMask],
    class: Option<ClassId>,
) -> Result<EvalReport> {
    let keep = |r: &&TrackedMask| class.map_or(true, |c| r.class_id == c);
    let preds: Vec<TrackedMask> = preds.iter().filter(keep).cloned().collect();
    let gts: Vec<TrackedMask> = gts.iter().filter(keep).cloned().collect();
    let tables = frame_tables(&preds, &gts)?;
    let h = hota::hota_from_tables(&tables, gts.len() as u64, preds.len() as u64);
    let c = clear::clear_from_tables(&tables, gts.len() as u64, preds.len() as u64);
    let i = idf1::idf1_from_tables(&tables, gts.len() as u64, preds.len() as u64);
    Ok(EvalReport {
        hota: h.hota,
        deta: h.deta,
        assa: h.assa,
        smotsa: c.smotsa,
        motsa: c.motsa,
        smotsp: c.smotsp,
        idf1: i.idf1,
        idsw: c.idsw,
        fp: c.fp,
        fn_: c.fn_,
        tp: c.tp,
        gt_dets: gts.len() as u64,
        pred_dets: preds.len() as u64,
        empty_convention: gts.is_empty() && preds.is_empty(),
        alphas: h.alphas,
        hota_alpha: h.hota_alpha,
        deta_alpha: h.deta_alpha,
        assa_alpha: h.assa_alpha,
    })
}

/// Pools several sequences into one evaluation. Frames and identities of
/// each sequence are shifted past the previous ones so nothing is shared.
pub fn evaluate_many(
    sequences: &[(Vec<TrackedMask>, Vec<TrackedMask>)],
    class: Option<ClassId>,
) -> Result<EvalReport> {
    let (mut preds, mut gts) = (Vec::new(), Vec::new());
    let (mut id_shift, mut frame_shift) = (0u32, 0u32);
    for (pred, gt) in sequences {
        let all = || pred.iter().chain(gt);
        let ids = all().map(|r| r.track_id + 1).max().unwrap_or(0);
        let frames = all().map(|r| r.frame + 1).max().unwrap_or(0);
        for (src, dst) in [(pred, &mut preds), (gt, &mut gts)] {
            dst.extend(src.iter().map(|r| TrackedMask {
                frame: r.frame + frame_shift,
                track_id: r.track_id + id_shift,
                ..r.clone()
            }));
        }
        id_shift += ids;
        frame_shift += frames;
    }
    evaluate(&preds, &gts, class)
}

impl EvalReport {
    /// `(name, value)` pairs in a fixed order.
    pub fn summary(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("HOTA", self.hota),
            ("DetA", self.deta),
            ("AssA", self.assa),
            ("sMOTSA", self.smotsa),
            ("MOTSA", self.motsa),
            ("sMOTSP", self.smotsp),
            ("IDF1", self.idf1),
            ("IDSw", self.idsw as f64),
            ("FP", self.fp as f64),
            ("FN", self.fn_ as f64),
        ]
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<8} {:>10}", "metric", "value");
        for (name, v) in self.summary() {
            if matches!(name, "IDSw" | "FP" | "FN") {
                let _ = writeln!(s, "{name:<8} {:>10}", v as u64);
            } else {
                let _ = writeln!(s, "{name:<8} {:>10.3}", v * 100.0);
            }
        }
        if self.empty_convention {
            let _ = writeln!(s, "note: empty prediction and ground truth; scores set to 1");
        }
        s
    }

    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        for (name, v) in self.summary() {
            let _ = writeln!(s, "{}={}", name.to_ascii_lowercase(), v);
        }
        let _ = writeln!(s, "tp={}", self.tp);
        let _ = writeln!(s, "gt_dets={}", self.gt_dets);
        let _ = writeln!(s, "pred_dets={}", self.pred_dets);
        let _ = writeln!(s, "empty_convention={}", self.empty_convention);
        s
    }

    pub fn alpha_csv(&self) -> String {
        let mut s = String::from("alpha,hota,deta,assa\n");
        for k in 0..self.alphas.len() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                self.alphas[k], self.hota_alpha[k], self.deta_alpha[k], self.assa_alpha[k]
            );
        }
        s
    }
}
