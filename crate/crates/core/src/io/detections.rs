//! Per-frame instance detections:
//! `frame det_id class_id score img_height img_width rle`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{content_lines, field, parse_err, read_text, rle_from_string, rle_to_string, write_bytes};
use crate::error::Result;
use crate::model::Detection;

pub fn parse_detections(text: &str, path: &Path) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 7 {
            return Err(parse_err(path, line, format!("expected 7 fields, found {}", toks.len())));
        }
        let score: f64 = field(toks[3], "score", path, line)?;
        if !score.is_finite() {
            return Err(parse_err(path, line, "score must be finite"));
        }
        let h: u32 = field(toks[4], "image height", path, line)?;
        let w: u32 = field(toks[5], "image width", path, line)?;
        let mask = rle_from_string(toks[6], w, h).map_err(|e| parse_err(path, line, e.to_string()))?;
        let _det_id: u32 = field(toks[1], "detection id", path, line)?;
        out.push(Detection::new(
            field(toks[0], "frame", path, line)?,
            field(toks[2], "class id", path, line)?,
            score,
            mask,
        ));
    }
    Ok(out)
}

pub fn read_detections(path: &Path) -> Result<Vec<Detection>> {
    parse_detections(&read_text(path)?, path)
}

/// Detection ids are renumbered from 1 within each frame, in input order.
pub fn format_detections(detections: &[Detection]) -> String {
    let mut by_frame: BTreeMap<u32, Vec<&Detection>> = BTreeMap::new();
    for d in detections {
        by_frame.entry(d.frame).or_default().push(d);
    }
    let mut s = String::new();
    for (frame, dets) in by_frame {
        for (k, d) in dets.into_iter().enumerate() {
            let _ = writeln!(
                s,
                "{frame} {} {} {} {} {} {}",
                k + 1,
                d.class_id,
                d.score,
                d.mask.height(),
                d.mask.width(),
                rle_to_string(&d.mask)
            );
        }
    }
    s
}

pub fn write_detections(path: &Path, detections: &[Detection]) -> Result<()> {
    write_bytes(path, format_detections(detections).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::BinaryMask;

    #[test]
    fn golden_file_round_trip() {
        let path = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/golden.det.txt"));
        let dets = read_detections(path).unwrap();
        assert_eq!(dets.len(), 3);
        assert_eq!(dets[1].score, 0.25);
        assert_eq!(dets[2].mask, BinaryMask::rect(8, 6, 1, 1, 3, 3));
        assert_eq!(format_detections(&dets), std::fs::read_to_string(path).unwrap());
    }

    #[test]
    fn scores_survive_round_trip() {
        let m = BinaryMask::rect(5, 5, 1, 1, 2, 2);
        let dets = vec![Detection::new(2, 1, 0.1 + 0.2, m.clone()), Detection::new(0, 3, 1.0 / 3.0, m)];
        let back = parse_detections(&format_detections(&dets), Path::new("d")).unwrap();
        assert_eq!(back, vec![dets[1].clone(), dets[0].clone()]);
    }

    #[test]
    fn wrong_field_count_is_an_error() {
        let err = parse_detections("0 1 1 0.9 6 8\n", Path::new("d.txt")).unwrap_err();
        assert!(err.to_string().contains("expected 7 fields"));
        assert!(parse_detections("0 1 1 nan 6 8 `0\n", Path::new("d.txt")).is_err());
    }
}
