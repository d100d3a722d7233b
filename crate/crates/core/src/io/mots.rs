//! Tracking results and ground truth, one mask per line:
//! `frame track_id class_id img_height img_width rle`. Frames are 0-based.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{content_lines, field, parse_err, read_text, rle_from_string, rle_to_string, write_bytes};
use crate::error::{Error, Result};
use crate::model::{FrameIdx, TrackedMask};

pub fn parse_mots(text: &str, path: &Path) -> Result<Vec<TrackedMask>> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 6 {
            return Err(parse_err(path, line, format!("expected 6 fields, found {}", toks.len())));
        }
        let h: u32 = field(toks[3], "image height", path, line)?;
        let w: u32 = field(toks[4], "image width", path, line)?;
        let mask = rle_from_string(toks[5], w, h).map_err(|e| parse_err(path, line, e.to_string()))?;
        out.push(TrackedMask {
            frame: field(toks[0], "frame", path, line)?,
            track_id: field(toks[1], "track id", path, line)?,
            class_id: field(toks[2], "class id", path, line)?,
            mask,
        });
    }
    Ok(out)
}

/// Reads a result or ground-truth file and rejects overlapping masks and
/// repeated track ids within a frame.
pub fn read_mots(path: &Path) -> Result<Vec<TrackedMask>> {
    let records = parse_mots(&read_text(path)?, path)?;
    check_disjoint(&records).map_err(|e| match e {
        Error::OverlappingMasks { frame, context } => Error::OverlappingMasks {
            frame,
            context: format!("{}: {context}", path.display()),
        },
        other => other,
    })?;
    Ok(records)
}

pub fn check_disjoint(records: &[TrackedMask]) -> Result<()> {
    let mut frames: BTreeMap<FrameIdx, Vec<&TrackedMask>> = BTreeMap::new();
    for r in records {
        frames.entry(r.frame).or_default().push(r);
    }
    for (frame, rs) in frames {
        for (i, a) in rs.iter().enumerate() {
            for b in &rs[i + 1..] {
                if a.track_id == b.track_id {
                    return Err(Error::OverlappingMasks {
                        frame,
                        context: format!("track {} appears twice", a.track_id),
                    });
                }
                if !a.mask.is_disjoint(&b.mask)? {
                    return Err(Error::OverlappingMasks {
                        frame,
                        context: format!("tracks {} and {}", a.track_id, b.track_id),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Lines sorted by frame, then track id.
pub fn format_mots(records: &[TrackedMask]) -> String {
    let mut sorted: Vec<&TrackedMask> = records.iter().collect();
    sorted.sort_by_key(|r| (r.frame, r.track_id));
    let mut s = String::new();
    for r in sorted {
        let _ = writeln!(
            s,
            "{} {} {} {} {} {}",
            r.frame,
            r.track_id,
            r.class_id,
            r.mask.height(),
            r.mask.width(),
            rle_to_string(&r.mask)
        );
    }
    s
}

pub fn write_mots(path: &Path, records: &[TrackedMask]) -> Result<()> {
    write_bytes(path, format_mots(records).as_bytes())
}
