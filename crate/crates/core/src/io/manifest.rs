//! Work list for an external heatmap producer: the tracklets as a MOTS file
//! plus one line per required heatmap, `ref_id ref_frame query_frame anchors`
//! with anchors comma-separated, closest first (so `ref_frame` repeats the
//! first anchor).

use std::fmt::Write as _;
use std::path::Path;

use super::{content_lines, field, parse_err, read_text, write_bytes, write_mots};
use crate::error::Result;
use crate::model::{tracks_to_records, Tracklet};
use crate::similarity::HeatmapRequest;

pub fn format_pairs(requests: &[HeatmapRequest]) -> String {
    let mut s = String::new();
    for r in requests {
        let anchors: Vec<String> = r.anchors.iter().map(|a| a.to_string()).collect();
        let _ = writeln!(s, "{} {} {} {}", r.ref_id, r.anchors[0], r.query, anchors.join(","));
    }
    s
}

pub fn parse_pairs(text: &str, path: &Path) -> Result<Vec<HeatmapRequest>> {
    let mut out = Vec::new();
    for (line, l) in content_lines(text) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(parse_err(path, line, format!("expected 4 fields, found {}", toks.len())));
        }
        let ref_frame: u32 = field(toks[1], "reference frame", path, line)?;
        let anchors = toks[3]
            .split(',')
            .map(|a| field(a, "anchor frame", path, line))
            .collect::<Result<Vec<u32>>>()?;
        if anchors[0] != ref_frame {
            return Err(parse_err(path, line, "reference frame must be the first anchor"));
        }
        out.push(HeatmapRequest {
            ref_id: field(toks[0], "reference id", path, line)?,
            anchors,
            query: field(toks[2], "query frame", path, line)?,
        });
    }
    Ok(out)
}

pub fn read_pairs(path: &Path) -> Result<Vec<HeatmapRequest>> {
    parse_pairs(&read_text(path)?, path)
}

/// Writes `tracklets.txt` and `pairs.txt` into `dir`.
pub fn write_manifest(dir: &Path, tracklets: &[Tracklet], requests: &[HeatmapRequest]) -> Result<()> {
    write_mots(&dir.join("tracklets.txt"), &tracks_to_records(tracklets))?;
    write_bytes(&dir.join("pairs.txt"), format_pairs(requests).as_bytes())
}
