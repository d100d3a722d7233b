//! Embedding tables: a `dim <d>` header, then `tracklet_id frame v1 .. vd` rows.

use std::fmt::Write as _;
use std::path::Path;

use super::{content_lines, field, parse_err, read_text, write_bytes};
use crate::error::Result;
use crate::similarity::FeatureTable;

pub fn parse_reid(text: &str, path: &Path) -> Result<FeatureTable> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or_else(|| parse_err(path, 1, "missing 'dim' header"))?;
    let dim: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["dim", d] => field(d, "dimension", path, line)?,
        _ => return Err(parse_err(path, line, "expected 'dim <d>' header")),
    };
    let mut table = FeatureTable { dim, ..Default::default() };
    for (line, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != dim + 2 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} values, found {}", dim, toks.len().saturating_sub(2)),
            ));
        }
        let key = (field(toks[0], "tracklet id", path, line)?, field(toks[1], "frame", path, line)?);
        let v = toks[2..]
            .iter()
            .map(|t| field::<f32>(t, "feature value", path, line))
            .collect::<Result<Vec<_>>>()?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(parse_err(path, line, "feature values must be finite"));
        }
        if table.rows.insert(key, v).is_some() {
            return Err(parse_err(path, line, format!("duplicate row for {key:?}")));
        }
    }
    Ok(table)
}

pub fn read_reid(path: &Path) -> Result<FeatureTable> {
    parse_reid(&read_text(path)?, path)
}

pub fn format_reid(table: &FeatureTable) -> String {
    let mut s = format!("dim {}\n", table.dim);
    for (&(id, frame), v) in &table.rows {
        let _ = write!(s, "{id} {frame}");
        for x in v {
            let _ = write!(s, " {x}");
        }
        s.push('\n');
    }
    s
}

pub fn write_reid(path: &Path, table: &FeatureTable) -> Result<()> {
    write_bytes(path, format_reid(table).as_bytes())
}
