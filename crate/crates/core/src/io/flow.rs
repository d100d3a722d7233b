//! Middlebury `.flo` optical flow: magic 202021.25, width and height as i32,
//! then row-major `(u, v)` f32 pairs, all little-endian.

use std::path::Path;

use super::write_bytes;
use crate::error::{Error, Result};
use crate::raster::FlowField;

const MAGIC: f32 = 202021.25;

pub fn read_flo(path: &Path) -> Result<FlowField> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Format { path: path.to_path_buf(), message: m.to_string() };
    if data.len() < 12 {
        return Err(bad("file too short for a flow header"));
    }
    let word = |i: usize| <[u8; 4]>::try_from(&data[4 * i..4 * i + 4]).unwrap();
    if f32::from_le_bytes(word(0)) != MAGIC {
        return Err(bad("bad magic number"));
    }
    let w = i32::from_le_bytes(word(1));
    let h = i32::from_le_bytes(word(2));
    if w <= 0 || h <= 0 {
        return Err(bad("non-positive dimensions"));
    }
    let n = w as usize * h as usize;
    if data.len() != 12 + 8 * n {
        return Err(bad(&format!("expected {} bytes for {w}x{h}, found {}", 12 + 8 * n, data.len())));
    }
    let vectors = (0..n)
        .map(|k| [f32::from_le_bytes(word(3 + 2 * k)), f32::from_le_bytes(word(4 + 2 * k))])
        .collect();
    FlowField::new(w as u32, h as u32, vectors).map_err(|e| bad(&e.to_string()))
}

pub fn write_flo(path: &Path, flow: &FlowField) -> Result<()> {
    let mut out = Vec::with_capacity(12 + 8 * flow.vectors().len());
    out.extend(MAGIC.to_le_bytes());
    out.extend((flow.width() as i32).to_le_bytes());
    out.extend((flow.height() as i32).to_le_bytes());
    for [u, v] in flow.vectors() {
        out.extend(u.to_le_bytes());
        out.extend(v.to_le_bytes());
    }
    write_bytes(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("000000.flo");
        let mut f = FlowField::zeros(3, 2);
        f.set(2, 1, [1.5, -0.25]);
        write_flo(&path, &f).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"PIEH");
        assert_eq!(bytes.len(), 12 + 8 * 6);
        assert_eq!(read_flo(&path).unwrap(), f);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.flo");
        write_flo(&path, &FlowField::zeros(3, 2)).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(read_flo(&path), Err(Error::Format { .. })));
    }
}
