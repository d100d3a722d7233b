//! Binary heatmap container.
//!
//! Layout, little-endian: `b"HMAP"`, version `u32 = 1`, width, height and
//! count as `u32`, then `count` index entries of `(ref_id: u32, ref_frame: u32,
//! query_frame: u32, offset: u64)`, then `width * height` bytes per heatmap at
//! the given offsets, row-major. Bytes map to `value / 255`.

use std::path::Path;

use super::write_bytes;
use crate::error::{Error, Result};
use crate::similarity::{Heatmap, HeatmapStore};

const MAGIC: &[u8; 4] = b"HMAP";
const VERSION: u32 = 1;
const HEADER: usize = 20;
const ENTRY: usize = 20;

pub fn quantize(v: f32) -> u8 {
    (255.0 * v.clamp(0.0, 1.0) + 0.5).floor() as u8
}

pub fn encode_heatmaps(store: &HeatmapStore) -> Result<Vec<u8>> {
    let n = store.width as usize * store.height as usize;
    let mut out = Vec::with_capacity(HEADER + store.maps.len() * (ENTRY + n));
    out.extend(MAGIC);
    for v in [VERSION, store.width, store.height, store.maps.len() as u32] {
        out.extend(v.to_le_bytes());
    }
    let mut offset = (HEADER + ENTRY * store.maps.len()) as u64;
    for &(r, f, q) in store.maps.keys() {
        for v in [r, f, q] {
            out.extend(v.to_le_bytes());
        }
        out.extend(offset.to_le_bytes());
        offset += n as u64;
    }
    for (key, h) in &store.maps {
        if h.dims() != (store.width, store.height) {
            return Err(Error::dims(
                (store.width, store.height),
                h.dims(),
                format!("heatmap {key:?}"),
            ));
        }
        out.extend(h.values().iter().map(|&v| quantize(v)));
    }
    Ok(out)
}

pub fn decode_heatmaps(data: &[u8], path: &Path) -> Result<HeatmapStore> {
    let bad = |m: String| Error::Format { path: path.to_path_buf(), message: m };
    if data.len() < HEADER || &data[..4] != MAGIC {
        return Err(bad("not a heatmap container".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(data[i..i + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let (width, height, count) = (u32_at(8), u32_at(12), u32_at(16) as usize);
    let n = width as usize * height as usize;
    if data.len() < HEADER + ENTRY * count {
        return Err(bad("truncated index".into()));
    }
    let mut store = HeatmapStore { width, height, ..Default::default() };
    for k in 0..count {
        let e = HEADER + ENTRY * k;
        let key = (u32_at(e), u32_at(e + 4), u32_at(e + 8));
        let offset = u64::from_le_bytes(data[e + 12..e + 20].try_into().unwrap());
        let start = usize::try_from(offset).map_err(|_| bad("offset out of range".into()))?;
        let raster = start
            .checked_add(n)
            .and_then(|end| data.get(start..end))
            .ok_or_else(|| bad(format!("heatmap {key:?} runs past end of file")))?;
        let values = raster.iter().map(|&b| b as f32 / 255.0).collect();
        let map = Heatmap::new(width, height, values).map_err(|e| bad(e.to_string()))?;
        if store.maps.insert(key, map).is_some() {
            return Err(bad(format!("duplicate heatmap {key:?}")));
        }
    }
    Ok(store)
}

pub fn write_heatmaps(path: &Path, store: &HeatmapStore) -> Result<()> {
    write_bytes(path, &encode_heatmaps(store)?)
}

pub fn read_heatmaps(path: &Path) -> Result<HeatmapStore> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_heatmaps(&data, path)
}
