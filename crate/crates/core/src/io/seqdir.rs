//! One sequence per directory:
//!
//! ```text
//! seqinfo               key=value: sequence_id, width, height, fps, frame_count
//! detections.txt
//! flow/NNNNNN.flo       flow from frame N to N+1
//! heatmaps.bin          optional
//! reid.txt              optional
//! images/NNNNNN.ppm     optional
//! gt.txt                optional
//! ```

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{
    content_lines, field, parse_err, read_detections, read_flo, read_heatmaps, read_mots, read_ppm,
    read_reid, read_text, write_bytes,
};
use crate::error::{Error, Result};
use crate::model::{Detection, FrameIdx, SequenceMeta, TrackedMask};
use crate::raster::{FlowField, RgbImage};
use crate::similarity::{FeatureTable, HeatmapStore};
use crate::sta::FlowSource;

#[derive(Debug, Clone)]
pub struct SequenceDir {
    pub root: PathBuf,
}

impl SequenceDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        SequenceDir { root: root.into() }
    }

    pub fn seqinfo_path(&self) -> PathBuf {
        self.root.join("seqinfo")
    }
    pub fn detections_path(&self) -> PathBuf {
        self.root.join("detections.txt")
    }
    pub fn flow_path(&self, frame: FrameIdx) -> PathBuf {
        self.root.join("flow").join(format!("{frame:06}.flo"))
    }
    pub fn heatmaps_path(&self) -> PathBuf {
        self.root.join("heatmaps.bin")
    }
    pub fn reid_path(&self) -> PathBuf {
        self.root.join("reid.txt")
    }
    pub fn image_path(&self, frame: FrameIdx) -> PathBuf {
        self.root.join("images").join(format!("{frame:06}.ppm"))
    }
    pub fn gt_path(&self) -> PathBuf {
        self.root.join("gt.txt")
    }

    pub fn meta(&self) -> Result<SequenceMeta> {
        let path = self.seqinfo_path();
        let text = read_text(&path)?;
        let mut kv = BTreeMap::new();
        for (line, l) in content_lines(&text) {
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| parse_err(&path, line, "expected key=value"))?;
            kv.insert(k.trim().to_string(), (line, v.trim().to_string()));
        }
        let width = lookup(&kv, "width", &path)?;
        let height = lookup(&kv, "height", &path)?;
        let fps = lookup(&kv, "fps", &path)?;
        let frame_count = lookup(&kv, "frame_count", &path)?;
        let id = match kv.get("sequence_id") {
            Some((_, s)) => s.clone(),
            None => self
                .root
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        SequenceMeta::new(id, width, height, fps, frame_count)
    }

    pub fn write_meta(&self, meta: &SequenceMeta) -> Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "sequence_id={}", meta.sequence_id);
        let _ = writeln!(s, "width={}", meta.width);
        let _ = writeln!(s, "height={}", meta.height);
        let _ = writeln!(s, "fps={}", meta.fps);
        let _ = writeln!(s, "frame_count={}", meta.frame_count);
        write_bytes(&self.seqinfo_path(), s.as_bytes())
    }

    pub fn detections(&self) -> Result<Vec<Detection>> {
        read_detections(&self.detections_path())
    }

    pub fn flows(&self) -> DirFlowSource {
        DirFlowSource { dir: self.clone() }
    }

    pub fn heatmaps(&self) -> Result<Option<HeatmapStore>> {
        optional(self.heatmaps_path(), |p| read_heatmaps(p))
    }

    pub fn reid(&self) -> Result<Option<FeatureTable>> {
        optional(self.reid_path(), |p| read_reid(p))
    }

    pub fn gt(&self) -> Result<Option<Vec<TrackedMask>>> {
        optional(self.gt_path(), |p| read_mots(p))
    }

    /// All frames that have an image file; `None` when the folder is absent.
    pub fn images(&self, frame_count: u32) -> Result<Option<BTreeMap<FrameIdx, RgbImage>>> {
        if !self.root.join("images").is_dir() {
            return Ok(None);
        }
        let mut out = BTreeMap::new();
        for f in 0..frame_count {
            let p = self.image_path(f);
            if p.exists() {
                out.insert(f, read_ppm(&p)?);
            }
        }
        Ok(Some(out))
    }
}

fn lookup<T: std::str::FromStr>(
    kv: &BTreeMap<String, (usize, String)>,
    key: &str,
    path: &Path,
) -> Result<T> {
    let (line, v) = kv.get(key).ok_or_else(|| Error::Format {
        path: path.to_path_buf(),
        message: format!("missing key '{key}'"),
    })?;
    field(v, key, path, *line)
}

fn optional<T>(path: PathBuf, read: impl FnOnce(&Path) -> Result<T>) -> Result<Option<T>> {
    if path.exists() {
        read(&path).map(Some)
    } else {
        Ok(None)
    }
}

/// Reads flow files on demand.
#[derive(Debug, Clone)]
pub struct DirFlowSource {
    dir: SequenceDir,
}

impl FlowSource for DirFlowSource {
    fn flow(&self, frame: FrameIdx) -> Result<Option<Cow<'_, FlowField>>> {
        let p = self.dir.flow_path(frame);
        if !p.exists() {
            return Ok(None);
        }
        read_flo(&p).map(|f| Some(Cow::Owned(f)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::write_flo;

    #[test]
    fn meta_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let seq = SequenceDir::new(dir.path().join("seq-a"));
        let meta = SequenceMeta::new("seq-a", 240, 160, 10.0, 40).unwrap();
        seq.write_meta(&meta).unwrap();
        assert_eq!(seq.meta().unwrap(), meta);
    }

    #[test]
    fn missing_keys_and_files() {
        let dir = tempfile::tempdir().unwrap();
        let seq = SequenceDir::new(dir.path());
        std::fs::write(seq.seqinfo_path(), "width=3\nheight=2\nfps=10\n").unwrap();
        assert!(seq.meta().unwrap_err().to_string().contains("frame_count"));
        assert!(seq.heatmaps().unwrap().is_none());
        assert!(seq.images(3).unwrap().is_none());
        assert!(matches!(seq.detections(), Err(Error::Io { .. })));
    }

    #[test]
    fn flows_load_lazily() {
        let dir = tempfile::tempdir().unwrap();
        let seq = SequenceDir::new(dir.path());
        write_flo(&seq.flow_path(2), &FlowField::uniform(3, 2, 1.0, 0.0)).unwrap();
        let src = seq.flows();
        assert!(src.flow(1).unwrap().is_none());
        assert_eq!(src.flow(2).unwrap().unwrap().at(0, 0), [1.0, 0.0]);
    }
}
