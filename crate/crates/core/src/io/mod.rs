//! File formats: annotation and detection text files, optical flow, heatmap
//! containers, embedding tables, images, configuration and sequence folders.

mod config;
mod detections;
mod flow;
mod heatmaps;
mod image;
mod manifest;
mod mots;
mod reid;
mod rle;
mod seqdir;

use std::fs;
use std::path::Path;
use std::str::FromStr;

pub use config::{load_config, parse_config};
pub use detections::{format_detections, parse_detections, read_detections, write_detections};
pub use flow::{read_flo, write_flo};
pub use heatmaps::{decode_heatmaps, encode_heatmaps, read_heatmaps, write_heatmaps};
pub use image::{read_ppm, write_ppm};
pub use manifest::{format_pairs, parse_pairs, read_pairs, write_manifest};
pub use mots::{check_disjoint, format_mots, parse_mots, read_mots, write_mots};
pub use reid::{format_reid, parse_reid, read_reid, write_reid};
pub use rle::{rle_from_string, rle_to_string};
pub use seqdir::{DirFlowSource, SequenceDir};

use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, data: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, data).map_err(|e| Error::io(path, e))
}

/// Non-empty, non-comment lines with 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) fn field<T: FromStr>(tok: &str, name: &str, path: &Path, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("invalid {name} '{tok}'"),
    })
}

pub(crate) fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}
