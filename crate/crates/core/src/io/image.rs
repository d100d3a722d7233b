use std::path::Path;

use image::ImageFormat;

use super::write_bytes;
use crate::error::{Error, Result};
use crate::raster::RgbImage;

/// Reads any portable anymap image as 8-bit RGB.
pub fn read_ppm(path: &Path) -> Result<RgbImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory_with_format(&bytes, ImageFormat::Pnm)
        .map_err(|e| Error::Format { path: path.to_path_buf(), message: e.to_string() })?
        .to_rgb8();
    RgbImage::new(img.width(), img.height(), img.into_raw())
}

/// Writes a binary (P6) pixmap.
pub fn write_ppm(path: &Path, image: &RgbImage) -> Result<()> {
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.data());
    write_bytes(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("000003.ppm");
        let mut img = RgbImage::filled(4, 3, [10, 20, 30]);
        img.put_pixel(3, 2, [255, 0, 7]);
        write_ppm(&path, &img).unwrap();
        assert_eq!(read_ppm(&path).unwrap(), img);
    }

    #[test]
    fn garbage_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.ppm");
        std::fs::write(&path, b"P6\nnot an image").unwrap();
        assert!(matches!(read_ppm(&path), Err(Error::Format { .. })));
    }
}
