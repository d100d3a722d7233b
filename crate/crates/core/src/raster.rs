//! Dense rasters that interact with masks: optical flow and RGB frames.

use crate::error::{Error, Result};
use crate::mask::BinaryMask;

/// Per-pixel displacement from frame t to t+1, stored row-major as `(u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: u32,
    height: u32,
    vectors: Vec<[f32; 2]>,
}

impl FlowField {
    pub fn new(width: u32, height: u32, vectors: Vec<[f32; 2]>) -> Result<Self> {
        if vectors.len() != width as usize * height as usize {
            return Err(Error::Config(format!(
                "flow field of {width}x{height} needs {} vectors, got {}",
                width as usize * height as usize,
                vectors.len()
            )));
        }
        if vectors.iter().any(|v| !(v[0].is_finite() && v[1].is_finite())) {
            return Err(Error::Config("flow field contains non-finite values".into()));
        }
        Ok(FlowField {
            width,
            height,
            vectors,
        })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        FlowField {
            width,
            height,
            vectors: vec![[0.0, 0.0]; width as usize * height as usize],
        }
    }

    pub fn uniform(width: u32, height: u32, u: f32, v: f32) -> Self {
        FlowField {
            width,
            height,
            vectors: vec![[u, v]; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn vectors(&self) -> &[[f32; 2]] {
        &self.vectors
    }

    pub fn at(&self, x: u32, y: u32) -> [f32; 2] {
        self.vectors[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, uv: [f32; 2]) {
        self.vectors[y as usize * self.width as usize + x as usize] = uv;
    }
}

/// Forward-warps a mask: every foreground pixel moves by its rounded flow vector.
/// Destinations outside the image are dropped and collisions merge.
pub fn warp_mask(mask: &BinaryMask, flow: &FlowField) -> Result<BinaryMask> {
    if mask.dims() != flow.dims() {
        return Err(Error::dims(flow.dims(), mask.dims(), "mask vs flow"));
    }
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let mut dense = vec![false; (w * h) as usize];
    for (x, y) in mask.pixels() {
        let [u, v] = flow.at(x, y);
        let nx = x as i64 + u.round() as i64;
        let ny = y as i64 + v.round() as i64;
        if (0..w).contains(&nx) && (0..h).contains(&ny) {
            dense[(nx * h + ny) as usize] = true;
        }
    }
    BinaryMask::from_dense(mask.width(), mask.height(), &dense)
}

/// 8-bit RGB frame, row-major interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if data.len() != width as usize * height as usize * 3 {
            return Err(Error::Config(format!(
                "RGB buffer for {width}x{height} needs {} bytes, got {}",
                width as usize * height as usize * 3,
                data.len()
            )));
        }
        Ok(RgbImage {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 3)
            .collect();
        RgbImage {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Joint RGB histogram with `bins` levels per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorHistogram {
    bins: u32,
    values: Vec<f64>,
}

impl ColorHistogram {
    pub fn bins(&self) -> u32 {
        self.bins
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn index(bins: u32, rgb: [u8; 3]) -> usize {
        let q = |c: u8| (c as u32 * bins / 256) as usize;
        let b = bins as usize;
        (q(rgb[0]) * b + q(rgb[1])) * b + q(rgb[2])
    }
}

/// L1-normalized colour histogram of the pixels under `mask`; all zeros when
/// the mask is empty.
pub fn masked_histogram(image: &RgbImage, mask: &BinaryMask, bins: u32) -> Result<ColorHistogram> {
    if image.dims() != mask.dims() {
        return Err(Error::dims(image.dims(), mask.dims(), "image vs mask"));
    }
    if bins == 0 || bins > 256 {
        return Err(Error::Config(format!("histogram bins must lie in [1, 256], got {bins}")));
    }
    let b = bins as usize;
    let mut values = vec![0f64; b * b * b];
    let mut n = 0u64;
    for (x, y) in mask.pixels() {
        values[ColorHistogram::index(bins, image.pixel(x, y))] += 1.0;
        n += 1;
    }
    if n > 0 {
        for v in &mut values {
            *v /= n as f64;
        }
    }
    Ok(ColorHistogram { bins, values })
}

/// Bhattacharyya coefficient `sum_i sqrt(p_i q_i)`.
pub fn bhattacharyya(a: &ColorHistogram, b: &ColorHistogram) -> f64 {
    assert_eq!(a.bins, b.bins, "histograms must share a bin layout");
    a.values
        .iter()
        .zip(&b.values)
        .map(|(p, q)| (p * q).sqrt())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_flow_translates_and_clips() {
        let m = BinaryMask::rect(20, 10, 12, 2, 6, 4);
        let warped = warp_mask(&m, &FlowField::uniform(20, 10, 5.0, 0.0)).unwrap();
        assert_eq!(warped, BinaryMask::rect(20, 10, 17, 2, 3, 4));
        assert_eq!(warp_mask(&m, &FlowField::zeros(20, 10)).unwrap(), m);
    }

    #[test]
    fn colliding_pixels_union() {
        let m = BinaryMask::from_fn(4, 4, |x, y| y == 0 && x < 2);
        let mut flow = FlowField::zeros(4, 4);
        flow.set(0, 0, [1.0, 1.0]);
        flow.set(1, 0, [0.0, 1.0]);
        let warped = warp_mask(&m, &flow).unwrap();
        assert_eq!(warped.area(), 1);
        assert!(warped.get(1, 1));
    }

    #[test]
    fn flow_rounds_to_nearest() {
        let m = BinaryMask::from_fn(8, 8, |x, y| x == 2 && y == 2);
        let warped = warp_mask(&m, &FlowField::uniform(8, 8, 1.6, -0.4)).unwrap();
        assert!(warped.get(4, 2));
    }

    #[test]
    fn warp_rejects_mismatched_flow() {
        let m = BinaryMask::empty(4, 4);
        assert!(warp_mask(&m, &FlowField::zeros(4, 5)).is_err());
    }

    #[test]
    fn red_patch_fills_one_bin() {
        let img = RgbImage::filled(6, 6, [255, 0, 0]);
        let m = BinaryMask::rect(6, 6, 1, 1, 3, 3);
        let h = masked_histogram(&img, &m, 8).unwrap();
        let nonzero: Vec<f64> = h.values().iter().copied().filter(|&v| v > 0.0).collect();
        assert_eq!(nonzero, vec![1.0]);
        assert_eq!(h.values()[ColorHistogram::index(8, [255, 0, 0])], 1.0);
    }

    #[test]
    fn empty_mask_histogram_is_zero() {
        let img = RgbImage::filled(6, 6, [10, 20, 30]);
        let h = masked_histogram(&img, &BinaryMask::empty(6, 6), 8).unwrap();
        assert!(h.values().iter().all(|&v| v == 0.0));
        assert_eq!(bhattacharyya(&h, &h), 0.0);
    }

    #[test]
    fn half_red_half_blue() {
        let mut img = RgbImage::filled(4, 4, [255, 0, 0]);
        for y in 0..4 {
            for x in 2..4 {
                img.put_pixel(x, y, [0, 0, 255]);
            }
        }
        let h = masked_histogram(&img, &BinaryMask::rect(4, 4, 0, 0, 4, 4), 8).unwrap();
        let nonzero: Vec<f64> = h.values().iter().copied().filter(|&v| v > 0.0).collect();
        assert_eq!(nonzero, vec![0.5, 0.5]);
    }

    #[test]
    fn bhattacharyya_values() {
        let mk = |pairs: &[(usize, f64)]| {
            let mut values = vec![0.0; 8];
            for &(i, v) in pairs {
                values[i] = v;
            }
            ColorHistogram { bins: 2, values }
        };
        let a = mk(&[(0, 0.5), (1, 0.5)]);
        let b = mk(&[(0, 1.0)]);
        let c = mk(&[(5, 1.0)]);
        assert!((bhattacharyya(&a, &a) - 1.0).abs() < 1e-15);
        assert_eq!(bhattacharyya(&b, &c), 0.0);
        assert!((bhattacharyya(&a, &b) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(bhattacharyya(&a, &b), bhattacharyya(&b, &a));
    }
}
