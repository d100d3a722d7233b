//! Run-length encoded binary masks.
//!
//! Pixels are ordered column-major: pixel `(x, y)` has flat index `x * height + y`.
//! Runs alternate background/foreground and always start with a (possibly empty)
//! background run. Only the first run may be zero-length, so two masks with the
//! same pixels always have identical runs.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    runs: Vec<u32>,
}

impl BinaryMask {
    pub fn empty(width: u32, height: u32) -> Self {
        let n = width * height;
        BinaryMask {
            width,
            height,
            runs: if n == 0 { Vec::new() } else { vec![n] },
        }
    }

    /// Builds a mask from raw run lengths. Zero-length runs after the first are
    /// folded into their neighbours.
    pub fn from_runs(width: u32, height: u32, runs: &[u32]) -> Result<Self> {
        let total: u64 = runs.iter().map(|&r| r as u64).sum();
        let expected = width as u64 * height as u64;
        if total != expected {
            return Err(Error::InvalidRle(format!(
                "runs sum to {total}, expected {width}x{height} = {expected}"
            )));
        }
        let mut canonical: Vec<u32> = Vec::with_capacity(runs.len());
        let mut last_fg: Option<bool> = None;
        for (i, &r) in runs.iter().enumerate() {
            if r == 0 {
                continue;
            }
            let fg = i % 2 == 1;
            match last_fg {
                Some(prev) if prev == fg => *canonical.last_mut().unwrap() += r,
                None if fg => canonical.extend([0, r]),
                _ => canonical.push(r),
            }
            last_fg = Some(fg);
        }
        Ok(BinaryMask {
            width,
            height,
            runs: canonical,
        })
    }

    /// Encodes a dense column-major pixel buffer.
    pub fn from_dense(width: u32, height: u32, pixels: &[bool]) -> Result<Self> {
        let n = width as usize * height as usize;
        if pixels.len() != n {
            return Err(Error::InvalidRle(format!(
                "dense buffer has {} pixels, expected {n}",
                pixels.len()
            )));
        }
        let mut runs = Vec::new();
        let mut current = false;
        let mut count = 0u32;
        for &p in pixels {
            if p != current {
                runs.push(count);
                count = 0;
                current = p;
            }
            count += 1;
        }
        if n > 0 {
            runs.push(count);
        }
        BinaryMask::from_runs(width, height, &runs)
    }

    /// Builds a mask from a predicate over `(x, y)`.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut dense = Vec::with_capacity(width as usize * height as usize);
        for x in 0..width {
            for y in 0..height {
                dense.push(f(x, y));
            }
        }
        BinaryMask::from_dense(width, height, &dense).expect("buffer sized from dimensions")
    }

    /// Axis-aligned filled rectangle `[x0, x0+w) x [y0, y0+h)`, clipped to the image.
    pub fn rect(width: u32, height: u32, x0: i64, y0: i64, w: u32, h: u32) -> Self {
        BinaryMask::from_fn(width, height, |x, y| {
            let (x, y) = (x as i64, y as i64);
            x >= x0 && x < x0 + w as i64 && y >= y0 && y < y0 + h as i64
        })
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

    pub fn runs(&self) -> &[u32] {
        &self.runs
    }

    pub fn to_dense(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.width as usize * self.height as usize);
        for (i, &r) in self.runs.iter().enumerate() {
            out.extend(std::iter::repeat(i % 2 == 1).take(r as usize));
        }
        out
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        if x >= self.width || y >= self.height {
            return false;
        }
        let idx = x as u64 * self.height as u64 + y as u64;
        let mut start = 0u64;
        for (i, &r) in self.runs.iter().enumerate() {
            let end = start + r as u64;
            if idx < end {
                return i % 2 == 1;
            }
            start = end;
        }
        false
    }

    pub fn area(&self) -> u64 {
        self.runs.iter().skip(1).step_by(2).map(|&r| r as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }

    /// Foreground runs as half-open flat index ranges.
    pub fn foreground_spans(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let mut start = 0u64;
        self.runs.iter().enumerate().filter_map(move |(i, &r)| {
            let s = start;
            start += r as u64;
            (i % 2 == 1).then_some((s, s + r as u64))
        })
    }

    /// Foreground pixel coordinates in column-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let h = self.height as u64;
        self.foreground_spans()
            .flat_map(move |(s, e)| (s..e).map(move |i| ((i / h) as u32, (i % h) as u32)))
    }

    pub fn first_foreground_index(&self) -> Option<u64> {
        self.foreground_spans().next().map(|(s, _)| s)
    }

    /// Mean foreground `(x, y)`.
    pub fn centroid(&self) -> Result<(f64, f64)> {
        let h = self.height as u64;
        let (mut sx, mut sy, mut n) = (0f64, 0f64, 0u64);
        for (s, e) in self.foreground_spans() {
            // split each span at column boundaries so sums stay closed-form
            let mut i = s;
            while i < e {
                let col = i / h;
                let col_end = ((col + 1) * h).min(e);
                let count = col_end - i;
                let y0 = i % h;
                let y1 = y0 + count - 1;
                sx += (col * count) as f64;
                sy += ((y0 + y1) * count) as f64 / 2.0;
                n += count;
                i = col_end;
            }
        }
        if n == 0 {
            return Err(Error::EmptyMask);
        }
        Ok((sx / n as f64, sy / n as f64))
    }

    fn check_dims(&self, other: &BinaryMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims(), "mask pair"));
        }
        Ok(())
    }

    pub fn intersection_area(&self, other: &BinaryMask) -> Result<u64> {
        self.check_dims(other)?;
        let mut a = self.foreground_spans().peekable();
        let mut b = other.foreground_spans().peekable();
        let mut inter = 0u64;
        while let (Some(&(sa, ea)), Some(&(sb, eb))) = (a.peek(), b.peek()) {
            let lo = sa.max(sb);
            let hi = ea.min(eb);
            if hi > lo {
                inter += hi - lo;
            }
            if ea <= eb {
                a.next();
            } else {
                b.next();
            }
        }
        Ok(inter)
    }

    /// Intersection over union; 0 when both masks are empty.
    pub fn iou(&self, other: &BinaryMask) -> Result<f64> {
        let inter = self.intersection_area(other)?;
        let union = self.area() + other.area() - inter;
        if union == 0 {
            return Ok(0.0);
        }
        Ok(inter as f64 / union as f64)
    }

    pub fn is_disjoint(&self, other: &BinaryMask) -> Result<bool> {
        Ok(self.intersection_area(other)? == 0)
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_dims(other)?;
        let dense: Vec<bool> = self
            .to_dense()
            .into_iter()
            .zip(other.to_dense())
            .map(|(a, b)| a || b)
            .collect();
        BinaryMask::from_dense(self.width, self.height, &dense)
    }

    /// Pixels of `self` not in `other`.
    pub fn minus(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_dims(other)?;
        let dense: Vec<bool> = self
            .to_dense()
            .into_iter()
            .zip(other.to_dense())
            .map(|(a, b)| a && !b)
            .collect();
        BinaryMask::from_dense(self.width, self.height, &dense)
    }

    /// Removes `radius` layers of boundary pixels (4-neighbourhood). Pixels on the
    /// image border count as boundary.
    pub fn erode(&self, radius: u32) -> BinaryMask {
        let (w, h) = (self.width as usize, self.height as usize);
        let mut dense = self.to_dense();
        for _ in 0..radius {
            let prev = dense.clone();
            for x in 0..w {
                for y in 0..h {
                    let i = x * h + y;
                    if !prev[i] {
                        continue;
                    }
                    let interior = x > 0
                        && x + 1 < w
                        && y > 0
                        && y + 1 < h
                        && prev[i - h]
                        && prev[i + h]
                        && prev[i - 1]
                        && prev[i + 1];
                    if !interior {
                        dense[i] = false;
                    }
                }
            }
        }
        BinaryMask::from_dense(self.width, self.height, &dense).expect("same dimensions")
    }
}
