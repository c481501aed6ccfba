//! From soft edge maps to oriented edge segments, and back to pixels.

use alloc::vec;
use alloc::vec::Vec;

use crate::energy::ModelParams;
use crate::error::{Error, Result};
use crate::math;
use crate::segment::{EdgeSegment, SegmentField};

/// Window used for orientation estimates when none is given.
pub const DEFAULT_ORIENTATION_WINDOW: usize = 5;

/// A row-major grid of raw intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayGrid {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl GrayGrid {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::InvalidParams(alloc::format!(
                "{} values for a {width}x{height} grid",
                values.len()
            )));
        }
        Ok(GrayGrid {
            width,
            height,
            values,
        })
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

/// Soft edge strengths in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftEdgeMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl SoftEdgeMap {
    /// Rejects negative or non-finite values; rescales by the maximum when
    /// any value exceeds one.
    pub fn new(width: u32, height: u32, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::InvalidParams(alloc::format!(
                "{} values for a {width}x{height} map",
                values.len()
            )));
        }
        let mut max: f64 = 0.0;
        for (index, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidMapValue { index, value: v });
            }
            max = max.max(v);
        }
        if max > 1.0 {
            values.iter_mut().for_each(|v| *v /= max);
        }
        Ok(SoftEdgeMap {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

/// A row-major bit image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMap {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMap {
    pub fn new(width: u32, height: u32) -> Self {
        BinaryMap {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::InvalidParams(alloc::format!(
                "{} bits for a {width}x{height} map",
                bits.len()
            )));
        }
        Ok(BinaryMap {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, on: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = on;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// `(x, y)` of every set bit, row-major.
    pub fn ones(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| ((k % w) as u32, (k / w) as u32))
    }

    /// Pixel-wise OR of two equally sized maps.
    pub fn union(&self, other: &BinaryMap) -> Result<BinaryMap> {
        self.check_same_size(other)?;
        Ok(BinaryMap {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect(),
        })
    }

    pub(crate) fn check_same_size(&self, other: &BinaryMap) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }
}

/// Bits set where the soft value is strictly greater than `th0`.
pub fn threshold_map(map: &SoftEdgeMap, th0: f64) -> BinaryMap {
    BinaryMap {
        width: map.width,
        height: map.height,
        bits: map.values.iter().map(|&v| v > th0).collect(),
    }
}

/// Local edge direction at one set pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelOrientation {
    pub x: u32,
    pub y: u32,
    /// Axial angle in `[0, π)`, image coordinates.
    pub angle: f64,
    /// No usable direction in the window (lone pixel or isotropic blob);
    /// `angle` is 0 in that case.
    pub isolated: bool,
}

/// Principal direction of the scatter matrix of set-pixel offsets inside a
/// `window x window` square around every set pixel.
pub fn estimate_orientations(binary: &BinaryMap, window: usize) -> Result<Vec<PixelOrientation>> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::InvalidWindow(window));
    }
    let r = (window / 2) as i64;
    let (w, h) = (binary.width as i64, binary.height as i64);
    let mut out = Vec::new();
    for (x, y) in binary.ones() {
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for dy in -r..=r {
            let yy = y as i64 + dy;
            if yy < 0 || yy >= h {
                continue;
            }
            for dx in -r..=r {
                let xx = x as i64 + dx;
                if xx < 0 || xx >= w || (dx == 0 && dy == 0) {
                    continue;
                }
                if binary.get(xx as u32, yy as u32) {
                    let (fx, fy) = (dx as f64, dy as f64);
                    sxx += fx * fx;
                    syy += fy * fy;
                    sxy += fx * fy;
                }
            }
        }
        let spread = sxx + syy;
        let (a, b) = (2.0 * sxy, sxx - syy);
        let degenerate = spread == 0.0 || math::hypot(a, b) <= 1e-12 * spread;
        let angle = if degenerate {
            0.0
        } else {
            math::fold_axial(0.5 * math::atan2(a, b))
        };
        out.push(PixelOrientation {
            x,
            y,
            angle,
            isolated: degenerate,
        });
    }
    Ok(out)
}

/// One segment per pixel above `params.th0`, descriptor = soft value.
pub fn extract_segments(map: &SoftEdgeMap, params: &ModelParams) -> Result<SegmentField> {
    extract_segments_with_window(map, params.th0, DEFAULT_ORIENTATION_WINDOW)
}

pub fn extract_segments_with_window(map: &SoftEdgeMap, th0: f64, window: usize) -> Result<SegmentField> {
    let binary = threshold_map(map, th0);
    let segments = estimate_orientations(&binary, window)?
        .into_iter()
        .map(|p| EdgeSegment::new(p.x, p.y, map.get(p.x, p.y), p.angle))
        .collect();
    SegmentField::new(map.width, map.height, segments)
}

/// Central-difference gradient magnitude with replicated borders, scaled so
/// the maximum is one. A constant image gives an all-zero map.
pub fn gradient_magnitude(image: &GrayGrid) -> Result<SoftEdgeMap> {
    let (w, h) = (image.width, image.height);
    if w < 2 || h < 2 {
        return Err(Error::DegenerateImage(w, h));
    }
    let mut mag = Vec::with_capacity(w as usize * h as usize);
    for y in 0..h {
        for x in 0..w {
            let gx = (image.get((x + 1).min(w - 1), y) - image.get(x.saturating_sub(1), y)) / 2.0;
            let gy = (image.get(x, (y + 1).min(h - 1)) - image.get(x, y.saturating_sub(1))) / 2.0;
            mag.push(math::hypot(gx, gy));
        }
    }
    let max = mag.iter().cloned().fold(0.0, f64::max);
    if !max.is_finite() {
        return Err(Error::InvalidParams("image contains non-finite values".into()));
    }
    if max > 0.0 {
        mag.iter_mut().for_each(|v| *v /= max);
    }
    SoftEdgeMap::new(w, h, mag)
}

/// Sets the pixel of every segment labelled 1.
pub fn labels_to_binary(field: &SegmentField, labels: &[bool]) -> Result<BinaryMap> {
    if labels.len() != field.len() {
        return Err(Error::LabelLength {
            expected: field.len(),
            got: labels.len(),
        });
    }
    let mut out = BinaryMap::new(field.width(), field.height());
    for (s, &on) in field.segments().iter().zip(labels) {
        if on {
            out.set(s.x, s.y, true);
        }
    }
    Ok(out)
}
