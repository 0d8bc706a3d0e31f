//! Pixel carriers: RGB images, soft (alpha) masks and binary label masks.
//!
//! All intensities are normalized `f32` in `[0, 1]`, stored row-major.
//! Conversion to 8-bit happens only in [`super::io`].

use crate::error::{invalid, Error, Result};

/// Shared view over planar-interleaved `f32` rasters so blur, resize and
/// warps can be written once for both images and soft masks.
pub trait Raster: Sized {
    /// Interleaved channels per pixel.
    const CHANNELS: usize;

    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn samples(&self) -> &[f32];
    fn from_samples(width: usize, height: usize, samples: Vec<f32>) -> Result<Self>;

    fn dims(&self) -> (usize, usize) {
        (self.width(), self.height())
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(invalid(format!("raster dimensions must be >= 1, got {width}x{height}")));
    }
    Ok(())
}

fn check_len(width: usize, height: usize, channels: usize, len: usize) -> Result<()> {
    check_dims(width, height)?;
    if len != width * height * channels {
        return Err(invalid(format!(
            "expected {} samples for {width}x{height}x{channels}, got {len}",
            width * height * channels
        )));
    }
    Ok(())
}

/// H×W×3 RGB image with normalized channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl ImageBuffer {
    /// Black image.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![0.0; width * height * 3],
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Result<Self> {
        Self::from_fn(width, height, |_, _| rgb)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f32; 3],
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::from_vec(width, height, data)
    }

    /// Rejects wrong lengths and non-finite samples.
    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_len(width, height, 3, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("image samples must be finite"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [f32; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    /// Clamps every channel into `[0, 1]`.
    pub fn clamp_unit(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// Zeroes every pixel whose mask value is below 0.5.
    pub fn mask_out(&mut self, mask: &SoftMask) -> Result<()> {
        ensure_same_dims("mask_out", self.dims(), mask.dims())?;
        for (px, &m) in self.data.chunks_exact_mut(3).zip(mask.data()) {
            if m < 0.5 {
                px.fill(0.0);
            }
        }
        Ok(())
    }
}

impl Raster for ImageBuffer {
    const CHANNELS: usize = 3;

    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn samples(&self) -> &[f32] {
        &self.data
    }
    fn from_samples(width: usize, height: usize, samples: Vec<f32>) -> Result<Self> {
        Self::from_vec(width, height, samples)
    }
}

/// Per-pixel alpha in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMask {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl SoftMask {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        check_dims(width, height)?;
        Self::from_vec(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_vec(width, height, data)
    }

    /// Rejects values outside `[0, 1]`.
    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_len(width, height, 1, data.len())?;
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid("soft mask values must lie in [0, 1]"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v.clamp(0.0, 1.0);
    }

    /// Multiplies every alpha by `factor` (clamped to `[0, 1]`).
    pub fn scaled(&self, factor: f32) -> SoftMask {
        let data = self.data.iter().map(|v| (v * factor).clamp(0.0, 1.0)).collect();
        SoftMask {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Hard support: alpha >= 0.5.
    pub fn to_binary(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| u8::from(v >= 0.5)).collect(),
        }
    }
}

impl Raster for SoftMask {
    const CHANNELS: usize = 1;

    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn samples(&self) -> &[f32] {
        &self.data
    }
    fn from_samples(width: usize, height: usize, samples: Vec<f32>) -> Result<Self> {
        check_len(width, height, 1, samples.len())?;
        // Interpolation may overshoot by an ulp; clamp rather than reject.
        let data = samples.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }
}

/// Two-class label mask: 1 = foreground (face, or occluder support), 0 = background.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

/// Inclusive pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BBox {
    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }

    /// Grows by `margin` on every side, clipped to a `width`×`height` canvas.
    pub fn expanded(&self, margin: usize, width: usize, height: usize) -> BBox {
        BBox {
            x0: self.x0.saturating_sub(margin),
            y0: self.y0.saturating_sub(margin),
            x1: (self.x1 + margin).min(width - 1),
            y1: (self.y1 + margin).min(height - 1),
        }
    }
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![0; width * height],
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(u8::from(f(x, y)));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Values must be exactly 0 or 1.
    pub fn from_vec(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_len(width, height, 1, data.len())?;
        if data.iter().any(|&v| v > 1) {
            return Err(invalid("binary mask values must be 0 or 1"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = u8::from(v);
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn bbox(&self) -> Option<BBox> {
        let mut bb: Option<BBox> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    let b = bb.get_or_insert(BBox { x0: x, y0: y, x1: x, y1: y });
                    b.x0 = b.x0.min(x);
                    b.x1 = b.x1.max(x);
                    b.y0 = b.y0.min(y);
                    b.y1 = b.y1.max(y);
                }
            }
        }
        bb
    }

    /// Mean (x, y) of set pixels.
    pub fn centroid(&self) -> Option<[f64; 2]> {
        let (mut sx, mut sy, mut n) = (0f64, 0f64, 0usize);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    sx += x as f64;
                    sy += y as f64;
                    n += 1;
                }
            }
        }
        (n > 0).then(|| [sx / n as f64, sy / n as f64])
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with("and", other, |a, b| a & b)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with("or", other, |a, b| a | b)
    }

    /// `self ∧ ¬other`.
    pub fn and_not(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with("and_not", other, |a, b| a & (1 - b))
    }

    pub fn not(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| 1 - v).collect(),
        }
    }

    /// Whether every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.data.iter().zip(&other.data).all(|(&a, &b)| a <= b)
    }

    pub fn to_soft(&self) -> SoftMask {
        SoftMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f32::from(v)).collect(),
        }
    }

    fn zip_with(
        &self,
        op: &'static str,
        other: &BinaryMask,
        f: impl Fn(u8, u8) -> u8,
    ) -> Result<BinaryMask> {
        ensure_same_dims(op, self.dims(), other.dims())?;
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }
}

pub(crate) fn ensure_same_dims(
    op: &'static str,
    left: (usize, usize),
    right: (usize, usize),
) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { op, left, right });
    }
    Ok(())
}

/// Copies a rectangular window out of a raster.
pub fn crop<R: Raster>(img: &R, bb: BBox) -> Result<R> {
    let c = R::CHANNELS;
    let w = img.width();
    if bb.x1 >= w || bb.y1 >= img.height() || bb.x0 > bb.x1 || bb.y0 > bb.y1 {
        return Err(invalid(format!("crop window {bb:?} outside {:?}", img.dims())));
    }
    let src = img.samples();
    let mut out = Vec::with_capacity(bb.width() * bb.height() * c);
    for y in bb.y0..=bb.y1 {
        let start = (y * w + bb.x0) * c;
        out.extend_from_slice(&src[start..start + bb.width() * c]);
    }
    R::from_samples(bb.width(), bb.height(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_dims_and_bad_lengths() {
        assert!(ImageBuffer::new(0, 3).is_err());
        assert!(ImageBuffer::from_vec(2, 2, vec![0.0; 11]).is_err());
        assert!(ImageBuffer::from_vec(1, 1, vec![f32::NAN, 0.0, 0.0]).is_err());
        assert!(SoftMask::from_vec(1, 1, vec![1.5]).is_err());
        assert!(BinaryMask::from_vec(1, 1, vec![2]).is_err());
    }

    #[test]
    fn mask_algebra() {
        let a = BinaryMask::from_vec(2, 2, vec![1, 1, 0, 0]).unwrap();
        let b = BinaryMask::from_vec(2, 2, vec![1, 0, 1, 0]).unwrap();
        assert_eq!(a.and(&b).unwrap().data(), &[1, 0, 0, 0]);
        assert_eq!(a.or(&b).unwrap().data(), &[1, 1, 1, 0]);
        assert_eq!(a.and_not(&b).unwrap().data(), &[0, 1, 0, 0]);
        assert!(a.and(&b).unwrap().is_subset_of(&a));
        assert_eq!(a.bbox(), Some(BBox { x0: 0, y0: 0, x1: 1, y1: 0 }));
        assert_eq!(a.centroid(), Some([0.5, 0.0]));
    }

    #[test]
    fn crop_copies_window() {
        let img = SoftMask::from_fn(4, 3, |x, y| (x + 4 * y) as f32 / 11.0).unwrap();
        let c = crop(&img, BBox { x0: 1, y0: 1, x1: 2, y1: 2 }).unwrap();
        assert_eq!(c.dims(), (2, 2));
        assert_eq!(c.get(0, 0), img.get(1, 1));
        assert_eq!(c.get(1, 1), img.get(2, 2));
    }
}
