//! Geometric resampling: affine warps about the canvas center and resizing.
//!
//! Pixel `(x, y)` is sampled at its integer coordinate; image y points down,
//! so a positive rotation turns content clockwise on screen.

use serde::{Deserialize, Serialize};

use super::buffer::{BinaryMask, ImageBuffer, Raster, SoftMask};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interp {
    Nearest,
    Bilinear,
}

/// Rotation and shear in degrees, translation in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineParams {
    pub rotation: f64,
    pub scale_x: f64,
    pub scale_y: f64,
    pub shear: f64,
    pub translate_x: f64,
    pub translate_y: f64,
}

impl Default for AffineParams {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineParams {
    pub fn identity() -> Self {
        Self {
            rotation: 0.0,
            scale_x: 1.0,
            scale_y: 1.0,
            shear: 0.0,
            translate_x: 0.0,
            translate_y: 0.0,
        }
    }

    pub fn rotation(degrees: f64) -> Self {
        Self {
            rotation: degrees,
            ..Self::identity()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale_x > 0.0 && self.scale_y > 0.0) {
            return Err(invalid(format!(
                "affine scale must be positive, got ({}, {})",
                self.scale_x, self.scale_y
            )));
        }
        let all = [self.rotation, self.shear, self.translate_x, self.translate_y];
        if all.iter().any(|v| !v.is_finite()) || self.shear.abs() >= 89.0 {
            return Err(invalid("affine parameters must be finite with |shear| < 89°"));
        }
        Ok(())
    }

    /// Linear part `R(rotation) · Shear_x(shear) · diag(scale_x, scale_y)`, row-major.
    pub fn linear(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.rotation.to_radians().sin_cos();
        let k = self.shear.to_radians().tan();
        // R · Sh
        let rs = [[c, c * k - s], [s, s * k + c]];
        [
            [rs[0][0] * self.scale_x, rs[0][1] * self.scale_y],
            [rs[1][0] * self.scale_x, rs[1][1] * self.scale_y],
        ]
    }

    /// Maps an output pixel back to its source location on a `w`×`h` canvas.
    pub fn inverse_mapper(&self, w: usize, h: usize) -> impl Fn(f64, f64) -> (f64, f64) {
        let m = self.linear();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let inv = [
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ];
        let cx = (w as f64 - 1.0) / 2.0;
        let cy = (h as f64 - 1.0) / 2.0;
        let (tx, ty) = (self.translate_x, self.translate_y);
        move |x, y| {
            let dx = x - cx - tx;
            let dy = y - cy - ty;
            (
                inv[0][0] * dx + inv[0][1] * dy + cx,
                inv[1][0] * dx + inv[1][1] * dy + cy,
            )
        }
    }
}

/// Rotates a 2-vector by `degrees` with the same convention as the warp.
pub fn rotate_vector(v: [f64; 2], degrees: f64) -> [f64; 2] {
    let (s, c) = degrees.to_radians().sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

/// Zero-outside sampling of channel `ch`.
#[inline]
fn fetch(src: &[f32], w: usize, h: usize, c: usize, x: i64, y: i64, ch: usize) -> f32 {
    if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
        0.0
    } else {
        src[(y as usize * w + x as usize) * c + ch]
    }
}

fn sample_into<R: Raster>(img: &R, x: f64, y: f64, interp: Interp, out: &mut [f32]) {
    let (w, h) = img.dims();
    let c = R::CHANNELS;
    let src = img.samples();
    match interp {
        Interp::Nearest => {
            let xi = (x + 0.5).floor() as i64;
            let yi = (y + 0.5).floor() as i64;
            for (ch, o) in out.iter_mut().enumerate() {
                *o = fetch(src, w, h, c, xi, yi, ch);
            }
        }
        Interp::Bilinear => {
            let x0 = x.floor();
            let y0 = y.floor();
            let fx = (x - x0) as f32;
            let fy = (y - y0) as f32;
            let (x0, y0) = (x0 as i64, y0 as i64);
            for (ch, o) in out.iter_mut().enumerate() {
                let a = fetch(src, w, h, c, x0, y0, ch);
                let b = fetch(src, w, h, c, x0 + 1, y0, ch);
                let cc = fetch(src, w, h, c, x0, y0 + 1, ch);
                let d = fetch(src, w, h, c, x0 + 1, y0 + 1, ch);
                let top = a + (b - a) * fx;
                let bottom = cc + (d - cc) * fx;
                *o = top + (bottom - top) * fy;
            }
        }
    }
}

/// Inverse-mapped warp of a single raster; samples falling outside are zero.
pub fn warp<R: Raster>(img: &R, params: &AffineParams, interp: Interp) -> Result<R> {
    params.validate()?;
    let (w, h) = img.dims();
    let c = R::CHANNELS;
    let map = params.inverse_mapper(w, h);
    let mut out = vec![0f32; w * h * c];
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = map(x as f64, y as f64);
            let i = (y * w + x) * c;
            sample_into(img, sx, sy, interp, &mut out[i..i + c]);
        }
    }
    R::from_samples(w, h, out)
}

/// Warps an image (always bilinear) and its mask (`mask_interp`) by the same transform.
pub fn affine_transform(
    img: &ImageBuffer,
    mask: &SoftMask,
    params: &AffineParams,
    mask_interp: Interp,
) -> Result<(ImageBuffer, SoftMask)> {
    super::buffer::ensure_same_dims("affine_transform", img.dims(), mask.dims())?;
    Ok((
        warp(img, params, Interp::Bilinear)?,
        warp(mask, params, mask_interp)?,
    ))
}

/// Resamples to `new_w`×`new_h` with pixel-center alignment and clamped borders.
pub fn resize<R: Raster>(img: &R, new_w: usize, new_h: usize, interp: Interp) -> Result<R> {
    if new_w == 0 || new_h == 0 {
        return Err(invalid(format!("resize target must be >= 1x1, got {new_w}x{new_h}")));
    }
    let (w, h) = img.dims();
    let c = R::CHANNELS;
    let src = img.samples();
    let sx = w as f64 / new_w as f64;
    let sy = h as f64 / new_h as f64;
    let mut out = Vec::with_capacity(new_w * new_h * c);
    match interp {
        Interp::Nearest => {
            for y in 0..new_h {
                let yi = nearest_index(y, sy, h);
                for x in 0..new_w {
                    let xi = nearest_index(x, sx, w);
                    let i = (yi * w + xi) * c;
                    out.extend_from_slice(&src[i..i + c]);
                }
            }
        }
        Interp::Bilinear => {
            let xs: Vec<(usize, usize, f32)> = (0..new_w).map(|x| linear_taps(x, sx, w)).collect();
            for y in 0..new_h {
                let (y0, y1, fy) = linear_taps(y, sy, h);
                for &(x0, x1, fx) in &xs {
                    for ch in 0..c {
                        let a = src[(y0 * w + x0) * c + ch];
                        let b = src[(y0 * w + x1) * c + ch];
                        let cc = src[(y1 * w + x0) * c + ch];
                        let d = src[(y1 * w + x1) * c + ch];
                        let top = a + (b - a) * fx;
                        let bottom = cc + (d - cc) * fx;
                        out.push(top + (bottom - top) * fy);
                    }
                }
            }
        }
    }
    R::from_samples(new_w, new_h, out)
}

fn nearest_index(dst: usize, scale: f64, len: usize) -> usize {
    (((dst as f64 + 0.5) * scale).floor() as usize).min(len - 1)
}

fn linear_taps(dst: usize, scale: f64, len: usize) -> (usize, usize, f32) {
    let s = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
    let i0 = s.floor() as usize;
    let i1 = (i0 + 1).min(len - 1);
    (i0, i1, (s - i0 as f64) as f32)
}

/// Nearest-neighbour resize of a label mask; output stays binary.
pub fn resize_binary(mask: &BinaryMask, new_w: usize, new_h: usize) -> Result<BinaryMask> {
    if new_w == 0 || new_h == 0 {
        return Err(invalid(format!("resize target must be >= 1x1, got {new_w}x{new_h}")));
    }
    let (w, h) = mask.dims();
    let sx = w as f64 / new_w as f64;
    let sy = h as f64 / new_h as f64;
    BinaryMask::from_fn(new_w, new_h, |x, y| {
        mask.get(nearest_index(x, sx, w), nearest_index(y, sy, h))
    })
}
