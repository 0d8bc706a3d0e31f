//! Edge-aware compositing of one placed occluder over a face.
//!
//! 1. `M` = occluder support (alpha >= 0.5) pasted on the face canvas.
//! 2. `A` = `M` blurred by `mask_feather_sigma`, times the global opacity.
//! 3. composite = `A·occluder + (1 − A)·face`.
//! 4. Inside the band `(dilate(M) ∧ ¬erode(M)) ∧ dilate(face)` the composite
//!    is replaced by its own blur at `intersection_blur_sigma`.
//! 5. label = `face ∧ ¬M`; feathering and band blur never touch labels.
//!
//! Blurs run on crops around their support. The crops are wide enough that
//! every pixel that is read back equals the full-canvas blur.

use super::{FaceSample, Occluder};
use crate::error::{Result, Violation};
use crate::imgcore::{
    alpha_blend, crop, gaussian_blur, kernel_radius, morphology, BBox, BinaryMask, ImageBuffer, MorphOp,
};

#[derive(Debug, Clone, PartialEq)]
pub struct BlendConfig {
    pub mask_feather_sigma: f32,
    /// 0 disables the intersection blur.
    pub intersection_band_radius: usize,
    pub intersection_blur_sigma: f32,
}

impl Default for BlendConfig {
    fn default() -> Self {
        super::NatOccConfig::default().blend()
    }
}

impl BlendConfig {
    pub(crate) fn check(&self, prefix: &str, v: &mut Vec<Violation>) {
        if !(self.mask_feather_sigma >= 0.0 && self.mask_feather_sigma.is_finite()) {
            v.push(Violation::new(format!("{prefix}mask_feather_sigma"), "must be >= 0"));
        }
        if !(self.intersection_blur_sigma >= 0.0 && self.intersection_blur_sigma.is_finite()) {
            v.push(Violation::new(format!("{prefix}intersection_blur_sigma"), "must be >= 0"));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Composite {
    pub image: ImageBuffer,
    pub gt_mask: BinaryMask,
    /// Hard occluder support on the face canvas.
    pub occluder_mask: BinaryMask,
}

/// Pastes the occluder at `offset`, returning the face-sized foreground and hard mask.
fn paste(face_dims: (usize, usize), occ: &Occluder, offset: [i64; 2]) -> Result<(ImageBuffer, BinaryMask)> {
    let (fw, fh) = face_dims;
    let mut fg = ImageBuffer::new(fw, fh)?;
    let mut m = BinaryMask::new(fw, fh)?;
    let (ow, oh) = occ.image.dims();
    for y in 0..oh {
        let fy = y as i64 + offset[1];
        if fy < 0 || fy >= fh as i64 {
            continue;
        }
        for x in 0..ow {
            let fx = x as i64 + offset[0];
            if fx < 0 || fx >= fw as i64 {
                continue;
            }
            let (fx, fy) = (fx as usize, fy as usize);
            fg.set_pixel(fx, fy, occ.image.pixel(x, y));
            m.set(fx, fy, occ.mask.get(x, y) >= 0.5);
        }
    }
    Ok((fg, m))
}

fn paste_region(dst: &mut ImageBuffer, src: &ImageBuffer, bb: BBox, only: Option<&BinaryMask>) {
    for y in 0..bb.height() {
        for x in 0..bb.width() {
            let (gx, gy) = (bb.x0 + x, bb.y0 + y);
            if only.is_none_or(|m| m.get(gx, gy)) {
                dst.set_pixel(gx, gy, src.pixel(x, y));
            }
        }
    }
}

/// Composites `occ` over `face` with its canvas origin at `offset`.
///
/// `opacity` scales the feathered alpha (1 for opaque occluders).
pub fn compose(
    face: &FaceSample,
    occ: &Occluder,
    offset: [i64; 2],
    cfg: &BlendConfig,
    opacity: f32,
) -> Result<Composite> {
    let dims = face.image.dims();
    let (fw, fh) = dims;
    let (fg, m) = paste(dims, occ, offset)?;
    let gt_mask = face.face_mask.and_not(&m)?;
    let Some(mbox) = m.bbox() else {
        return Ok(Composite { image: face.image.clone(), gt_mask, occluder_mask: m });
    };

    let mut image = face.image.clone();
    let feather = mbox.expanded(kernel_radius(cfg.mask_feather_sigma) + 1, fw, fh);
    let alpha = gaussian_blur(&crop(&m.to_soft(), feather)?, cfg.mask_feather_sigma)?.scaled(opacity);
    let blended = alpha_blend(&crop(&fg, feather)?, &crop(&face.image, feather)?, &alpha)?;
    paste_region(&mut image, &blended, feather, None);

    let r = cfg.intersection_band_radius;
    if r > 0 {
        let outer = morphology(&m, MorphOp::Dilate, r)?;
        let inner = morphology(&m, MorphOp::Erode, r)?;
        let near_face = morphology(&face.face_mask, MorphOp::Dilate, r)?;
        let band = outer.and_not(&inner)?.and(&near_face)?;
        if let Some(bbox) = band.bbox() {
            let region = bbox.expanded(kernel_radius(cfg.intersection_blur_sigma), fw, fh);
            let blurred = gaussian_blur(&crop(&image, region)?, cfg.intersection_blur_sigma)?;
            paste_region(&mut image, &blurred, region, Some(&band));
        }
    }
    Ok(Composite { image, gt_mask, occluder_mask: m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::SoftMask;
    use crate::natocc::Category;

    fn face() -> FaceSample {
        let img = ImageBuffer::from_fn(48, 40, |x, y| [x as f32 / 48.0, y as f32 / 40.0, 0.5]).unwrap();
        let mask = BinaryMask::from_fn(48, 40, |x, y| (8..40).contains(&x) && (6..34).contains(&y)).unwrap();
        FaceSample::new("f", img, mask).unwrap()
    }

    fn occ(w: usize, h: usize, full: bool) -> Occluder {
        let mask = SoftMask::from_fn(w, h, |x, y| f32::from(full || ((x + y) % 7 != 0 && x > 1 && y > 2))).unwrap();
        Occluder::new("o", ImageBuffer::filled(w, h, [0.9, 0.1, 0.1]).unwrap(), mask, Category::Object, None).unwrap()
    }

    /// Reference pipeline on full canvases, written directly from the formula.
    fn naive(face: &FaceSample, o: &Occluder, offset: [i64; 2], cfg: &BlendConfig, opacity: f32) -> Composite {
        let (fw, fh) = face.image.dims();
        let mut fg = ImageBuffer::new(fw, fh).unwrap();
        let mut m = BinaryMask::new(fw, fh).unwrap();
        for y in 0..fh {
            for x in 0..fw {
                let (ox, oy) = (x as i64 - offset[0], y as i64 - offset[1]);
                if ox >= 0 && oy >= 0 && (ox as usize) < o.image.width() && (oy as usize) < o.image.height() {
                    fg.set_pixel(x, y, o.image.pixel(ox as usize, oy as usize));
                    m.set(x, y, o.mask.get(ox as usize, oy as usize) >= 0.5);
                }
            }
        }
        let a = gaussian_blur(&m.to_soft(), cfg.mask_feather_sigma).unwrap().scaled(opacity);
        let mut img = alpha_blend(&fg, &face.image, &a).unwrap();
        let r = cfg.intersection_band_radius;
        let band = morphology(&m, MorphOp::Dilate, r)
            .unwrap()
            .and_not(&morphology(&m, MorphOp::Erode, r).unwrap())
            .unwrap()
            .and(&morphology(&face.face_mask, MorphOp::Dilate, r).unwrap())
            .unwrap();
        let blurred = gaussian_blur(&img, cfg.intersection_blur_sigma).unwrap();
        for y in 0..fh {
            for x in 0..fw {
                if band.get(x, y) {
                    img.set_pixel(x, y, blurred.pixel(x, y));
                }
            }
        }
        let gt = BinaryMask::from_fn(fw, fh, |x, y| face.face_mask.get(x, y) && !m.get(x, y)).unwrap();
        Composite { image: img, gt_mask: gt, occluder_mask: m }
    }

    #[test]
    fn cropped_blurs_match_full_canvas() {
        let f = face();
        let cfg = BlendConfig::default();
        for (offset, opacity) in [([10, 8], 1.0), ([-5, -3], 1.0), ([30, 25], 0.6), ([0, 0], 0.5)] {
            let o = occ(20, 16, false);
            let fast = compose(&f, &o, offset, &cfg, opacity).unwrap();
            let slow = naive(&f, &o, offset, &cfg, opacity);
            assert_eq!(fast, slow, "offset {offset:?}");
        }
    }

    #[test]
    fn empty_overlap_returns_face() {
        let f = face();
        let o = occ(10, 10, true);
        let c = compose(&f, &o, [200, 200], &BlendConfig::default(), 1.0).unwrap();
        assert_eq!(c.image, f.image);
        assert_eq!(c.gt_mask, f.face_mask);
        assert!(c.occluder_mask.is_empty());
    }

    #[test]
    fn full_cover_clears_label() {
        let f = face();
        let o = occ(60, 60, true);
        let c = compose(&f, &o, [-5, -5], &BlendConfig::default(), 1.0).unwrap();
        assert!(c.gt_mask.is_empty());
    }

    #[test]
    fn unchanged_outside_influence_zone() {
        let f = face();
        let o = occ(12, 12, false);
        let cfg = BlendConfig::default();
        let c = compose(&f, &o, [14, 12], &cfg, 1.0).unwrap();
        let reach = kernel_radius(cfg.mask_feather_sigma) + cfg.intersection_band_radius;
        let zone = morphology(&c.occluder_mask, MorphOp::Dilate, reach).unwrap();
        for y in 0..40 {
            for x in 0..48 {
                if !zone.get(x, y) {
                    assert_eq!(c.image.pixel(x, y), f.image.pixel(x, y));
                }
            }
        }
    }
}
