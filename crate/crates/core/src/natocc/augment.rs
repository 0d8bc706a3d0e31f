use rand::Rng;

use super::{check_range, Occluder};
use crate::error::{Error, Result, Violation};
use crate::imgcore::{lossy_recompress, photometric_adjust, resize, rotate_vector, warp, AffineParams, Interp};
use crate::rng::{uniform, uniform_int};

/// Occluder augmentation ranges shared by both pipelines.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub scale_range: [f64; 2],
    pub rotation_range: f64,
    pub shear_range: f64,
    pub contrast_range: [f32; 2],
    pub brightness_range: [f32; 2],
    /// `None` disables compression.
    pub compression_quality_range: Option<[u8; 2]>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        super::NatOccConfig::default().augment()
    }
}

impl AugmentConfig {
    pub fn identity() -> Self {
        Self {
            scale_range: [1.0, 1.0],
            rotation_range: 0.0,
            shear_range: 0.0,
            contrast_range: [1.0, 1.0],
            brightness_range: [0.0, 0.0],
            compression_quality_range: None,
        }
    }

    pub(crate) fn check(&self, prefix: &str, v: &mut Vec<Violation>) {
        check_range(v, format!("{prefix}scale_range"), self.scale_range, 0.0, 1.0, true);
        if !(0.0..=180.0).contains(&self.rotation_range) {
            v.push(Violation::new(format!("{prefix}rotation_range"), "must lie in [0, 180]"));
        }
        if !(0.0..45.0).contains(&self.shear_range) {
            v.push(Violation::new(format!("{prefix}shear_range"), "must lie in [0, 45)"));
        }
        let c = self.contrast_range.map(f64::from);
        check_range(v, format!("{prefix}contrast_range"), c, 0.0, f64::INFINITY, true);
        let b = self.brightness_range.map(f64::from);
        check_range(v, format!("{prefix}brightness_range"), b, -1.0, 1.0, false);
        if let Some(q) = self.compression_quality_range {
            let q = q.map(f64::from);
            check_range(v, format!("{prefix}compression_quality_range"), q, 1.0, 100.0, false);
        }
    }
}

/// Every random draw made by one augmentation, for provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentDraws {
    pub scale: f64,
    pub rotation: f64,
    pub shear: f64,
    pub contrast: f32,
    pub brightness: f32,
    pub quality: Option<u8>,
}

const MAX_RESAMPLES: usize = 5;

/// Rescales the occluder relative to the face, then warps, adjusts and
/// recompresses it. Geometry is applied to image and mask alike; photometry
/// and compression only to the image.
pub fn augment_occluder<R: Rng + ?Sized>(
    occ: &Occluder,
    face_dims: (usize, usize),
    cfg: &AugmentConfig,
    skip_compression: bool,
    rng: &mut R,
) -> Result<(Occluder, AugmentDraws)> {
    let face_long = face_dims.0.max(face_dims.1) as f64;
    let (ow, oh) = occ.image.dims();
    let occ_long = ow.max(oh) as f64;
    for _ in 0..=MAX_RESAMPLES {
        let scale = uniform(rng, cfg.scale_range[0], cfg.scale_range[1]);
        let rotation = uniform(rng, -cfg.rotation_range, cfg.rotation_range);
        let shear = uniform(rng, -cfg.shear_range, cfg.shear_range);
        let contrast = uniform(rng, cfg.contrast_range[0].into(), cfg.contrast_range[1].into()) as f32;
        let brightness = uniform(rng, cfg.brightness_range[0].into(), cfg.brightness_range[1].into()) as f32;
        let quality = cfg
            .compression_quality_range
            .map(|[lo, hi]| uniform_int(rng, lo.into(), hi.into()) as u8)
            .filter(|_| !skip_compression);

        let long = (scale * face_long).round().max(1.0);
        let nw = ((ow as f64 * long / occ_long).round() as usize).max(1);
        let nh = ((oh as f64 * long / occ_long).round() as usize).max(1);
        let (mut image, mut mask) = if (nw, nh) == (ow, oh) {
            (occ.image.clone(), occ.mask.clone())
        } else {
            (
                resize(&occ.image, nw, nh, Interp::Bilinear)?,
                resize(&occ.mask, nw, nh, Interp::Bilinear)?,
            )
        };
        if rotation != 0.0 || shear != 0.0 {
            let p = AffineParams { rotation, shear, ..AffineParams::identity() };
            image = warp(&image, &p, Interp::Bilinear)?;
            mask = warp(&mask, &p, Interp::Bilinear)?;
        }
        image = photometric_adjust(&image, contrast, brightness)?;
        if let Some(q) = quality {
            image = lossy_recompress(&image, q)?;
        }
        let out = Occluder {
            id: occ.id.clone(),
            image,
            mask,
            category: occ.category,
            finger_direction: occ.finger_direction.map(|d| normalize(rotate_vector(d, rotation))),
        };
        if out.has_support() {
            return Ok((out, AugmentDraws { scale, rotation, shear, contrast, brightness, quality }));
        }
        log::debug!("occluder {} lost its support under augmentation; resampling", occ.id);
    }
    Err(Error::Degenerate(format!(
        "occluder {} has an empty mask after {} augmentation attempts",
        occ.id,
        MAX_RESAMPLES + 1
    )))
}

pub(crate) fn normalize(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}
