use rand::Rng;

use super::augment::normalize;
use super::{FaceSample, Occluder};
use crate::error::{invalid, Result, Violation};
use crate::imgcore::{rotate_vector, warp, AffineParams, ImageBuffer, Interp, SoftMask};
use crate::rng::uniform;

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementConfig {
    /// Per-side expansion of the face bbox, as a fraction of its size.
    pub expand: f64,
    pub min_overlap_fraction: f64,
    pub max_attempts: usize,
}

impl Default for PlacementConfig {
    fn default() -> Self {
        super::NatOccConfig::default().placement()
    }
}

impl PlacementConfig {
    pub(crate) fn check(&self, prefix: &str, v: &mut Vec<Violation>) {
        if !(self.expand >= 0.0 && self.expand.is_finite()) {
            v.push(Violation::new(format!("{prefix}placement_expand"), "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.min_overlap_fraction) {
            v.push(Violation::new(format!("{prefix}min_overlap_fraction"), "must lie in [0, 1]"));
        }
        if self.max_attempts == 0 {
            v.push(Violation::new(format!("{prefix}max_placement_attempts"), "must be >= 1"));
        }
    }
}

/// Where an occluder canvas lands on the face canvas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    /// Face-canvas coordinates of the occluder canvas origin.
    pub offset: [i64; 2],
    /// Sampled center of the occluder canvas.
    pub center: [f64; 2],
    /// Hard occluder pixels landing on face pixels.
    pub overlap: usize,
    /// Hard occluder pixels on the face canvas.
    pub support: usize,
    /// Whether the overlap test passed (false means best effort).
    pub accepted: bool,
}

/// Clockwise-positive angle of a vector, in degrees.
fn angle_deg(v: [f64; 2]) -> f64 {
    v[1].atan2(v[0]).to_degrees()
}

fn wrap_deg(a: f64) -> f64 {
    let mut a = a % 360.0;
    if a > 180.0 {
        a -= 360.0;
    } else if a <= -180.0 {
        a += 360.0;
    }
    a
}

/// Rotation (degrees, clockwise in image coordinates) that makes the fingers
/// point from `placement_center` at `face_centroid`, plus uniform jitter.
pub fn orient_hand<R: Rng + ?Sized>(
    finger_direction: [f64; 2],
    placement_center: [f64; 2],
    face_centroid: [f64; 2],
    jitter: f64,
    rng: &mut R,
) -> f64 {
    let to_face = [face_centroid[0] - placement_center[0], face_centroid[1] - placement_center[1]];
    let base = if to_face == [0.0, 0.0] {
        0.0
    } else {
        angle_deg(to_face) - angle_deg(finger_direction)
    };
    wrap_deg(base + uniform(rng, -jitter, jitter))
}

/// Rotates an occluder about its center on a canvas grown to its diagonal so
/// no corner is clipped.
pub fn rotate_occluder(occ: &Occluder, degrees: f64) -> Result<Occluder> {
    let (w, h) = occ.image.dims();
    let side = ((w as f64).hypot(h as f64).ceil() as usize).max(w.max(h));
    let (px, py) = ((side - w) / 2, (side - h) / 2);
    let mut image = ImageBuffer::new(side, side)?;
    let mut mask = SoftMask::new(side, side)?;
    for y in 0..h {
        for x in 0..w {
            image.set_pixel(x + px, y + py, occ.image.pixel(x, y));
            mask.set(x + px, y + py, occ.mask.get(x, y));
        }
    }
    let p = AffineParams::rotation(degrees);
    Ok(Occluder {
        id: occ.id.clone(),
        image: warp(&image, &p, Interp::Bilinear)?,
        mask: warp(&mask, &p, Interp::Bilinear)?,
        category: occ.category,
        finger_direction: occ.finger_direction.map(|d| normalize(rotate_vector(d, degrees))),
    })
}

struct Region {
    lo: [f64; 2],
    hi: [f64; 2],
}

fn center_region(face: &FaceSample, expand: f64) -> Result<Region> {
    let bb = face
        .face_mask
        .bbox()
        .ok_or_else(|| invalid(format!("face {} has an empty mask", face.id)))?;
    let (ex, ey) = (expand * bb.width() as f64, expand * bb.height() as f64);
    Ok(Region {
        lo: [bb.x0 as f64 - ex, bb.y0 as f64 - ey],
        hi: [bb.x1 as f64 + ex, bb.y1 as f64 + ey],
    })
}

fn hard_points(occ: &Occluder) -> Vec<(usize, usize)> {
    let (w, h) = occ.mask.dims();
    let mut pts = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if occ.mask.get(x, y) >= 0.5 {
                pts.push((x, y));
            }
        }
    }
    pts
}

fn offset_for(center: [f64; 2], occ_dims: (usize, usize)) -> [i64; 2] {
    [
        (center[0] - occ_dims.0 as f64 / 2.0).round() as i64,
        (center[1] - occ_dims.1 as f64 / 2.0).round() as i64,
    ]
}

/// Hard occluder pixels that land on face pixels at `offset`.
/// `(hard pixels on face pixels, hard pixels on the face canvas)` at `offset`.
pub(crate) fn overlap_at(face: &FaceSample, pts: &[(usize, usize)], offset: [i64; 2]) -> (usize, usize) {
    let (fw, fh) = face.face_mask.dims();
    let mut overlap = 0;
    let mut visible = 0;
    for &(x, y) in pts {
        let (fx, fy) = (x as i64 + offset[0], y as i64 + offset[1]);
        if fx >= 0 && fy >= 0 && fx < fw as i64 && fy < fh as i64 {
            visible += 1;
            overlap += usize::from(face.face_mask.get(fx as usize, fy as usize));
        }
    }
    (overlap, visible)
}

fn passes(cfg: &PlacementConfig, overlap: usize, support: usize) -> bool {
    overlap as f64 >= cfg.min_overlap_fraction * support as f64
}

/// Samples the occluder center uniformly in the expanded face bbox until the
/// overlap test passes; after `max_attempts` keeps the best candidate.
pub fn place_occluder<R: Rng + ?Sized>(
    face: &FaceSample,
    occ: &Occluder,
    cfg: &PlacementConfig,
    rng: &mut R,
) -> Result<Placement> {
    let region = center_region(face, cfg.expand)?;
    let pts = hard_points(occ);
    let mut best: Option<Placement> = None;
    for _ in 0..cfg.max_attempts.max(1) {
        let center = [uniform(rng, region.lo[0], region.hi[0]), uniform(rng, region.lo[1], region.hi[1])];
        let offset = offset_for(center, occ.image.dims());
        let (overlap, support) = overlap_at(face, &pts, offset);
        let accepted = support > 0 && passes(cfg, overlap, support);
        let cand = Placement { offset, center, overlap, support, accepted };
        if accepted {
            return Ok(cand);
        }
        if best.is_none_or(|b| overlap > b.overlap) {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one attempt"))
}

/// Placement for hands: each candidate center re-orients the hand so its
/// fingers point at the face centroid, then runs the overlap test.
///
/// Returns the oriented occluder, its placement and the applied rotation.
pub fn place_hand<R: Rng + ?Sized>(
    face: &FaceSample,
    occ: &Occluder,
    cfg: &PlacementConfig,
    jitter: f64,
    rng: &mut R,
) -> Result<(Occluder, Placement, f64)> {
    let fingers = occ
        .finger_direction
        .ok_or_else(|| invalid(format!("hand occluder {} has no finger direction", occ.id)))?;
    let region = center_region(face, cfg.expand)?;
    let centroid = face.face_mask.centroid().expect("non-empty face mask");
    let mut best: Option<(Occluder, Placement, f64)> = None;
    for _ in 0..cfg.max_attempts.max(1) {
        let center = [uniform(rng, region.lo[0], region.hi[0]), uniform(rng, region.lo[1], region.hi[1])];
        let theta = orient_hand(fingers, center, centroid, jitter, rng);
        let rotated = rotate_occluder(occ, theta)?;
        let pts = hard_points(&rotated);
        let offset = offset_for(center, rotated.image.dims());
        let (overlap, support) = overlap_at(face, &pts, offset);
        let accepted = support > 0 && passes(cfg, overlap, support);
        let cand = Placement { offset, center, overlap, support, accepted };
        if accepted {
            return Ok((rotated, cand, theta));
        }
        if best.as_ref().is_none_or(|b| overlap > b.1.overlap) {
            best = Some((rotated, cand, theta));
        }
    }
    Ok(best.expect("at least one attempt"))
}
