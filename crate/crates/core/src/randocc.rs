//! Random occlusion: smoothed random polygons filled with a texture crop,
//! optionally translucent, composited with the shared augmentation,
//! placement and blending chain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result, Violation};
use crate::imgcore::{resize, BBox, BinaryMask, ImageBuffer, Interp, SoftMask};
use crate::natocc::{
    augment_occluder, check_range, compose, place_occluder, AugmentConfig, BlendConfig, Category, FaceSample,
    Occluder, PlacedOccluder, PlacementConfig, Provenance, Synthesis,
};
use crate::rng::{uniform, uniform_int};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandOccConfig {
    pub transparency_prob: f64,
    pub alpha_range: [f64; 2],
    pub shape_vertex_count_range: [usize; 2],
    /// 0 gives a regular polygon.
    pub shape_irregularity: f64,
    pub smoothing_iterations: usize,
    /// Base vertex radius as a fraction of the shorter canvas side.
    pub radius_range: [f64; 2],
    pub scale_range: [f64; 2],
    pub rotation_range: f64,
    pub shear_range: f64,
    pub contrast_range: [f32; 2],
    pub brightness_range: [f32; 2],
    pub compression: bool,
    pub compression_quality_range: [u8; 2],
    pub mask_feather_sigma: f32,
    pub intersection_band_radius: usize,
    pub intersection_blur_sigma: f32,
    pub placement_expand: f64,
    pub min_overlap_fraction: f64,
    pub max_placement_attempts: usize,
}

impl Default for RandOccConfig {
    fn default() -> Self {
        let n = crate::natocc::NatOccConfig::default();
        Self {
            transparency_prob: 0.30,
            alpha_range: [0.5, 0.8],
            shape_vertex_count_range: [6, 14],
            shape_irregularity: 0.4,
            smoothing_iterations: 3,
            radius_range: [0.25, 0.45],
            scale_range: n.scale_range,
            rotation_range: n.rotation_range,
            shear_range: n.shear_range,
            contrast_range: n.contrast_range,
            brightness_range: n.brightness_range,
            compression: n.compression,
            compression_quality_range: n.compression_quality_range,
            mask_feather_sigma: n.mask_feather_sigma,
            intersection_band_radius: n.intersection_band_radius,
            intersection_blur_sigma: n.intersection_blur_sigma,
            placement_expand: n.placement_expand,
            min_overlap_fraction: n.min_overlap_fraction,
            max_placement_attempts: n.max_placement_attempts,
        }
    }
}

impl RandOccConfig {
    pub fn augment(&self) -> AugmentConfig {
        AugmentConfig {
            scale_range: self.scale_range,
            rotation_range: self.rotation_range,
            shear_range: self.shear_range,
            contrast_range: self.contrast_range,
            brightness_range: self.brightness_range,
            compression_quality_range: self.compression.then_some(self.compression_quality_range),
        }
    }

    pub fn placement(&self) -> PlacementConfig {
        PlacementConfig {
            expand: self.placement_expand,
            min_overlap_fraction: self.min_overlap_fraction,
            max_attempts: self.max_placement_attempts,
        }
    }

    pub fn blend(&self) -> BlendConfig {
        BlendConfig {
            mask_feather_sigma: self.mask_feather_sigma,
            intersection_band_radius: self.intersection_band_radius,
            intersection_blur_sigma: self.intersection_blur_sigma,
        }
    }

    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(0.0..=1.0).contains(&self.transparency_prob) {
            v.push(Violation::new(format!("{prefix}transparency_prob"), "must lie in [0, 1]"));
        }
        let [a0, a1] = self.alpha_range;
        if !(a0 > 0.0 && a0 <= a1 && a1 < 1.0) {
            v.push(Violation::new(
                format!("{prefix}alpha_range"),
                format!("range [{a0}, {a1}] must be ordered and within (0, 1)"),
            ));
        }
        let [k0, k1] = self.shape_vertex_count_range;
        if !(k0 >= 3 && k0 <= k1) {
            v.push(Violation::new(
                format!("{prefix}shape_vertex_count_range"),
                format!("range [{k0}, {k1}] must be ordered with counts >= 3"),
            ));
        }
        if !(0.0..=1.0).contains(&self.shape_irregularity) {
            v.push(Violation::new(format!("{prefix}shape_irregularity"), "must lie in [0, 1]"));
        }
        check_range(&mut v, format!("{prefix}radius_range"), self.radius_range, 0.0, 0.5, true);
        self.augment().check(prefix, &mut v);
        self.placement().check(prefix, &mut v);
        self.blend().check(prefix, &mut v);
        v
    }
}

/// Texture image with the id recorded in provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Texture {
    pub id: String,
    pub image: ImageBuffer,
}

/// Texture window used by [`texture_fill`], in texture pixels (may wrap).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropWindow {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

const MAX_SHAPE_ATTEMPTS: usize = 10;
const MIN_CANVAS: usize = 16;

/// Random star-shaped polygon around the canvas center, smoothed and filled.
pub fn random_shape<R: Rng + ?Sized>(width: usize, height: usize, cfg: &RandOccConfig, rng: &mut R) -> Result<BinaryMask> {
    if width < MIN_CANVAS || height < MIN_CANVAS {
        return Err(invalid(format!("shape canvas {width}x{height} is below {MIN_CANVAS}x{MIN_CANVAS}")));
    }
    let total = (width * height) as f64;
    for _ in 0..MAX_SHAPE_ATTEMPTS {
        let poly = smooth(polar_polygon(width, height, cfg, rng), cfg.smoothing_iterations);
        let mask = fill_polygon(&poly, width, height)?;
        let area = mask.count_ones() as f64 / total;
        if (0.10..=0.90).contains(&area) && component_count(&mask) == 1 {
            return Ok(mask);
        }
        log::trace!("discarding shape with area fraction {area:.3}");
    }
    Err(Error::Degenerate(format!("no valid shape after {MAX_SHAPE_ATTEMPTS} attempts")))
}

fn polar_polygon<R: Rng + ?Sized>(width: usize, height: usize, cfg: &RandOccConfig, rng: &mut R) -> Vec<[f64; 2]> {
    let [k0, k1] = cfg.shape_vertex_count_range;
    let k = uniform_int(rng, k0 as u64, k1 as u64) as usize;
    let side = width.min(height) as f64;
    let base = uniform(rng, cfg.radius_range[0], cfg.radius_range[1]) * side;
    let phase = uniform(rng, 0.0, std::f64::consts::TAU);
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    let irr = cfg.shape_irregularity;
    let step = std::f64::consts::TAU / k as f64;
    let mut verts: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let angle = phase + step * (i as f64 + irr * uniform(rng, -0.5, 0.5));
            let r = (base * (1.0 + irr * uniform(rng, -1.0, 1.0))).clamp(1.0, side / 2.0);
            (angle, r)
        })
        .collect();
    verts.sort_by(|a, b| a.0.total_cmp(&b.0));
    verts.into_iter().map(|(a, r)| [cx + r * a.cos(), cy + r * a.sin()]).collect()
}

/// Chaikin corner cutting on a closed polygon.
fn smooth(mut poly: Vec<[f64; 2]>, rounds: usize) -> Vec<[f64; 2]> {
    for _ in 0..rounds {
        let n = poly.len();
        let mut next = Vec::with_capacity(2 * n);
        for i in 0..n {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            next.push([0.75 * p[0] + 0.25 * q[0], 0.75 * p[1] + 0.25 * q[1]]);
            next.push([0.25 * p[0] + 0.75 * q[0], 0.25 * p[1] + 0.75 * q[1]]);
        }
        poly = next;
    }
    poly
}

/// Even-odd scanline fill sampled at pixel centers.
fn fill_polygon(poly: &[[f64; 2]], width: usize, height: usize) -> Result<BinaryMask> {
    let mut mask = BinaryMask::new(width, height)?;
    let n = poly.len();
    let mut xs = Vec::new();
    for y in 0..height {
        let sy = y as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if (a[1] <= sy) != (b[1] <= sy) {
                xs.push(a[0] + (sy - a[1]) / (b[1] - a[1]) * (b[0] - a[0]));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            // pixel x is inside when x + 0.5 ∈ [pair[0], pair[1])
            let from = (pair[0] - 0.5).ceil().max(0.0) as usize;
            let to = ((pair[1] - 0.5).ceil().max(0.0) as usize).min(width);
            for x in from..to {
                mask.set(x, y, true);
            }
        }
    }
    Ok(mask)
}

/// 4-connected components of the set pixels.
pub(crate) fn component_count(mask: &BinaryMask) -> usize {
    let (w, h) = mask.dims();
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut count = 0;
    for start in 0..w * h {
        if seen[start] || mask.data()[start] == 0 {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if !seen[j] && mask.data()[j] == 1 {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
    }
    count
}

/// Cuts a window of `width`×`height` from the texture starting at `(x, y)`,
/// wrapping around the texture edges.
pub fn tiled_window(texture: &ImageBuffer, win: CropWindow) -> Result<ImageBuffer> {
    let (tw, th) = texture.dims();
    ImageBuffer::from_fn(win.width, win.height, |x, y| texture.pixel((win.x + x) % tw, (win.y + y) % th))
}

/// Fills the shape with a random texture window stretched over its bbox.
///
/// The occluder canvas is the shape's bounding box; the crop window is
/// returned for provenance.
pub fn texture_fill<R: Rng + ?Sized>(
    id: &str,
    shape: &BinaryMask,
    texture: &ImageBuffer,
    rng: &mut R,
) -> Result<(Occluder, CropWindow, BBox)> {
    let (tw, th) = texture.dims();
    if tw < 32 || th < 32 {
        return Err(invalid(format!("texture {id} is {tw}x{th}; at least 32x32 is required")));
    }
    let bb = shape.bbox().ok_or_else(|| invalid("cannot fill an empty shape"))?;
    let (bw, bh) = (bb.width(), bb.height());
    let frac = uniform(rng, 0.5, 1.0);
    let ww = ((bw as f64 * frac).round() as usize).max(1);
    let wh = ((bh as f64 * frac).round() as usize).max(1);
    let x = uniform_int(rng, 0, tw.saturating_sub(ww) as u64) as usize;
    let y = uniform_int(rng, 0, th.saturating_sub(wh) as u64) as usize;
    let win = CropWindow { x, y, width: ww, height: wh };
    let stretched = resize(&tiled_window(texture, win)?, bw, bh, Interp::Bilinear)?;
    let mask = SoftMask::from_fn(bw, bh, |x, y| f32::from(shape.get(bb.x0 + x, bb.y0 + y)))?;
    let mut image = stretched;
    image.mask_out(&mask)?;
    Ok((Occluder::new(id, image, mask, Category::Synthetic, None)?, win, bb))
}

/// 1.0 (opaque) or, with probability `transparency_prob`, a draw from `alpha_range`.
pub fn assign_transparency<R: Rng + ?Sized>(cfg: &RandOccConfig, rng: &mut R) -> f64 {
    if rng.random::<f64>() < cfg.transparency_prob {
        uniform(rng, cfg.alpha_range[0], cfg.alpha_range[1])
    } else {
        1.0
    }
}

/// Provenance id for a texture crop: `<texture>@x,y,wxh`.
pub fn texture_ref(texture_id: &str, win: CropWindow) -> String {
    format!("{texture_id}@{},{},{}x{}", win.x, win.y, win.width, win.height)
}

/// Random-occlusion sample with a known texture. `alpha_override` replaces
/// the drawn alpha without changing any other draw.
pub fn synthesize_randocc<R: Rng + ?Sized>(
    face: &FaceSample,
    texture: &Texture,
    cfg: &RandOccConfig,
    alpha_override: Option<f64>,
    rng: &mut R,
) -> Result<Synthesis> {
    let drawn = assign_transparency(cfg, rng);
    let alpha = alpha_override.unwrap_or(drawn);
    let (fw, fh) = face.image.dims();
    let shape = random_shape(fw, fh, cfg, rng)?;
    let (occ, win, _) = texture_fill(&texture.id, &shape, &texture.image, rng)?;
    let (aug, draws) = augment_occluder(&occ, (fw, fh), &cfg.augment(), false, rng)?;
    let place = place_occluder(face, &aug, &cfg.placement(), rng)?;
    let c = compose(face, &aug, place.offset, &cfg.blend(), alpha as f32)?;
    Ok(Synthesis {
        image: c.image,
        gt_mask: c.gt_mask,
        occluder_mask: c.occluder_mask,
        provenance: Provenance {
            pipeline: "randocc",
            face_id: face.id.clone(),
            occluder_ids: vec![texture_ref(&texture.id, win)],
            alpha,
            scale: draws.scale,
            placement: place.offset,
        },
        color_transfer: Vec::new(),
        placed: vec![PlacedOccluder { occluder: aug, offset: place.offset }],
    })
}

/// Picks the texture first, then synthesizes from the same stream.
pub fn generate_randocc_sample(face: &FaceSample, pool: &[Texture], cfg: &RandOccConfig, seed: u64) -> Result<Synthesis> {
    generate_randocc_sample_with_alpha(face, pool, cfg, seed, None)
}

/// [`generate_randocc_sample`] with the drawn alpha optionally replaced.
pub fn generate_randocc_sample_with_alpha(
    face: &FaceSample,
    pool: &[Texture],
    cfg: &RandOccConfig,
    seed: u64,
    alpha_override: Option<f64>,
) -> Result<Synthesis> {
    if pool.is_empty() {
        return Err(invalid("texture pool is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = rng.random_range(0..pool.len());
    synthesize_randocc(face, &pool[pick], cfg, alpha_override, &mut rng)
}
