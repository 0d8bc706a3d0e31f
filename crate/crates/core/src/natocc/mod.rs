//! Naturalistic occlusion: real occluder cut-outs augmented, oriented,
//! placed around the face and blended with feathered edges.

mod augment;
mod compose;
mod pipeline;
mod placement;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, Violation};
use crate::imgcore::{BinaryMask, ImageBuffer, SoftMask};
use crate::sot::SotParams;

pub use augment::{augment_occluder, AugmentConfig, AugmentDraws};
pub use compose::{compose, BlendConfig, Composite};
pub use pipeline::{
    generate_natocc_sample, select_occluder, synthesize_natocc, HandColorTransfer, PlacedOccluder, Provenance,
    Synthesis,
};
pub use placement::{orient_hand, place_hand, place_occluder, rotate_occluder, Placement, PlacementConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Hand,
    Object,
    Synthetic,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Hand => "hand",
            Category::Object => "object",
            Category::Synthetic => "synthetic",
        }
    }
}

/// Canonical finger direction for hand cut-outs: pointing up the canvas.
pub const FINGERS_UP: [f64; 2] = [0.0, -1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Occluder {
    pub id: String,
    pub image: ImageBuffer,
    /// Support of the occluder on its canvas.
    pub mask: SoftMask,
    pub category: Category,
    /// Unit vector in canvas coordinates; present exactly for hands.
    pub finger_direction: Option<[f64; 2]>,
}

impl Occluder {
    pub fn new(
        id: impl Into<String>,
        image: ImageBuffer,
        mask: SoftMask,
        category: Category,
        finger_direction: Option<[f64; 2]>,
    ) -> Result<Self> {
        let occ = Self {
            id: id.into(),
            image,
            mask,
            category,
            finger_direction,
        };
        occ.validate()?;
        Ok(occ)
    }

    pub fn validate(&self) -> Result<()> {
        crate::imgcore::ensure_same_dims("occluder", self.image.dims(), self.mask.dims())?;
        match (self.category, self.finger_direction) {
            (Category::Hand, Some([dx, dy])) => {
                if ((dx * dx + dy * dy).sqrt() - 1.0).abs() > 1e-6 {
                    return Err(invalid(format!("occluder {}: finger direction must be unit length", self.id)));
                }
            }
            (Category::Hand, None) => {
                return Err(invalid(format!("hand occluder {} needs a finger direction", self.id)));
            }
            (_, Some(_)) => {
                return Err(invalid(format!("non-hand occluder {} has a finger direction", self.id)));
            }
            _ => {}
        }
        if !self.has_support() {
            return Err(invalid(format!("occluder {} has an empty mask", self.id)));
        }
        Ok(())
    }

    pub fn has_support(&self) -> bool {
        self.mask.data().iter().any(|&v| v >= 0.5)
    }

    pub fn hard_mask(&self) -> BinaryMask {
        self.mask.to_binary()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceSample {
    pub id: String,
    pub image: ImageBuffer,
    /// 1 = face skin (eyes, nose, mouth included; ears excluded).
    pub face_mask: BinaryMask,
}

impl FaceSample {
    pub fn new(id: impl Into<String>, image: ImageBuffer, face_mask: BinaryMask) -> Result<Self> {
        let id = id.into();
        crate::imgcore::ensure_same_dims("face sample", image.dims(), face_mask.dims())?;
        if face_mask.is_empty() {
            return Err(invalid(format!("face {id} has an empty face mask")));
        }
        Ok(Self { id, image, face_mask })
    }
}

/// Composited image plus its label and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSample {
    pub image: ImageBuffer,
    /// 1 = visible face, 0 = background or occlusion.
    pub gt_mask: BinaryMask,
    pub record: crate::dataset::ManifestRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorTransfer {
    None,
    Sot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NatOccConfig {
    /// Occluder longer side as a fraction of the face longer side.
    pub scale_range: [f64; 2],
    pub mask_feather_sigma: f32,
    pub intersection_band_radius: usize,
    pub intersection_blur_sigma: f32,
    /// Hands get `±hand_rotation_jitter` degrees on top of finger alignment.
    pub hand_rotation_jitter: f64,
    /// Max |rotation| in degrees.
    pub rotation_range: f64,
    /// Max |shear| in degrees.
    pub shear_range: f64,
    pub contrast_range: [f32; 2],
    pub brightness_range: [f32; 2],
    pub compression: bool,
    pub compression_quality_range: [u8; 2],
    /// Fraction of the face bbox added per side when sampling occluder centers.
    pub placement_expand: f64,
    pub min_overlap_fraction: f64,
    pub max_placement_attempts: usize,
    pub color_transfer: ColorTransfer,
    pub occluders_per_sample: usize,
    /// Relative weight per category name; empty means uniform over the pool.
    pub category_weights: std::collections::BTreeMap<String, f64>,
    pub sot: SotParams,
}

impl Default for NatOccConfig {
    fn default() -> Self {
        Self {
            scale_range: [0.5, 1.0],
            mask_feather_sigma: 2.0,
            intersection_band_radius: 3,
            intersection_blur_sigma: 1.5,
            hand_rotation_jitter: 15.0,
            rotation_range: 25.0,
            shear_range: 8.0,
            contrast_range: [0.8, 1.2],
            brightness_range: [-0.2, 0.2],
            compression: true,
            compression_quality_range: [50, 95],
            placement_expand: 0.25,
            min_overlap_fraction: 0.10,
            max_placement_attempts: 20,
            color_transfer: ColorTransfer::Sot,
            occluders_per_sample: 1,
            category_weights: Default::default(),
            sot: SotParams::default(),
        }
    }
}

impl NatOccConfig {
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
        self.augment().check(prefix, &mut v);
        self.placement().check(prefix, &mut v);
        self.blend().check(prefix, &mut v);
        if !(self.hand_rotation_jitter >= 0.0 && self.hand_rotation_jitter <= 180.0) {
            v.push(Violation::new(format!("{prefix}hand_rotation_jitter"), "must lie in [0, 180]"));
        }
        if self.occluders_per_sample == 0 {
            v.push(Violation::new(format!("{prefix}occluders_per_sample"), "must be >= 1"));
        }
        for (name, w) in &self.category_weights {
            if !matches!(name.as_str(), "hand" | "object" | "synthetic") {
                v.push(Violation::new(format!("{prefix}category_weights.{name}"), "unknown category"));
            }
            if !(*w >= 0.0 && w.is_finite()) {
                v.push(Violation::new(format!("{prefix}category_weights.{name}"), "weight must be >= 0"));
            }
        }
        if !self.category_weights.is_empty() && self.category_weights.values().sum::<f64>() <= 0.0 {
            v.push(Violation::new(format!("{prefix}category_weights"), "weights must have a positive sum"));
        }
        v.extend(self.sot.violations(&format!("{prefix}sot.")));
        v
    }
}

pub(crate) fn check_range(v: &mut Vec<Violation>, path: String, r: [f64; 2], lo: f64, hi: f64, lo_open: bool) {
    let lo_ok = if lo_open { r[0] > lo } else { r[0] >= lo };
    if !(lo_ok && r[0] <= r[1] && r[1] <= hi) {
        let open = if lo_open { "(" } else { "[" };
        v.push(Violation::new(
            path,
            format!("range [{}, {}] must be ordered and within {open}{lo}, {hi}]", r[0], r[1]),
        ));
    }
}
