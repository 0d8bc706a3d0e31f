//! Synthetic occluded-face segmentation datasets.
//!
//! Two generators composite occluders over face images and emit pixel-exact
//! two-class labels (1 = visible face skin, 0 = background or occlusion):
//!
//! * [`natocc`] pastes real occluder cut-outs (hands, objects) with
//!   augmentation, finger orientation, feathered blending and optional
//!   sliced-optimal-transport color transfer ([`sot`]).
//! * [`randocc`] pastes procedural textured blobs, some of them translucent.
//!
//! [`dataset`] drives either generator deterministically in parallel and
//! writes a manifest; [`evalmetrics`] scores predictions against labels.

pub mod dataset;
pub mod error;
pub mod evalmetrics;
pub mod imgcore;
pub mod natocc;
pub mod randocc;
mod rng;
pub mod sot;

pub use dataset::{derive_seed, GenerationConfig, ManifestRecord, Pipeline, SampleStatus};
pub use error::{Error, Result, Violation};
pub use evalmetrics::ConfusionMatrix;
pub use imgcore::{BinaryMask, ImageBuffer, SoftMask};
pub use natocc::{Category, CompositeSample, FaceSample, NatOccConfig, Occluder};
pub use randocc::RandOccConfig;
pub use sot::{PreprocessReport, SotParams};
