//! Pure imaging primitives shared by every pipeline.

mod blend;
mod blur;
mod buffer;
mod codec;
mod geometry;
pub mod io;
mod morphology;
mod photometric;

pub use blend::alpha_blend;
pub use blur::{gaussian_blur, gaussian_kernel, kernel_radius, MIN_SIGMA};
pub use buffer::{crop, BBox, BinaryMask, ImageBuffer, Raster, SoftMask};
pub(crate) use buffer::ensure_same_dims;
pub use codec::lossy_recompress;
pub use geometry::{affine_transform, resize, resize_binary, rotate_vector, warp, AffineParams, Interp};
pub use morphology::{morphology, MorphOp};
pub use photometric::photometric_adjust;
