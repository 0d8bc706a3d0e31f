use super::buffer::{ensure_same_dims, ImageBuffer, SoftMask};
use crate::error::Result;

/// `out = alpha * fg + (1 - alpha) * bg`, clamped to `[0, 1]`.
pub fn alpha_blend(fg: &ImageBuffer, bg: &ImageBuffer, alpha: &SoftMask) -> Result<ImageBuffer> {
    ensure_same_dims("alpha_blend", fg.dims(), bg.dims())?;
    ensure_same_dims("alpha_blend", fg.dims(), alpha.dims())?;
    let mut out = bg.clone();
    for ((o, f), &a) in out
        .data_mut()
        .chunks_exact_mut(3)
        .zip(fg.data().chunks_exact(3))
        .zip(alpha.data())
    {
        for c in 0..3 {
            o[c] = (a * f[c] + (1.0 - a) * o[c]).clamp(0.0, 1.0);
        }
    }
    Ok(out)
}
