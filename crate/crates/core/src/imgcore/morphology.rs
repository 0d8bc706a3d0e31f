use serde::{Deserialize, Serialize};

use super::buffer::BinaryMask;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphOp {
    Dilate,
    Erode,
}

/// Square `(2r+1)²` dilation or erosion. Pixels outside the canvas are ignored
/// rather than treated as 0 or 1, so shapes touching the border are not eroded
/// by the border itself.
pub fn morphology(mask: &BinaryMask, op: MorphOp, radius: usize) -> Result<BinaryMask> {
    if radius == 0 {
        return Err(invalid("morphology radius must be >= 1"));
    }
    let (w, h) = mask.dims();
    let rows = filter_1d(mask.data(), w, h, radius, op, true);
    let out = filter_1d(&rows, w, h, radius, op, false);
    BinaryMask::from_vec(w, h, out)
}

/// Window max/min along rows (`horizontal`) or columns via running counts.
fn filter_1d(src: &[u8], w: usize, h: usize, r: usize, op: MorphOp, horizontal: bool) -> Vec<u8> {
    let (len, lanes) = if horizontal { (w, h) } else { (h, w) };
    let idx = |lane: usize, i: usize| if horizontal { lane * w + i } else { i * w + lane };
    let mut out = vec![0u8; src.len()];
    let mut prefix = vec![0u32; len + 1];
    for lane in 0..lanes {
        for i in 0..len {
            prefix[i + 1] = prefix[i] + u32::from(src[idx(lane, i)]);
        }
        for i in 0..len {
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(len - 1);
            let ones = prefix[hi + 1] - prefix[lo];
            let set = match op {
                MorphOp::Dilate => ones > 0,
                MorphOp::Erode => ones as usize == hi - lo + 1,
            };
            out[idx(lane, i)] = u8::from(set);
        }
    }
    out
}
