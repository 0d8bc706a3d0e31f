//! Lossy block-DCT round trip used as the "image compression" augmentation.
//!
//! This is the lossy core of baseline JPEG: JFIF YCbCr conversion, 8×8
//! orthonormal DCT-II, quantization with the standard luminance/chrominance
//! tables scaled by the IJG quality curve, then the inverse path. Entropy
//! coding is lossless and therefore skipped. No chroma subsampling.
//!
//! Quantization steps are continuous (not integer-rounded) and floored at
//! 1/8, which bounds the quality-100 error below 2/255. DC steps are capped
//! at 4 so flat regions never drift by more than 1/255.

use std::sync::OnceLock;

use super::buffer::ImageBuffer;
use crate::error::{invalid, Result};

const LUMA_Q: [f64; 64] = [
    16., 11., 10., 16., 24., 40., 51., 61., 12., 12., 14., 19., 26., 58., 60., 55., 14., 13., 16.,
    24., 40., 57., 69., 56., 14., 17., 22., 29., 51., 87., 80., 62., 18., 22., 37., 56., 68., 109.,
    103., 77., 24., 35., 55., 64., 81., 104., 113., 92., 49., 64., 78., 87., 103., 121., 120.,
    101., 72., 92., 95., 98., 112., 100., 103., 99.,
];

const CHROMA_Q: [f64; 64] = [
    17., 18., 24., 47., 99., 99., 99., 99., 18., 21., 26., 66., 99., 99., 99., 99., 24., 26., 56.,
    99., 99., 99., 99., 99., 47., 66., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99.,
    99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99., 99.,
    99., 99., 99., 99., 99., 99., 99.,
];

const MIN_STEP: f64 = 0.125;
const MAX_DC_STEP: f64 = 4.0;

fn dct_basis() -> &'static [[f64; 8]; 8] {
    static BASIS: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut b = [[0.0; 8]; 8];
        for (u, row) in b.iter_mut().enumerate() {
            let a = if u == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
            for (x, v) in row.iter_mut().enumerate() {
                *v = a * (((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI) / 16.0).cos();
            }
        }
        b
    })
}

fn quant_table(base: &[f64; 64], quality: u8) -> [f64; 64] {
    let q = f64::from(quality);
    let scale = if quality < 50 { 5000.0 / q } else { 200.0 - 2.0 * q };
    let mut t = [0.0; 64];
    for (i, s) in t.iter_mut().enumerate() {
        *s = (base[i] * scale / 100.0).clamp(MIN_STEP, 255.0);
    }
    t[0] = t[0].min(MAX_DC_STEP);
    t
}

fn round_trip_block(block: &mut [f64; 64], table: &[f64; 64]) {
    let b = dct_basis();
    let mut tmp = [0.0; 64];
    // rows then columns: C = B · X · Bᵀ
    for y in 0..8 {
        for u in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|x| b[u][x] * block[y * 8 + x]).sum();
        }
    }
    let mut coef = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            coef[v * 8 + u] = (0..8).map(|y| b[v][y] * tmp[y * 8 + u]).sum();
        }
    }
    for (c, q) in coef.iter_mut().zip(table) {
        *c = (*c / q).round() * q;
    }
    for y in 0..8 {
        for u in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|v| b[v][y] * coef[v * 8 + u]).sum();
        }
    }
    for y in 0..8 {
        for x in 0..8 {
            block[y * 8 + x] = (0..8).map(|u| b[u][x] * tmp[y * 8 + u]).sum();
        }
    }
}

/// Compresses and decompresses `img` at `quality` (1..=100).
pub fn lossy_recompress(img: &ImageBuffer, quality: u8) -> Result<ImageBuffer> {
    if !(1..=100).contains(&quality) {
        return Err(invalid(format!("compression quality must be in 1..=100, got {quality}")));
    }
    let (w, h) = img.dims();
    let n = w * h;
    let mut planes = vec![vec![0f64; n]; 3];
    for (i, px) in img.pixels().enumerate() {
        let [r, g, b] = px.map(|v| f64::from(v) * 255.0);
        planes[0][i] = 0.299 * r + 0.587 * g + 0.114 * b - 128.0;
        planes[1][i] = -0.168_736 * r - 0.331_264 * g + 0.5 * b;
        planes[2][i] = 0.5 * r - 0.418_688 * g - 0.081_312 * b;
    }
    let tables = [
        quant_table(&LUMA_Q, quality),
        quant_table(&CHROMA_Q, quality),
        quant_table(&CHROMA_Q, quality),
    ];
    for (plane, table) in planes.iter_mut().zip(&tables) {
        for by in (0..h).step_by(8) {
            for bx in (0..w).step_by(8) {
                let mut block = [0.0; 64];
                for y in 0..8 {
                    let sy = (by + y).min(h - 1);
                    for x in 0..8 {
                        let sx = (bx + x).min(w - 1);
                        block[y * 8 + x] = plane[sy * w + sx];
                    }
                }
                round_trip_block(&mut block, table);
                for y in 0..8.min(h - by) {
                    for x in 0..8.min(w - bx) {
                        plane[(by + y) * w + bx + x] = block[y * 8 + x];
                    }
                }
            }
        }
    }
    let mut out = Vec::with_capacity(n * 3);
    for i in 0..n {
        let y = planes[0][i] + 128.0;
        let cb = planes[1][i];
        let cr = planes[2][i];
        let rgb = [
            y + 1.402 * cr,
            y - 0.344_136 * cb - 0.714_136 * cr,
            y + 1.772 * cb,
        ];
        out.extend(rgb.iter().map(|v| ((v / 255.0).clamp(0.0, 1.0)) as f32));
    }
    ImageBuffer::from_vec(w, h, out)
}
