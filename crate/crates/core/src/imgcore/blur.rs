use super::buffer::Raster;
use crate::error::{invalid, Result};

/// Below this sigma the blur is the identity.
pub const MIN_SIGMA: f32 = 0.1;

/// Kernel half-width used for `sigma`: `ceil(3 sigma)`, or 0 when the blur is a no-op.
pub fn kernel_radius(sigma: f32) -> usize {
    if sigma < MIN_SIGMA {
        0
    } else {
        (3.0 * sigma).ceil() as usize
    }
}

/// Normalized 1-D Gaussian taps of length `2 * kernel_radius(sigma) + 1`.
pub fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    let r = kernel_radius(sigma) as i64;
    let s = f64::from(sigma);
    let raw: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * s * s)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| (v / sum) as f32).collect()
}

/// Separable Gaussian blur with edge replication at the borders.
pub fn gaussian_blur<R: Raster + Clone>(img: &R, sigma: f32) -> Result<R> {
    if !(sigma >= 0.0) {
        return Err(invalid(format!("blur sigma must be >= 0, got {sigma}")));
    }
    if sigma < MIN_SIGMA {
        return Ok(img.clone());
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let (w, h) = img.dims();
    let c = R::CHANNELS;
    let src = img.samples();

    let mut tmp = vec![0f32; src.len()];
    for y in 0..h {
        let row = &src[y * w * c..(y + 1) * w * c];
        let out = &mut tmp[y * w * c..(y + 1) * w * c];
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0f32;
                for (k, &kv) in kernel.iter().enumerate() {
                    let sx = (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize;
                    acc += kv * row[sx * c + ch];
                }
                out[x * c + ch] = acc;
            }
        }
    }

    let mut dst = vec![0f32; src.len()];
    for y in 0..h {
        for (k, &kv) in kernel.iter().enumerate() {
            let sy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
            let src_row = &tmp[sy * w * c..(sy + 1) * w * c];
            let dst_row = &mut dst[y * w * c..(y + 1) * w * c];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += kv * s;
            }
        }
    }
    R::from_samples(w, h, dst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{ImageBuffer, SoftMask};
    use proptest::prelude::*;

    #[test]
    fn constant_image_unchanged() {
        let img = ImageBuffer::filled(9, 7, [0.3, 0.6, 0.9]).unwrap();
        for sigma in [0.5, 1.5, 4.0] {
            let out = gaussian_blur(&img, sigma).unwrap();
            for (a, b) in out.data().iter().zip(img.data()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn zero_sigma_is_identity_and_negative_rejected() {
        let img = SoftMask::from_fn(5, 5, |x, y| ((x * y) % 3) as f32 / 2.0).unwrap();
        assert_eq!(gaussian_blur(&img, 0.0).unwrap(), img);
        assert_eq!(gaussian_blur(&img, 0.05).unwrap(), img);
        assert!(gaussian_blur(&img, -1.0).is_err());
        assert!(gaussian_blur(&img, f32::NAN).is_err());
    }

    /// Dense 2-D convolution with an independently built kernel.
    fn dense_blur(img: &SoftMask, sigma: f64) -> Vec<f64> {
        let r = (3.0 * sigma).ceil() as i64;
        let (w, h) = (img.width() as i64, img.height() as i64);
        let mut weights = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                let g = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
                weights.push((dx, dy, g));
            }
        }
        let total: f64 = weights.iter().map(|w| w.2).sum();
        let mut out = vec![0.0; (w * h) as usize];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for &(dx, dy, g) in &weights {
                    let sx = (x + dx).clamp(0, w - 1) as usize;
                    let sy = (y + dy).clamp(0, h - 1) as usize;
                    acc += g / total * f64::from(img.get(sx, sy));
                }
                out[(y * w + x) as usize] = acc;
            }
        }
        out
    }

    #[test]
    fn impulse_matches_dense_convolution() {
        let img = SoftMask::from_fn(11, 11, |x, y| f32::from(x == 5 && y == 5)).unwrap();
        let out = gaussian_blur(&img, 1.5).unwrap();
        let oracle = dense_blur(&img, 1.5);
        for (a, b) in out.data().iter().zip(&oracle) {
            assert!((f64::from(*a) - b).abs() < 1e-6, "{a} vs {b}");
        }
        let mass: f32 = out.data().iter().sum();
        assert!((mass - 1.0).abs() < 1e-4);
    }

    #[test]
    fn border_replication_matches_dense() {
        let img = SoftMask::from_fn(6, 4, |x, y| ((x * 7 + y * 3) % 5) as f32 / 4.0).unwrap();
        let out = gaussian_blur(&img, 1.0).unwrap();
        let oracle = dense_blur(&img, 1.0);
        for (a, b) in out.data().iter().zip(&oracle) {
            assert!((f64::from(*a) - b).abs() < 1e-5);
        }
    }

    proptest! {
        #[test]
        fn blur_stays_within_input_range(
            v in prop::collection::vec(0f32..=1.0, 64),
            sigma in 0.0f32..3.0,
        ) {
            let img = SoftMask::from_vec(8, 8, v.clone()).unwrap();
            let out = gaussian_blur(&img, sigma).unwrap();
            let lo = v.iter().cloned().fold(f32::INFINITY, f32::min);
            let hi = v.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
            for &o in out.data() {
                prop_assert!(o >= lo - 1e-6 && o <= hi + 1e-6);
            }
        }

        #[test]
        fn interior_impulse_mass_preserved(sigma in 0.1f32..2.5, amp in 0.1f32..1.0) {
            let img = SoftMask::from_fn(21, 21, |x, y| if x == 10 && y == 10 { amp } else { 0.0 }).unwrap();
            let out = gaussian_blur(&img, sigma).unwrap();
            let mass: f32 = out.data().iter().sum();
            prop_assert!((mass - amp).abs() < 1e-4);
        }
    }
}
