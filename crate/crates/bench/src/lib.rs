//! Deterministic fixtures shared by the benchmarks.

use occlugen_core::{BinaryMask, Category, FaceSample, ImageBuffer, Occluder, SoftMask};

/// Smooth RGB ramp; `phase` shifts the palette so two calls make a transfer pair.
pub fn gradient(size: usize, phase: f32) -> ImageBuffer {
    let s = size as f32;
    ImageBuffer::from_fn(size, size, |x, y| {
        let (fx, fy) = (x as f32 / s, y as f32 / s);
        [
            0.5 + 0.4 * (3.0 * fx + phase).sin(),
            0.5 + 0.4 * (2.0 * fy - phase).cos(),
            0.2 + 0.6 * fx * fy,
        ]
    })
    .expect("non-empty fixture")
}

pub fn face(size: usize) -> FaceSample {
    let c = size as f64 / 2.0;
    let r = size as f64 * 0.35;
    let mask = BinaryMask::from_fn(size, size, |x, y| {
        let (dx, dy) = (x as f64 - c, (y as f64 - c) / 1.2);
        dx * dx + dy * dy < r * r
    })
    .expect("non-empty fixture");
    FaceSample::new("bench-face", gradient(size, 0.0), mask).expect("valid fixture")
}

/// Disc-shaped object occluder with a soft rim.
pub fn occluder(size: usize) -> Occluder {
    let c = size as f32 / 2.0;
    let mask = SoftMask::from_fn(size, size, |x, y| {
        let d = ((x as f32 - c).powi(2) + (y as f32 - c).powi(2)).sqrt();
        (c - d).clamp(0.0, 1.0)
    })
    .expect("non-empty fixture");
    Occluder::new("bench-cup", gradient(size, 2.0), mask, Category::Object, None).expect("valid fixture")
}
