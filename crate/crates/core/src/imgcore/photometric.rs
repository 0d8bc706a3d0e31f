use super::buffer::ImageBuffer;
use crate::error::{invalid, Result};

/// `clamp(contrast * (v - 0.5) + 0.5 + brightness, 0, 1)` per channel.
pub fn photometric_adjust(img: &ImageBuffer, contrast: f32, brightness: f32) -> Result<ImageBuffer> {
    if !(contrast > 0.0) || !brightness.is_finite() {
        return Err(invalid(format!(
            "contrast must be > 0 and brightness finite, got ({contrast}, {brightness})"
        )));
    }
    let mut out = img.clone();
    if contrast == 1.0 && brightness == 0.0 {
        return Ok(out);
    }
    for v in out.data_mut() {
        *v = (contrast * (*v - 0.5) + 0.5 + brightness).clamp(0.0, 1.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn px(v: f32) -> ImageBuffer {
        ImageBuffer::filled(1, 1, [v; 3]).unwrap()
    }

    #[test]
    fn identity_and_fixed_point() {
        let img = ImageBuffer::from_fn(3, 2, |x, y| [x as f32 / 3.0, y as f32 / 2.0, 0.7]).unwrap();
        assert_eq!(photometric_adjust(&img, 1.0, 0.0).unwrap(), img);
        assert_eq!(photometric_adjust(&px(0.5), 2.0, 0.0).unwrap().pixel(0, 0), [0.5; 3]);
    }

    #[test]
    fn clamps_and_rejects() {
        assert_eq!(photometric_adjust(&px(0.9), 1.0, 0.3).unwrap().pixel(0, 0), [1.0; 3]);
        assert_eq!(photometric_adjust(&px(0.1), 3.0, -0.2).unwrap().pixel(0, 0), [0.0; 3]);
        assert!(photometric_adjust(&px(0.1), 0.0, 0.0).is_err());
    }
}
