//! 8-bit raster I/O. Images are RGB8; masks are 8-bit grayscale where a value
//! of at least 128 means "set".

use std::io::Cursor;
use std::path::Path;

use image::{GrayImage, ImageFormat, RgbImage};

use super::buffer::{BinaryMask, ImageBuffer, SoftMask};
use crate::error::{Error, Result};

pub const MASK_THRESHOLD: u8 = 128;

#[inline]
pub fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn open(path: &Path) -> Result<image::DynamicImage> {
    image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_image(path: &Path) -> Result<ImageBuffer> {
    let rgb = open(path)?.to_rgb8();
    from_rgb8(&rgb)
}

pub fn from_rgb8(rgb: &RgbImage) -> Result<ImageBuffer> {
    let data = rgb.as_raw().iter().map(|&v| f32::from(v) / 255.0).collect();
    ImageBuffer::from_vec(rgb.width() as usize, rgb.height() as usize, data)
}

pub fn to_rgb8(img: &ImageBuffer) -> RgbImage {
    let raw = img.data().iter().map(|&v| to_u8(v)).collect();
    RgbImage::from_raw(img.width() as u32, img.height() as u32, raw).expect("length invariant")
}

pub fn read_binary_mask(path: &Path) -> Result<BinaryMask> {
    let g = open(path)?.to_luma8();
    let data = g.as_raw().iter().map(|&v| u8::from(v >= MASK_THRESHOLD)).collect();
    BinaryMask::from_vec(g.width() as usize, g.height() as usize, data)
}

/// Grayscale mask as alpha (`v / 255`).
pub fn read_soft_mask(path: &Path) -> Result<SoftMask> {
    let g = open(path)?.to_luma8();
    let data = g.as_raw().iter().map(|&v| f32::from(v) / 255.0).collect();
    SoftMask::from_vec(g.width() as usize, g.height() as usize, data)
}

pub fn mask_to_gray8(mask: &BinaryMask) -> GrayImage {
    let raw = mask.data().iter().map(|&v| if v != 0 { 255 } else { 0 }).collect();
    GrayImage::from_raw(mask.width() as u32, mask.height() as u32, raw).expect("length invariant")
}

fn png_bytes<P, C>(img: &image::ImageBuffer<P, C>) -> Vec<u8>
where
    P: image::Pixel<Subpixel = u8> + image::PixelWithColorType,
    C: std::ops::Deref<Target = [u8]>,
{
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .expect("PNG encoding into memory cannot fail");
    buf.into_inner()
}

pub fn encode_png_image(img: &ImageBuffer) -> Vec<u8> {
    png_bytes(&to_rgb8(img))
}

pub fn encode_png_mask(mask: &BinaryMask) -> Vec<u8> {
    png_bytes(&mask_to_gray8(mask))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(crate::error::io_err(path))
}

pub fn write_image(path: &Path, img: &ImageBuffer) -> Result<()> {
    write_bytes(path, &encode_png_image(img))
}

pub fn write_binary_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    write_bytes(path, &encode_png_mask(mask))
}
