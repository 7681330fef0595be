//! Image and mask files (PNG, PGM/PPM).

use std::path::Path;

use image::{GrayImage as LumaBuf, ImageReader, RgbImage};

use crate::error::{Error, Result};
use crate::imgcore::{ColorImage, GrayImage, PixelMask};

fn image_err(path: &Path) -> impl FnOnce(image::ImageError) -> Error + '_ {
    move |source| match source {
        image::ImageError::IoError(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        source => Error::Image {
            path: path.to_path_buf(),
            source,
        },
    }
}

fn open(path: &Path) -> Result<image::DynamicImage> {
    ImageReader::open(path)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
        .with_guessed_format()
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
        .decode()
        .map_err(image_err(path))
}

pub fn read_color_image(path: &Path) -> Result<ColorImage> {
    let rgb = open(path)?.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    ColorImage::from_vec(w, h, rgb.pixels().map(|p| p.0).collect())
}

pub fn write_color_image(path: &Path, img: &ColorImage) -> Result<()> {
    let raw: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    let buf = RgbImage::from_raw(img.width() as u32, img.height() as u32, raw)
        .ok_or_else(|| Error::Data("image buffer size".into()))?;
    buf.save(path).map_err(image_err(path))
}

/// Any nonzero sample marks a mask pixel.
pub fn read_mask(path: &Path) -> Result<PixelMask> {
    let rgb = open(path)?.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    PixelMask::from_vec(w, h, rgb.pixels().map(|p| p.0 != [0, 0, 0]).collect())
}

pub fn write_mask(path: &Path, mask: &PixelMask) -> Result<()> {
    let raw = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    write_levels(path, mask.width(), mask.height(), raw)
}

/// 8-bit grey levels as stored.
pub fn read_gray(path: &Path) -> Result<GrayImage> {
    let l = open(path)?.to_luma8();
    let (w, h) = (l.width() as usize, l.height() as usize);
    GrayImage::from_vec(w, h, l.pixels().map(|p| p.0[0] as f64).collect())
}

/// Writes a `[0, 1]` map scaled to `[0, 255]`.
pub fn write_unit_map(path: &Path, map: &GrayImage) -> Result<()> {
    let scaled = map.map(|v| v * 255.0);
    write_levels(path, map.width(), map.height(), scaled.to_levels())
}

fn write_levels(path: &Path, w: usize, h: usize, raw: Vec<u8>) -> Result<()> {
    let buf = LumaBuf::from_raw(w as u32, h as u32, raw).ok_or_else(|| Error::Data("image buffer size".into()))?;
    buf.save(path).map_err(image_err(path))
}
