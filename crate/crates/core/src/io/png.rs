//! PNG images as `[0, 1]` float RGB.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat, ImageReader, Limits, RgbImage};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

/// Largest accepted side length when decoding.
pub const MAX_DIMENSION: u32 = 16_384;

fn image_error(e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::Io(io),
        image::ImageError::Unsupported(u) => Error::UnsupportedFormat(u.to_string()),
        other => Error::parse(other.to_string()),
    }
}

/// Decodes 8- or 16-bit PNG data; gray is expanded to RGB and alpha is
/// dropped.
pub fn decode_png<T: Real>(bytes: &[u8]) -> Result<Image<T>> {
    let mut reader = ImageReader::with_format(Cursor::new(bytes), ImageFormat::Png);
    let mut limits = Limits::default();
    limits.max_image_width = Some(MAX_DIMENSION);
    limits.max_image_height = Some(MAX_DIMENSION);
    reader.limits(limits);
    let img = reader.decode().map_err(image_error)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let wide = matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    );
    let data: Vec<T> = if wide {
        img.to_rgb16()
            .into_raw()
            .into_iter()
            .map(|v| T::lit(v as f64 / 65535.0))
            .collect()
    } else {
        img.to_rgb8()
            .into_raw()
            .into_iter()
            .map(|v| T::lit(v as f64 / 255.0))
            .collect()
    };
    Image::from_vec(w, h, 3, data)
}

pub fn read_png<T: Real>(path: impl AsRef<Path>) -> Result<Image<T>> {
    decode_png(&std::fs::read(path)?)
}

/// `[0, 1] → u8`: clamp, scale, round half away from zero. NaN maps to 0.
pub fn quantize<T: Real>(v: T) -> u8 {
    let v = v.to_f64_lossy();
    if v.is_nan() {
        return 0;
    }
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Encodes a 3-channel image as 8-bit RGB PNG.
pub fn encode_png<T: Real>(img: &Image<T>) -> Result<Vec<u8>> {
    if img.channels != 3 {
        return Err(Error::DimensionMismatch(format!(
            "PNG export needs 3 channels, got {}",
            img.channels
        )));
    }
    let (w, h) = (
        u32::try_from(img.width).map_err(|_| Error::DimensionMismatch("image too wide".into()))?,
        u32::try_from(img.height).map_err(|_| Error::DimensionMismatch("image too tall".into()))?,
    );
    let raw = img.data.iter().map(|&v| quantize(v)).collect();
    let rgb = RgbImage::from_raw(w, h, raw)
        .ok_or_else(|| Error::DimensionMismatch("pixel buffer does not match size".into()))?;
    let mut out = Cursor::new(Vec::new());
    rgb.write_to(&mut out, ImageFormat::Png).map_err(image_error)?;
    Ok(out.into_inner())
}

pub fn write_png<T: Real>(path: impl AsRef<Path>, img: &Image<T>) -> Result<()> {
    std::fs::write(path, encode_png(img)?)?;
    Ok(())
}
