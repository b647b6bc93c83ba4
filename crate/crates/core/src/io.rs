//! Binary PGM/PPM images and raw tensor dumps.
//!
//! 8-bit samples map to `v / 255`. Raw dumps are `u32` height, width, channels, then the `f64`
//! values, all little-endian.

use std::io::{Read, Write};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use crate::error::{Error, Result};
use crate::tensor::FeatureMap;

/// Decodes a binary `P5` (grey) or `P6` (RGB) image.
pub fn read_pnm<R: Read>(mut input: R) -> Result<FeatureMap> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if !(bytes.starts_with(b"P5") || bytes.starts_with(b"P6")) {
        return Err(Error::Format("expected a binary PGM (P5) or PPM (P6) image".into()));
    }
    let img = image::load_from_memory_with_format(&bytes, ImageFormat::Pnm)
        .map_err(|e| Error::Format(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(b) => to_map(h, w, 1, b.as_raw(), 255.0),
        DynamicImage::ImageRgb8(b) => to_map(h, w, 3, b.as_raw(), 255.0),
        DynamicImage::ImageLuma16(b) => to_map(h, w, 1, b.as_raw(), 65535.0),
        DynamicImage::ImageRgb16(b) => to_map(h, w, 3, b.as_raw(), 65535.0),
        other => Err(Error::Format(format!("unsupported pixel layout {:?}", other.color()))),
    }
}

fn to_map<T: Copy + Into<f64>>(h: usize, w: usize, c: usize, raw: &[T], scale: f64) -> Result<FeatureMap> {
    FeatureMap::from_vec(h, w, c, raw.iter().map(|&v| v.into() / scale).collect())
}

/// Writes a 1- or 3-channel map as `P5`/`P6`, clamping to [0, 1] and rounding to 8 bits.
pub fn write_pnm<W: Write>(map: &FeatureMap, mut out: W) -> Result<()> {
    let subtype = match map.channels() {
        1 => PnmSubtype::Graymap(SampleEncoding::Binary),
        3 => PnmSubtype::Pixmap(SampleEncoding::Binary),
        c => {
            return Err(Error::Format(format!(
                "only 1 or 3 channels can be written as an image, got {c}"
            )))
        }
    };
    let body: Vec<u8> = map
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let color = if map.channels() == 1 {
        ExtendedColorType::L8
    } else {
        ExtendedColorType::Rgb8
    };
    PnmEncoder::new(&mut out)
        .with_subtype(subtype)
        .write_image(&body, map.width() as u32, map.height() as u32, color)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::Io(io),
            e => Error::Format(e.to_string()),
        })
}

pub fn write_raw<W: Write>(map: &FeatureMap, mut out: W) -> Result<()> {
    for d in [map.height(), map.width(), map.channels()] {
        let d = u32::try_from(d).map_err(|_| Error::Format("dimension exceeds u32".into()))?;
        out.write_all(&d.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(map.data().len() * 8);
    for v in map.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_raw<R: Read>(mut input: R) -> Result<FeatureMap> {
    let mut header = [0u8; 12];
    input.read_exact(&mut header)?;
    let dim = |i: usize| u32::from_le_bytes(header[i * 4..i * 4 + 4].try_into().unwrap()) as usize;
    let (h, w, c) = (dim(0), dim(1), dim(2));
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != h * w * c * 8 {
        return Err(Error::Format(format!(
            "raw tensor {h}x{w}x{c} needs {} bytes, found {}",
            h * w * c * 8,
            body.len()
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    FeatureMap::from_vec(h, w, c, data)
}
