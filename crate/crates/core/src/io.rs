//! Raster file I/O: PNG, binary/ASCII PGM, and the WFR float format.
//!
//! WFR layout (all little-endian): the magic `WFR1`, then `u32` width,
//! `u32` height, `u32` channels, then `width * height * channels` `f32`
//! samples, row-major with channels interleaved.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, FloatRaster, Trimap};

pub const WFR_MAGIC: &[u8; 4] = b"WFR1";
const WFR_HEADER_LEN: usize = 16;

/// Trimap files store the unknown label as gray 128; values within two
/// 8-bit steps of a sentinel snap to it.
pub const TRIMAP_UNKNOWN_GRAY: u8 = 128;
pub const TRIMAP_SNAP_TOL: f64 = 2.0 / 255.0;

/// How a file should be interpreted and validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterKind {
    Image,
    Prob,
    Mask,
    Trimap,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Raster {
    Float(FloatRaster),
    Mask(BinaryMask),
    Trimap(Trimap),
}

/// Samples decoded from disk, already scaled to `[0, 1]` for integer formats.
struct Decoded {
    width: usize,
    height: usize,
    channels: usize,
    values: Vec<f64>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::UnreadableFile {
        path: path.to_path_buf(),
        source,
    })
}

fn decode_wfr(bytes: &[u8]) -> Result<Decoded> {
    if bytes.len() < WFR_HEADER_LEN {
        return Err(Error::MalformedHeader(format!(
            "WFR file is {} bytes, shorter than its {WFR_HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    let word =
        |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (width, height, channels) = (word(0), word(1), word(2));
    if channels != 1 && channels != 3 {
        return Err(Error::MalformedHeader(format!(
            "WFR declares {channels} channels"
        )));
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::MalformedHeader("WFR dimensions overflow".into()))?;
    let payload = &bytes[WFR_HEADER_LEN..];
    if payload.len() != expected * 4 {
        return Err(Error::MalformedHeader(format!(
            "WFR declares {width}x{height}x{channels} = {expected} floats but holds {} bytes",
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(Decoded {
        width,
        height,
        channels,
        values,
    })
}

fn decode_image(bytes: &[u8]) -> Result<Decoded> {
    let img = image::load_from_memory(bytes)
        .map_err(|e| Error::MalformedHeader(format!("cannot decode image: {e}")))?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let (channels, values): (usize, Vec<f64>) = match img {
        DynamicImage::ImageLuma8(buf) => (
            1,
            buf.into_raw()
                .into_iter()
                .map(|v| v as f64 / 255.0)
                .collect(),
        ),
        DynamicImage::ImageLumaA8(_) => (
            1,
            img.into_luma8()
                .into_raw()
                .into_iter()
                .map(|v| v as f64 / 255.0)
                .collect(),
        ),
        DynamicImage::ImageRgb8(buf) => (
            3,
            buf.into_raw()
                .into_iter()
                .map(|v| v as f64 / 255.0)
                .collect(),
        ),
        DynamicImage::ImageRgba8(_) => (
            3,
            img.into_rgb8()
                .into_raw()
                .into_iter()
                .map(|v| v as f64 / 255.0)
                .collect(),
        ),
        DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => (
            1,
            img.into_luma16()
                .into_raw()
                .into_iter()
                .map(|v| v as f64 / 65535.0)
                .collect(),
        ),
        other => (
            3,
            other
                .into_rgb32f()
                .into_raw()
                .into_iter()
                .map(|v| (v as f64).clamp(0.0, 1.0))
                .collect(),
        ),
    };
    Ok(Decoded {
        width,
        height,
        channels,
        values,
    })
}

fn decode(path: &Path) -> Result<Decoded> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(WFR_MAGIC) {
        decode_wfr(&bytes)
    } else {
        decode_image(&bytes)
    }
}

fn require_single_channel(d: &Decoded, kind: RasterKind) -> Result<()> {
    if d.channels != 1 {
        return Err(Error::InvariantViolation(format!(
            "{kind:?} input must be single-channel, file has {} channels",
            d.channels
        )));
    }
    Ok(())
}

/// Loads and validates a raster of the given kind.
pub fn load_raster(path: impl AsRef<Path>, kind: RasterKind) -> Result<Raster> {
    let d = decode(path.as_ref())?;
    match kind {
        RasterKind::Image => {
            let r = FloatRaster::new(d.width, d.height, d.channels, d.values)?;
            r.ensure_unit_range("image")?;
            Ok(Raster::Float(r))
        }
        RasterKind::Prob => {
            require_single_channel(&d, kind)?;
            let r = FloatRaster::gray(d.width, d.height, d.values)?;
            r.ensure_unit_range("probability")?;
            Ok(Raster::Float(r))
        }
        RasterKind::Mask => {
            require_single_channel(&d, kind)?;
            Ok(Raster::Mask(BinaryMask::from_values(
                d.width, d.height, &d.values,
            )?))
        }
        RasterKind::Trimap => {
            require_single_channel(&d, kind)?;
            Ok(Raster::Trimap(Trimap::from_values_snapped(
                d.width,
                d.height,
                &d.values,
                TRIMAP_SNAP_TOL,
            )?))
        }
    }
}

/// Any float raster, without range checks (gradients, raw mattes).
pub fn load_float(path: impl AsRef<Path>) -> Result<FloatRaster> {
    let d = decode(path.as_ref())?;
    FloatRaster::new(d.width, d.height, d.channels, d.values)
}

pub fn load_image(path: impl AsRef<Path>) -> Result<FloatRaster> {
    match load_raster(path, RasterKind::Image)? {
        Raster::Float(r) => Ok(r),
        _ => unreachable!(),
    }
}

pub fn load_prob(path: impl AsRef<Path>) -> Result<FloatRaster> {
    match load_raster(path, RasterKind::Prob)? {
        Raster::Float(r) => Ok(r),
        _ => unreachable!(),
    }
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    match load_raster(path, RasterKind::Mask)? {
        Raster::Mask(m) => Ok(m),
        _ => unreachable!(),
    }
}

pub fn load_trimap(path: impl AsRef<Path>) -> Result<Trimap> {
    match load_raster(path, RasterKind::Trimap)? {
        Raster::Trimap(t) => Ok(t),
        _ => unreachable!(),
    }
}

/// Encodes a raster as WFR bytes. Samples are narrowed to `f32`.
pub fn encode_wfr(raster: &FloatRaster) -> Vec<u8> {
    let mut out = Vec::with_capacity(WFR_HEADER_LEN + raster.data().len() * 4);
    out.extend_from_slice(WFR_MAGIC);
    for v in [raster.width(), raster.height(), raster.channels()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for &v in raster.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FileFormat {
    Wfr,
    Png,
    Pgm,
}

fn format_for(path: &Path) -> Result<FileFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("wfr") => Ok(FileFormat::Wfr),
        Some("png") => Ok(FileFormat::Png),
        Some("pgm") => Ok(FileFormat::Pgm),
        _ => Err(Error::InvalidParams(format!(
            "cannot infer output format of {} (use .wfr, .png or .pgm)",
            path.display()
        ))),
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::UnwritableFile {
        path: path.to_path_buf(),
        source,
    })
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn encode_8bit(
    path: &Path,
    format: FileFormat,
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<u8>,
) -> Result<Vec<u8>> {
    match format {
        FileFormat::Pgm => {
            if channels != 1 {
                return Err(Error::InvalidParams(format!(
                    "{} : PGM output needs a single-channel raster",
                    path.display()
                )));
            }
            let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
            out.extend_from_slice(&samples);
            Ok(out)
        }
        FileFormat::Png => {
            let img = if channels == 1 {
                DynamicImage::ImageLuma8(
                    image::GrayImage::from_raw(width as u32, height as u32, samples).unwrap(),
                )
            } else {
                DynamicImage::ImageRgb8(
                    image::RgbImage::from_raw(width as u32, height as u32, samples).unwrap(),
                )
            };
            let mut buf = Cursor::new(Vec::new());
            img.write_to(&mut buf, ImageFormat::Png)
                .map_err(|e| Error::UnwritableFile {
                    path: path.to_path_buf(),
                    source: std::io::Error::other(e),
                })?;
            Ok(buf.into_inner())
        }
        FileFormat::Wfr => unreachable!(),
    }
}

/// Writes a float raster; the format follows the file extension.
/// PNG/PGM outputs are quantized to 8 bits.
pub fn save_float(path: impl AsRef<Path>, raster: &FloatRaster) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format_for(path)? {
        FileFormat::Wfr => encode_wfr(raster),
        f => encode_8bit(
            path,
            f,
            raster.width(),
            raster.height(),
            raster.channels(),
            raster.data().iter().map(|&v| quantize(v)).collect(),
        )?,
    };
    write_bytes(path, &bytes)
}

/// Masks are written as 0/255 gray, or 0.0/1.0 in WFR.
pub fn save_mask(path: impl AsRef<Path>, mask: &BinaryMask) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format_for(path)? {
        FileFormat::Wfr => encode_wfr(&mask.to_float()),
        f => encode_8bit(
            path,
            f,
            mask.width(),
            mask.height(),
            1,
            mask.data()
                .iter()
                .map(|&b| if b { 255 } else { 0 })
                .collect(),
        )?,
    };
    write_bytes(path, &bytes)
}

/// Trimaps are written as gray 0/128/255, or 0.0/0.5/1.0 in WFR.
pub fn save_trimap(path: impl AsRef<Path>, trimap: &Trimap) -> Result<()> {
    use crate::raster::TrimapLabel;
    let path = path.as_ref();
    let bytes = match format_for(path)? {
        FileFormat::Wfr => encode_wfr(&trimap.to_float()),
        f => encode_8bit(
            path,
            f,
            trimap.width(),
            trimap.height(),
            1,
            trimap
                .labels()
                .iter()
                .map(|l| match l {
                    TrimapLabel::Background => 0,
                    TrimapLabel::Unknown => TRIMAP_UNKNOWN_GRAY,
                    TrimapLabel::Foreground => 255,
                })
                .collect(),
        )?,
    };
    write_bytes(path, &bytes)
}
