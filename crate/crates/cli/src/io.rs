//! PNG decode/encode for the pipeline and atomic file writes.

use std::io::Write;
use std::path::Path;

use freqmix::Image;
use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use crate::error::{CliError, Result};

/// Bit depth used when quantizing an image to disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

/// Reads an 8- or 16-bit grayscale or RGB PNG into planar f64 intensities.
pub fn read_image(path: &Path) -> Result<Image> {
    let decoded = image::open(path).map_err(|e| match e {
        // Failures opening the file are i/o; a short read mid-stream means
        // a truncated or corrupt file, which is a decode problem.
        image::ImageError::IoError(source)
            if source.kind() != std::io::ErrorKind::UnexpectedEof =>
        {
            CliError::io(path, source)
        }
        other => CliError::Decode {
            path: path.display().to_string(),
            message: other.to_string(),
        },
    })?;
    let (h, w) = (decoded.height() as usize, decoded.width() as usize);
    let build = |channels: usize, data: Vec<f64>| {
        Image::new(h, w, channels, data).map_err(CliError::from)
    };
    match decoded {
        DynamicImage::ImageLuma8(buf) => {
            build(1, buf.as_raw().iter().map(|&v| v as f64 / 255.0).collect())
        }
        DynamicImage::ImageLuma16(buf) => build(
            1,
            buf.as_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
        ),
        DynamicImage::ImageRgb8(buf) => {
            let raw = buf.as_raw();
            let n = h * w;
            let mut data = vec![0.0; 3 * n];
            for (p, px) in raw.chunks_exact(3).enumerate() {
                for c in 0..3 {
                    data[c * n + p] = px[c] as f64 / 255.0;
                }
            }
            build(3, data)
        }
        DynamicImage::ImageRgb16(buf) => {
            let raw = buf.as_raw();
            let n = h * w;
            let mut data = vec![0.0; 3 * n];
            for (p, px) in raw.chunks_exact(3).enumerate() {
                for c in 0..3 {
                    data[c * n + p] = px[c] as f64 / 65535.0;
                }
            }
            build(3, data)
        }
        other => Err(CliError::Decode {
            path: path.display().to_string(),
            message: format!(
                "unsupported pixel layout {:?}; expected 8- or 16-bit grayscale or RGB",
                other.color()
            ),
        }),
    }
}

/// Clamps to `[0, 1]`, quantizes at the requested bit depth, and writes a
/// PNG atomically (temp file + rename).
pub fn write_image(img: &Image, path: &Path, depth: BitDepth) -> Result<()> {
    let clamped = img.clamped();
    let (h, w) = (img.height() as u32, img.width() as u32);
    let n = img.plane_len();
    let dynamic = match (img.channels(), depth) {
        (1, BitDepth::Eight) => {
            let raw: Vec<u8> = clamped
                .channel(0)
                .iter()
                .map(|&v| (v * 255.0).round() as u8)
                .collect();
            DynamicImage::ImageLuma8(
                ImageBuffer::<Luma<u8>, _>::from_raw(w, h, raw).expect("sized buffer"),
            )
        }
        (1, BitDepth::Sixteen) => {
            let raw: Vec<u16> = clamped
                .channel(0)
                .iter()
                .map(|&v| (v * 65535.0).round() as u16)
                .collect();
            DynamicImage::ImageLuma16(
                ImageBuffer::<Luma<u16>, _>::from_raw(w, h, raw).expect("sized buffer"),
            )
        }
        (3, BitDepth::Eight) => {
            let mut raw = vec![0u8; 3 * n];
            for p in 0..n {
                for c in 0..3 {
                    raw[p * 3 + c] = (clamped.channel(c)[p] * 255.0).round() as u8;
                }
            }
            DynamicImage::ImageRgb8(
                ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, raw).expect("sized buffer"),
            )
        }
        (3, BitDepth::Sixteen) => {
            let mut raw = vec![0u16; 3 * n];
            for p in 0..n {
                for c in 0..3 {
                    raw[p * 3 + c] = (clamped.channel(c)[p] * 65535.0).round() as u16;
                }
            }
            DynamicImage::ImageRgb16(
                ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, raw).expect("sized buffer"),
            )
        }
        (c, _) => {
            return Err(CliError::Usage(format!(
                "cannot encode {c}-channel image as PNG"
            )))
        }
    };

    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let tmp = tempfile::Builder::new()
        .prefix(".freqmix-tmp-")
        .suffix(".png")
        .tempfile_in(dir)
        .map_err(|e| CliError::io(dir, e))?;
    dynamic
        .save_with_format(tmp.path(), image::ImageFormat::Png)
        .map_err(|e| CliError::Decode {
            path: path.display().to_string(),
            message: format!("encode failed: {e}"),
        })?;
    tmp.persist(path)
        .map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Writes text atomically (temp file + rename).
pub fn write_text_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::Builder::new()
        .prefix(".freqmix-tmp-")
        .tempfile_in(dir)
        .map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(text.as_bytes())
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_hex(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}
