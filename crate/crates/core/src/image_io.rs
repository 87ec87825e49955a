//! 8-bit image decode/encode.
//!
//! Reads 8-bit PNG and JPEG, writes PNG. Samples map to floats as
//! `value / 255`; the save path quantizes with `round(v * 255)` and either
//! clamps to [0,1] first or rejects out-of-range samples, caller's choice.

use std::path::Path;

use image::{ColorType, DynamicImage, ImageReader};

use crate::error::{Error, Result};
use crate::tensor::{ImageTensor, Planar};

/// Decodes an 8-bit grayscale or RGB image into a float raster.
///
/// Grayscale yields one channel, RGB three. Anything else (alpha, 16-bit,
/// float) is rejected so the pipeline never silently drops information.
pub fn load_image(path: &Path) -> Result<ImageTensor> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode().map_err(|e| Error::ImageDecode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    match decoded {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = (buf.width() as usize, buf.height() as usize);
            let data = buf.into_raw().iter().map(|&v| v as f32 / 255.0).collect();
            ImageTensor::new(1, h, w, data)
        }
        DynamicImage::ImageRgb8(buf) => {
            let (w, h) = (buf.width() as usize, buf.height() as usize);
            let raw = buf.into_raw();
            // Interleaved RGB -> channel-major planes.
            let plane = w * h;
            let mut data = vec![0.0f32; 3 * plane];
            for (i, px) in raw.chunks_exact(3).enumerate() {
                data[i] = px[0] as f32 / 255.0;
                data[plane + i] = px[1] as f32 / 255.0;
                data[2 * plane + i] = px[2] as f32 / 255.0;
            }
            ImageTensor::new(3, h, w, data)
        }
        other => {
            let color = other.color();
            if color_bit_depth(color) != 8 {
                Err(Error::UnsupportedBitDepth {
                    path: path.to_path_buf(),
                    bits: color_bit_depth(color),
                })
            } else {
                Err(Error::UnsupportedColorModel {
                    path: path.to_path_buf(),
                    model: format!("{color:?}"),
                })
            }
        }
    }
}

fn color_bit_depth(color: ColorType) -> u32 {
    match color {
        ColorType::L8 | ColorType::La8 | ColorType::Rgb8 | ColorType::Rgba8 => 8,
        ColorType::L16 | ColorType::La16 | ColorType::Rgb16 | ColorType::Rgba16 => 16,
        ColorType::Rgb32F | ColorType::Rgba32F => 32,
        _ => 0,
    }
}

/// Quantizes a raster to 8 bits and writes it as PNG.
///
/// With `clamp` set, samples are clamped to [0,1] before quantization.
/// Without it, any sample outside [0,1] is an error: mean-shift and
/// amplitude transforms can legitimately leave the unit range, and
/// clamping silently would falsify their statistics.
pub fn save_image(img: &ImageTensor, path: &Path, clamp: bool) -> Result<()> {
    let c = img.channels();
    if c != 1 && c != 3 {
        return Err(Error::UnsupportedColorModel {
            path: path.to_path_buf(),
            model: format!("{c} channels"),
        });
    }
    let samples = img.samples();
    if !clamp {
        if let Some(index) = samples.iter().position(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::SampleOutOfRange {
                index,
                value: samples[index],
            });
        }
    }
    let quantize = |v: f32| -> u8 { (v.clamp(0.0, 1.0) * 255.0).round() as u8 };
    let (h, w) = (img.height(), img.width());
    let plane = h * w;
    let bytes: Vec<u8> = if c == 1 {
        samples.iter().map(|&v| quantize(v)).collect()
    } else {
        let mut out = Vec::with_capacity(3 * plane);
        for i in 0..plane {
            out.push(quantize(samples[i]));
            out.push(quantize(samples[plane + i]));
            out.push(quantize(samples[2 * plane + i]));
        }
        out
    };
    let color = if c == 1 {
        ColorType::L8
    } else {
        ColorType::Rgb8
    };
    image::save_buffer(path, &bytes, w as u32, h as u32, color).map_err(|e| Error::ImageEncode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
