//! Planar tensor types shared by every transform.
//!
//! All rasters are stored channel-major: `data[c * H * W + y * W + x]`. That
//! keeps each channel a contiguous slice, so per-channel statistics are plain
//! scans. Pixel data is 32-bit float; statistics and transform coefficients
//! are accumulated in f64 and rounded once on write-back.

use crate::error::{Error, Result};

/// Channel-major float raster. Implemented by [`ImageTensor`] and
/// [`FeatureMap`]; transforms that only care about the layout are generic
/// over this trait and return the same kind they were given.
pub trait Planar: Sized {
    fn channels(&self) -> usize;
    fn height(&self) -> usize;
    fn width(&self) -> usize;
    fn samples(&self) -> &[f32];

    /// Builds a value of the same kind from raw parts, re-validating
    /// dimensions and finiteness.
    fn from_parts(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self>;

    /// One channel as a contiguous `H*W` slice.
    fn channel(&self, c: usize) -> &[f32] {
        let plane = self.height() * self.width();
        &self.samples()[c * plane..(c + 1) * plane]
    }

    fn pixels_per_channel(&self) -> usize {
        self.height() * self.width()
    }
}

fn validate_parts(
    channels: usize,
    height: usize,
    width: usize,
    data: &[f32],
    context: &'static str,
) -> Result<()> {
    if channels == 0 || height == 0 || width == 0 {
        return Err(Error::ZeroDimension {
            channels,
            height,
            width,
        });
    }
    let expected = channels
        .checked_mul(height)
        .and_then(|v| v.checked_mul(width))
        .ok_or(Error::ZeroDimension {
            channels,
            height,
            width,
        })?;
    if data.len() != expected {
        return Err(Error::DataLength {
            channels,
            height,
            width,
            expected,
            got: data.len(),
        });
    }
    if let Some(index) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample { context, index });
    }
    Ok(())
}

/// A pixel raster in the canonical [0,1] range. Values map 8-bit samples as
/// `value / 255`; transforms may legitimately push samples outside [0,1], so
/// only finiteness is enforced and the save path decides how to handle
/// out-of-range values.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl ImageTensor {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        validate_parts(channels, height, width, &data, "ImageTensor")?;
        Ok(ImageTensor {
            channels,
            height,
            width,
            data,
        })
    }

    /// Constant-valued image, useful for tests and synthetic corpora.
    pub fn filled(channels: usize, height: usize, width: usize, value: f32) -> Result<Self> {
        Self::new(
            channels,
            height,
            width,
            vec![value; channels * height * width],
        )
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.data
    }

    /// Bilinear resample to `new_height` x `new_width`.
    ///
    /// Pixel centers are aligned: source coordinate = (dst + 0.5) * scale - 0.5,
    /// clamped at the borders. Equal dimensions return a plain copy.
    pub fn resampled(&self, new_height: usize, new_width: usize) -> Result<ImageTensor> {
        if new_height == 0 || new_width == 0 {
            return Err(Error::ZeroDimension {
                channels: self.channels,
                height: new_height,
                width: new_width,
            });
        }
        if new_height == self.height && new_width == self.width {
            return Ok(self.clone());
        }
        let (h, w) = (self.height, self.width);
        let scale_y = h as f64 / new_height as f64;
        let scale_x = w as f64 / new_width as f64;
        let mut out = Vec::with_capacity(self.channels * new_height * new_width);
        for c in 0..self.channels {
            let plane = self.channel(c);
            for y in 0..new_height {
                let sy = ((y as f64 + 0.5) * scale_y - 0.5).clamp(0.0, (h - 1) as f64);
                let y0 = sy.floor() as usize;
                let y1 = (y0 + 1).min(h - 1);
                let fy = sy - y0 as f64;
                for x in 0..new_width {
                    let sx = ((x as f64 + 0.5) * scale_x - 0.5).clamp(0.0, (w - 1) as f64);
                    let x0 = sx.floor() as usize;
                    let x1 = (x0 + 1).min(w - 1);
                    let fx = sx - x0 as f64;
                    let top =
                        plane[y0 * w + x0] as f64 * (1.0 - fx) + plane[y0 * w + x1] as f64 * fx;
                    let bottom =
                        plane[y1 * w + x0] as f64 * (1.0 - fx) + plane[y1 * w + x1] as f64 * fx;
                    out.push((top * (1.0 - fy) + bottom * fy) as f32);
                }
            }
        }
        ImageTensor::new(self.channels, new_height, new_width, out)
    }
}

impl Planar for ImageTensor {
    fn channels(&self) -> usize {
        self.channels
    }
    fn height(&self) -> usize {
        self.height
    }
    fn width(&self) -> usize {
        self.width
    }
    fn samples(&self) -> &[f32] {
        &self.data
    }
    fn from_parts(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        ImageTensor::new(channels, height, width, data)
    }
}

/// An unbounded feature raster with the same layout as [`ImageTensor`].
/// Holds intermediate network activations, class scores, or dumped spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        validate_parts(channels, height, width, &data, "FeatureMap")?;
        Ok(FeatureMap {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.data
    }

    /// Reinterprets the payload as an image without copying. The layouts are
    /// identical; this is how float tensor files enter the image pipeline.
    pub fn into_image(self) -> Result<ImageTensor> {
        ImageTensor::new(self.channels, self.height, self.width, self.data)
    }
}

impl Planar for FeatureMap {
    fn channels(&self) -> usize {
        self.channels
    }
    fn height(&self) -> usize {
        self.height
    }
    fn width(&self) -> usize {
        self.width
    }
    fn samples(&self) -> &[f32] {
        &self.data
    }
    fn from_parts(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        FeatureMap::new(channels, height, width, data)
    }
}

impl From<ImageTensor> for FeatureMap {
    fn from(img: ImageTensor) -> Self {
        FeatureMap {
            channels: img.channels,
            height: img.height,
            width: img.width,
            data: img.data,
        }
    }
}

/// Per-channel mean and standard deviation, with the epsilon folded under the
/// square root when the deviation was computed: `sigma = sqrt(var + eps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    means: Vec<f64>,
    stds: Vec<f64>,
    epsilon: f64,
}

impl ChannelStats {
    pub fn new(means: Vec<f64>, stds: Vec<f64>, epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::NegativeEpsilon { value: epsilon });
        }
        if means.len() != stds.len() || means.is_empty() {
            return Err(Error::InvalidStats {
                message: format!("means has {} entries, stds has {}", means.len(), stds.len()),
            });
        }
        if let Some(v) = means.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidStats {
                message: format!("non-finite mean {v}"),
            });
        }
        let floor = epsilon.sqrt();
        if let Some(v) = stds.iter().find(|v| !v.is_finite() || **v < floor) {
            return Err(Error::InvalidStats {
                message: format!("std {v} below sqrt(epsilon) = {floor}"),
            });
        }
        Ok(ChannelStats {
            means,
            stds,
            epsilon,
        })
    }

    pub fn channels(&self) -> usize {
        self.means.len()
    }
    pub fn means(&self) -> &[f64] {
        &self.means
    }
    pub fn stds(&self) -> &[f64] {
        &self.stds
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_dimensions() {
        assert!(matches!(
            ImageTensor::new(0, 2, 2, vec![]),
            Err(Error::ZeroDimension { .. })
        ));
        assert!(matches!(
            FeatureMap::new(1, 0, 2, vec![]),
            Err(Error::ZeroDimension { .. })
        ));
    }

    #[test]
    fn rejects_wrong_length() {
        let err = ImageTensor::new(1, 2, 2, vec![0.0; 3]).unwrap_err();
        assert!(matches!(
            err,
            Error::DataLength {
                expected: 4,
                got: 3,
                ..
            }
        ));
    }

    #[test]
    fn rejects_non_finite_samples() {
        assert!(matches!(
            ImageTensor::new(1, 1, 2, vec![0.5, f32::NAN]),
            Err(Error::NonFiniteSample { index: 1, .. })
        ));
        assert!(matches!(
            FeatureMap::new(1, 1, 2, vec![f32::INFINITY, 0.0]),
            Err(Error::NonFiniteSample { index: 0, .. })
        ));
    }

    #[test]
    fn channel_slices_are_contiguous_planes() {
        let t = FeatureMap::new(2, 2, 2, (0..8).map(|v| v as f32).collect()).unwrap();
        assert_eq!(t.channel(0), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(t.channel(1), &[4.0, 5.0, 6.0, 7.0]);
    }

    #[test]
    fn resample_preserves_constants() {
        let img = ImageTensor::filled(3, 4, 6, 0.37).unwrap();
        let out = img.resampled(7, 3).unwrap();
        assert_eq!(out.height(), 7);
        assert_eq!(out.width(), 3);
        assert!(out.samples().iter().all(|&v| (v - 0.37).abs() < 1e-6));
    }

    #[test]
    fn resample_identity_when_size_matches() {
        let img = ImageTensor::new(1, 2, 3, vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let out = img.resampled(2, 3).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn resample_interpolates_between_pixels() {
        // Doubling a 1x2 gradient: interior samples blend the two endpoints.
        let img = ImageTensor::new(1, 1, 2, vec![0.0, 1.0]).unwrap();
        let out = img.resampled(1, 4).unwrap();
        let s = out.samples();
        assert!((s[0] - 0.0).abs() < 1e-6);
        assert!((s[1] - 0.25).abs() < 1e-6);
        assert!((s[2] - 0.75).abs() < 1e-6);
        assert!((s[3] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stats_enforce_std_floor() {
        let err = ChannelStats::new(vec![0.5], vec![1e-4], 1e-5).unwrap_err();
        assert!(matches!(err, Error::InvalidStats { .. }));
        assert!(ChannelStats::new(vec![0.5], vec![1e-5_f64.sqrt()], 1e-5).is_ok());
    }

    #[test]
    fn stats_reject_length_mismatch() {
        assert!(ChannelStats::new(vec![0.0, 1.0], vec![1.0], 0.0).is_err());
    }
}
