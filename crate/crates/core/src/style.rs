//! Channel-statistic style operations.
//!
//! Style here means per-channel first and second moments: the mean and the
//! epsilon-regularized population standard deviation. `rgb_adapt` moves the
//! mean only; `sain` re-normalizes both moments to a target's; the
//! content-biased cross-entropy scores a prediction tensor after restyling
//! it toward a target tensor's statistics.
//!
//! Statistics and transform coefficients are computed in f64; pixel data is
//! rounded back to f32 once per sample. Restyling is a per-channel positive
//! affine map, so it preserves the ordering of samples within each channel.

use crate::error::{Error, Result};
use crate::tensor::{ChannelStats, ImageTensor, Planar};

/// Default epsilon under the square root of the standard deviation.
pub const DEFAULT_EPSILON: f64 = 1e-5;

/// Default label value excluded from the cross-entropy.
pub const DEFAULT_IGNORE_INDEX: u32 = 255;

/// Epsilon configuration for the variance-based operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SainConfig {
    epsilon: f64,
}

impl SainConfig {
    /// `epsilon` must be positive: it keeps the normalization well-defined on
    /// constant channels, where the raw variance is zero.
    pub fn new(epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::NonPositiveEpsilon { value: epsilon });
        }
        Ok(SainConfig { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Default for SainConfig {
    fn default() -> Self {
        SainConfig {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Per-channel arithmetic mean over all `H*W` samples.
pub fn channel_mean<T: Planar>(t: &T) -> Vec<f64> {
    let n = t.pixels_per_channel() as f64;
    (0..t.channels())
        .map(|c| t.channel(c).iter().map(|&v| v as f64).sum::<f64>() / n)
        .collect()
}

/// Per-channel population standard deviation with `epsilon` added under the
/// square root: `sqrt(sum((x - mean)^2) / (H*W) + epsilon)`.
///
/// `epsilon` may be zero here (the raw deviation); the restyling operations
/// take a [`SainConfig`], which enforces positivity.
pub fn channel_std<T: Planar>(t: &T, epsilon: f64) -> Result<Vec<f64>> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::NegativeEpsilon { value: epsilon });
    }
    let n = t.pixels_per_channel() as f64;
    Ok((0..t.channels())
        .map(|c| {
            let plane = t.channel(c);
            let mean = plane.iter().map(|&v| v as f64).sum::<f64>() / n;
            let var = plane
                .iter()
                .map(|&v| {
                    let d = v as f64 - mean;
                    d * d
                })
                .sum::<f64>()
                / n;
            (var + epsilon).sqrt()
        })
        .collect())
}

/// Mean and deviation bundled as [`ChannelStats`].
pub fn channel_stats<T: Planar>(t: &T, epsilon: f64) -> Result<ChannelStats> {
    ChannelStats::new(channel_mean(t), channel_std(t, epsilon)?, epsilon)
}

/// Shifts every channel by a constant so its mean lands exactly on
/// `target_mean[c]`. The shift is spatially constant per channel and the
/// output is not clamped: a later save decides what to do with samples that
/// leave [0,1].
pub fn rgb_adapt(source: &ImageTensor, target_mean: &[f64]) -> Result<ImageTensor> {
    if target_mean.len() != source.channels() {
        return Err(Error::MeanLength {
            expected: source.channels(),
            got: target_mean.len(),
        });
    }
    if let Some(v) = target_mean.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidStats {
            message: format!("non-finite target mean {v}"),
        });
    }
    let source_mean = channel_mean(source);
    let plane = source.pixels_per_channel();
    let mut data = Vec::with_capacity(source.channels() * plane);
    for c in 0..source.channels() {
        let shift = target_mean[c] - source_mean[c];
        data.extend(source.channel(c).iter().map(|&v| (v as f64 + shift) as f32));
    }
    ImageTensor::new(source.channels(), source.height(), source.width(), data)
}

/// Re-normalizes each source channel to the target's mean and deviation:
/// the channel is centered, scaled by `sigma_target / sigma_source`, and
/// shifted to the target mean. Spatial dimensions may differ; statistics are
/// per channel. With `target = source` the scale is exactly 1 and the shift
/// exactly 0, so the input is returned bit-for-bit.
pub fn sain<T: Planar>(source: &T, target: &T, cfg: SainConfig) -> Result<T> {
    if source.channels() != target.channels() {
        return Err(Error::ChannelMismatch {
            left: source.channels(),
            right: target.channels(),
        });
    }
    let mu_s = channel_mean(source);
    let mu_t = channel_mean(target);
    let sd_s = channel_std(source, cfg.epsilon)?;
    let sd_t = channel_std(target, cfg.epsilon)?;
    let plane = source.pixels_per_channel();
    let mut data = Vec::with_capacity(source.channels() * plane);
    for c in 0..source.channels() {
        let scale = sd_t[c] / sd_s[c];
        let shift = mu_t[c] - scale * mu_s[c];
        data.extend(
            source
                .channel(c)
                .iter()
                .map(|&v| (scale * v as f64 + shift) as f32),
        );
    }
    T::from_parts(source.channels(), source.height(), source.width(), data)
}

/// Cross-entropy of class scores after restyling them toward a target
/// tensor's statistics: the scores are passed through [`sain`], softmaxed
/// per pixel over the class dimension, and the mean negative log-likelihood
/// of the labeled class is taken over pixels whose label is not
/// `ignore_index`.
///
/// When the target carries the same statistics as the source, the restyle is
/// the identity and this reduces to plain softmax cross-entropy.
pub fn sain_cross_entropy(
    source_scores: &crate::tensor::FeatureMap,
    target_scores: &crate::tensor::FeatureMap,
    labels: &[u32],
    ignore_index: u32,
    cfg: SainConfig,
) -> Result<f64> {
    let (classes, h, w) = (
        source_scores.channels(),
        source_scores.height(),
        source_scores.width(),
    );
    if labels.len() != h * w {
        return Err(Error::LabelLength {
            height: h,
            width: w,
            expected: h * w,
            got: labels.len(),
        });
    }
    let restyled = sain(source_scores, target_scores, cfg)?;
    let plane = h * w;
    let samples = restyled.samples();
    let mut total = 0.0f64;
    let mut counted = 0usize;
    for (index, &label) in labels.iter().enumerate() {
        if label == ignore_index {
            continue;
        }
        if label as usize >= classes {
            return Err(Error::LabelOutOfRange {
                index,
                label,
                classes,
            });
        }
        // Per-pixel softmax NLL in f64, stabilized by the max score.
        let mut max = f64::NEG_INFINITY;
        for c in 0..classes {
            max = max.max(samples[c * plane + index] as f64);
        }
        let mut denom = 0.0f64;
        for c in 0..classes {
            denom += (samples[c * plane + index] as f64 - max).exp();
        }
        let z = samples[label as usize * plane + index] as f64 - max;
        total += denom.ln() - z;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::AllPixelsIgnored);
    }
    Ok(total / counted as f64)
}
