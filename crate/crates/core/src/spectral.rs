//! Per-channel 2D Fourier analysis and low-frequency amplitude swapping.
//!
//! A real image decomposes into per-channel amplitude and phase planes laid
//! out DC-centered: the zero-frequency bin sits at `(H/2, W/2)` (floor), so a
//! "low-frequency window" is literally a centered rectangle. Translation
//! swaps the amplitudes inside that window for a target's while keeping the
//! source phase everywhere, then inverts back to pixels.
//!
//! All spectral arithmetic is f64: pixel data enters as f32 but the
//! forward/inverse transforms, amplitudes, and phases stay in double
//! precision until the final write-back.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::tensor::{FeatureMap, ImageTensor, Planar};

/// Largest per-pixel imaginary magnitude tolerated when a spectrum is mapped
/// back to pixels. A conjugate-symmetric spectrum inverts to machine-noise
/// imaginary parts (~1e-13); anything near this limit means the spectrum was
/// synthesized asymmetrically and the real image it "inverts" to is fiction.
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-4;

/// Per-channel amplitude and phase of a 2D Fourier transform, DC-centered.
///
/// Amplitude is non-negative everywhere; phase is normalized to `(-pi, pi]`.
/// Both planes are `C*H*W`, channel-major, same layout as the image types.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    channels: usize,
    height: usize,
    width: usize,
    amplitude: Vec<f64>,
    phase: Vec<f64>,
}

impl Spectrum {
    /// Validating constructor for spectra assembled by hand (tests, tools).
    /// [`decompose`] builds spectra directly and upholds these invariants by
    /// construction.
    pub fn new(
        channels: usize,
        height: usize,
        width: usize,
        amplitude: Vec<f64>,
        phase: Vec<f64>,
    ) -> Result<Self> {
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
        for len in [amplitude.len(), phase.len()] {
            if len != expected {
                return Err(Error::DataLength {
                    channels,
                    height,
                    width,
                    expected,
                    got: len,
                });
            }
        }
        for (index, &value) in amplitude.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteSample {
                    context: "Spectrum amplitude",
                    index,
                });
            }
            if value < 0.0 {
                return Err(Error::NegativeAmplitude { index, value });
            }
        }
        for (index, &value) in phase.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteSample {
                    context: "Spectrum phase",
                    index,
                });
            }
            if !(value > -std::f64::consts::PI && value <= std::f64::consts::PI) {
                return Err(Error::PhaseOutOfRange { index, value });
            }
        }
        Ok(Spectrum {
            channels,
            height,
            width,
            amplitude,
            phase,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }
    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    /// One channel's amplitude plane.
    pub fn channel_amplitude(&self, c: usize) -> &[f64] {
        let plane = self.height * self.width;
        &self.amplitude[c * plane..(c + 1) * plane]
    }

    /// One channel's phase plane.
    pub fn channel_phase(&self, c: usize) -> &[f64] {
        let plane = self.height * self.width;
        &self.phase[c * plane..(c + 1) * plane]
    }

    /// Amplitude as a float tensor (f32, lossy) for dumping to a tensor file.
    pub fn amplitude_map(&self) -> FeatureMap {
        let data = self.amplitude.iter().map(|&v| v as f32).collect();
        FeatureMap::new(self.channels, self.height, self.width, data)
            .expect("amplitude plane is finite and correctly sized")
    }

    /// Phase as a float tensor (f32, lossy) for dumping to a tensor file.
    pub fn phase_map(&self) -> FeatureMap {
        let data = self.phase.iter().map(|&v| v as f32).collect();
        FeatureMap::new(self.channels, self.height, self.width, data)
            .expect("phase plane is finite and correctly sized")
    }
}

/// Centered low-frequency window of relative size `beta` on an `H x W` grid.
///
/// The nominal window is `floor(beta*H) x floor(beta*W)` around the DC bin.
/// Even side lengths are rounded down to the nearest odd length: a window
/// must be symmetric under frequency negation (every bin `+k` paired with
/// `-k`), or the swapped spectrum loses conjugate symmetry and no real image
/// inverts from it. An even centered window always carries exactly one
/// unpaired bin on the negative-frequency edge, so evenness is precisely the
/// failure case. `beta = 0` keeps the window empty; `beta = 1` keeps the full
/// grid (which is negation-symmetric as a whole, wrapping through Nyquist).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaMask {
    beta: f64,
    height: usize,
    width: usize,
    /// Inclusive (low, high) row window, None when empty.
    rows: Option<(usize, usize)>,
    /// Inclusive (low, high) column window, None when empty.
    cols: Option<(usize, usize)>,
}

fn window_span(beta: f64, n: usize) -> Option<(usize, usize)> {
    let raw = ((beta * n as f64).floor() as usize).min(n);
    let len = match raw {
        0 => return None,
        r if r == n => n,
        r if r % 2 == 0 => r - 1,
        r => r,
    };
    if len == n {
        return Some((0, n - 1));
    }
    let center = n / 2;
    let half = len / 2;
    Some((center - half, center + half))
}

impl BetaMask {
    pub fn new(beta: f64, height: usize, width: usize) -> Result<Self> {
        if !beta.is_finite() || !(0.0..=1.0).contains(&beta) {
            return Err(Error::BetaOutOfRange { beta });
        }
        if height == 0 || width == 0 {
            return Err(Error::ZeroDimension {
                channels: 1,
                height,
                width,
            });
        }
        Ok(BetaMask {
            beta,
            height,
            width,
            rows: window_span(beta, height),
            cols: window_span(beta, width),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Whether the DC-centered bin `(row, col)` lies inside the window.
    pub fn contains(&self, row: usize, col: usize) -> bool {
        match (self.rows, self.cols) {
            (Some((r0, r1)), Some((c0, c1))) => row >= r0 && row <= r1 && col >= c0 && col <= c1,
            _ => false,
        }
    }

    /// Inclusive (row_low, row_high, col_low, col_high) bounds, None when the
    /// window is empty.
    pub fn bounds(&self) -> Option<(usize, usize, usize, usize)> {
        match (self.rows, self.cols) {
            (Some((r0, r1)), Some((c0, c1))) => Some((r0, r1, c0, c1)),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.bounds().is_none()
    }

    pub fn window_height(&self) -> usize {
        self.rows.map_or(0, |(lo, hi)| hi - lo + 1)
    }

    pub fn window_width(&self) -> usize {
        self.cols.map_or(0, |(lo, hi)| hi - lo + 1)
    }

    /// Number of bins inside the window.
    pub fn bin_count(&self) -> usize {
        self.window_height() * self.window_width()
    }
}

/// Circular 2D shift: output bin `((y+dy) mod h, (x+dx) mod w)` takes input
/// bin `(y, x)`.
fn roll<T: Copy + Default>(src: &[T], h: usize, w: usize, dy: usize, dx: usize) -> Vec<T> {
    let mut dst = vec![T::default(); src.len()];
    for y in 0..h {
        let ty = (y + dy) % h;
        for x in 0..w {
            let tx = (x + dx) % w;
            dst[ty * w + tx] = src[y * w + x];
        }
    }
    dst
}

fn transpose(src: &[Complex<f64>], h: usize, w: usize) -> Vec<Complex<f64>> {
    let mut dst = vec![Complex::default(); src.len()];
    for y in 0..h {
        for x in 0..w {
            dst[x * h + y] = src[y * w + x];
        }
    }
    dst
}

/// Unnormalized forward 2D FFT: row transforms, transpose, column
/// transforms, transpose back.
fn fft2d(buffer: &mut Vec<Complex<f64>>, h: usize, w: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(w)
    } else {
        planner.plan_fft_forward(w)
    };
    row_fft.process(buffer);
    let mut t = transpose(buffer, h, w);
    let col_fft = if inverse {
        planner.plan_fft_inverse(h)
    } else {
        planner.plan_fft_forward(h)
    };
    col_fft.process(&mut t);
    *buffer = transpose(&t, w, h);
}

/// Splits an image into per-channel 2D spectra: forward transform, shift to
/// the DC-centered layout, then `amplitude = |F|`, `phase = arg(F)` with
/// `-pi` folded to `pi`.
pub fn decompose(img: &ImageTensor) -> Spectrum {
    let (c, h, w) = (img.channels(), img.height(), img.width());
    let mut amplitude = Vec::with_capacity(c * h * w);
    let mut phase = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        let mut buf: Vec<Complex<f64>> = img
            .channel(ch)
            .iter()
            .map(|&v| Complex::new(v as f64, 0.0))
            .collect();
        fft2d(&mut buf, h, w, false);
        let shifted = roll(&buf, h, w, h / 2, w / 2);
        for z in shifted {
            amplitude.push(z.norm());
            let mut p = z.im.atan2(z.re);
            if p == -std::f64::consts::PI {
                p = std::f64::consts::PI;
            }
            phase.push(p);
        }
    }
    Spectrum {
        channels: c,
        height: h,
        width: w,
        amplitude,
        phase,
    }
}

/// Maps a spectrum back to pixels: un-shift, inverse transform (normalized
/// by `1/(H*W)`), verify the imaginary residue stays under
/// [`IMAG_RESIDUE_LIMIT`], and keep the real parts.
///
/// The output is not clamped; amplitude edits can legitimately leave [0,1].
pub fn recompose(spectrum: &Spectrum) -> Result<ImageTensor> {
    let (c, h, w) = (spectrum.channels, spectrum.height, spectrum.width);
    let norm = 1.0 / (h * w) as f64;
    let mut data = Vec::with_capacity(c * h * w);
    let mut residue = 0.0f64;
    for ch in 0..c {
        let amp = spectrum.channel_amplitude(ch);
        let pha = spectrum.channel_phase(ch);
        let centered: Vec<Complex<f64>> = amp
            .iter()
            .zip(pha)
            .map(|(&a, &p)| Complex::from_polar(a, p))
            .collect();
        // Inverse of the decompose shift: roll by the ceiling halves.
        let mut buf = roll(&centered, h, w, h - h / 2, w - w / 2);
        fft2d(&mut buf, h, w, true);
        for z in &buf {
            let re = z.re * norm;
            let im = (z.im * norm).abs();
            if im > residue {
                residue = im;
            }
            data.push(re as f32);
        }
    }
    if residue > IMAG_RESIDUE_LIMIT {
        return Err(Error::ImaginaryResidue {
            residue,
            limit: IMAG_RESIDUE_LIMIT,
        });
    }
    ImageTensor::new(c, h, w, data)
}

/// Translates `source` toward `target`'s style by swapping low-frequency
/// amplitudes: inside the `beta` window the output spectrum takes the
/// target's amplitude, outside it keeps the source's, and the source phase
/// is kept everywhere. Targets with different spatial dimensions are
/// bilinearly resampled to the source grid first.
pub fn fda_translate(source: &ImageTensor, target: &ImageTensor, beta: f64) -> Result<ImageTensor> {
    if source.channels() != target.channels() {
        return Err(Error::ChannelMismatch {
            left: source.channels(),
            right: target.channels(),
        });
    }
    let (c, h, w) = (source.channels(), source.height(), source.width());
    let mask = BetaMask::new(beta, h, w)?;
    let target = target.resampled(h, w)?;
    let src = decompose(source);
    let tgt = decompose(&target);

    let mut amplitude = src.amplitude.clone();
    if let Some((r0, r1, c0, c1)) = mask.bounds() {
        for ch in 0..c {
            let base = ch * h * w;
            for row in r0..=r1 {
                for col in c0..=c1 {
                    let i = base + row * w + col;
                    amplitude[i] = tgt.amplitude[i];
                }
            }
        }
    }
    recompose(&Spectrum {
        channels: c,
        height: h,
        width: w,
        amplitude,
        phase: src.phase,
    })
}
