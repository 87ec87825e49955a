//! Crate-wide error type.

use std::path::PathBuf;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by tensor construction, file formats, transforms, and the
/// batch pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode image {path}: {message}")]
    ImageDecode { path: PathBuf, message: String },

    #[error("cannot encode image {path}: {message}")]
    ImageEncode { path: PathBuf, message: String },

    #[error("unsupported color model {model} in {path} (8-bit grayscale or RGB required)")]
    UnsupportedColorModel { path: PathBuf, model: String },

    #[error("unsupported bit depth {bits} in {path} (8-bit samples required)")]
    UnsupportedBitDepth { path: PathBuf, bits: u32 },

    #[error("tensor dimensions must be nonzero, got {channels}x{height}x{width}")]
    ZeroDimension {
        channels: usize,
        height: usize,
        width: usize,
    },

    #[error("sample buffer holds {got} values but {channels}x{height}x{width} needs {expected}")]
    DataLength {
        channels: usize,
        height: usize,
        width: usize,
        expected: usize,
        got: usize,
    },

    #[error("non-finite sample at index {index} ({context})")]
    NonFiniteSample { context: &'static str, index: usize },

    #[error("sample {value} at index {index} is outside [0,1] and clamping is disabled")]
    SampleOutOfRange { index: usize, value: f32 },

    #[error("{path} is not a tensor file (bad magic)")]
    BadMagic { path: PathBuf },

    #[error("tensor file {path} has unsupported version {got} (expected {expected})")]
    VersionMismatch {
        path: PathBuf,
        got: u16,
        expected: u16,
    },

    #[error("tensor file {path} has unsupported dtype code {got}")]
    UnsupportedDtype { path: PathBuf, got: u16 },

    #[error("tensor file {path} has rank {got}, expected {expected}")]
    RankMismatch {
        path: PathBuf,
        got: u32,
        expected: u32,
    },

    #[error(
        "tensor file {path} is truncated: header promises {expected} samples, payload holds {got}"
    )]
    TruncatedPayload {
        path: PathBuf,
        expected: u64,
        got: u64,
    },

    #[error("tensor file {path} has {extra} trailing bytes after the payload")]
    TrailingBytes { path: PathBuf, extra: u64 },

    #[error("tensor file {path} declares dimensions that overflow the address space")]
    DimensionOverflow { path: PathBuf },

    #[error("channel counts differ: {left} vs {right}")]
    ChannelMismatch { left: usize, right: usize },

    #[error("beta must lie in [0,1], got {beta}")]
    BetaOutOfRange { beta: f64 },

    #[error("inverse transform left imaginary residue {residue:.3e} above {limit:.3e}; the spectrum is not conjugate-symmetric")]
    ImaginaryResidue { residue: f64, limit: f64 },

    #[error("spectrum amplitude must be non-negative, got {value} at index {index}")]
    NegativeAmplitude { index: usize, value: f64 },

    #[error("phase {value} at index {index} is outside (-pi, pi]")]
    PhaseOutOfRange { index: usize, value: f64 },

    #[error("epsilon must be a positive finite number, got {value}")]
    NonPositiveEpsilon { value: f64 },

    #[error("epsilon must be a non-negative finite number, got {value}")]
    NegativeEpsilon { value: f64 },

    #[error("target mean vector has {got} entries, source has {expected} channels")]
    MeanLength { expected: usize, got: usize },

    #[error("label {label} at pixel {index} is out of range for {classes} classes")]
    LabelOutOfRange {
        index: usize,
        label: u32,
        classes: usize,
    },

    #[error("label map holds {got} entries, scores are {height}x{width} = {expected}")]
    LabelLength {
        height: usize,
        width: usize,
        expected: usize,
        got: usize,
    },

    #[error("every pixel is ignored; the loss is undefined")]
    AllPixelsIgnored,

    #[error("channel statistics are malformed: {message}")]
    InvalidStats { message: String },

    #[error("directory {path} does not exist or is not a directory")]
    MissingDirectory { path: PathBuf },

    #[error("no supported images under {path}")]
    EmptyCorpus { path: PathBuf },

    #[error("pairing {pairing} is not valid for mode {mode}")]
    IncompatiblePlan { mode: String, pairing: String },

    #[error("worker count must be at least 1")]
    ZeroWorkers,

    #[error("assignments for {first} and {second} would both write {output}")]
    OutputCollision {
        first: String,
        second: String,
        output: String,
    },

    #[error("style banks disagree: {message}")]
    BankMismatch { message: String },

    #[error("cannot parse style bank {path} at line {line}: {message}")]
    BankParse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("beta window is empty for every sampled pair; spectral gap is undefined")]
    EmptySpectralWindow,

    #[error("sample count must be at least 1")]
    ZeroSamples,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
