//! Style adaptation primitives for image datasets.
//!
//! The crate groups three families of transforms that move an image's *style*
//! (low-level color and frequency statistics) toward a reference domain while
//! leaving its *content* intact:
//!
//! - **Spectral**: per-channel 2D Fourier decomposition and low-frequency
//!   amplitude swapping ([`spectral::fda_translate`]).
//! - **Channel statistics**: per-channel mean shifts ([`style::rgb_adapt`])
//!   and full mean/std re-normalization ([`style::sain`]), plus the
//!   content-biased cross-entropy built on the latter.
//! - **Pipeline**: deterministic seeded pairing of a source corpus against a
//!   target corpus and parallel batch translation, with persisted style
//!   statistics ([`pipeline::StyleBank`]) and domain-gap diagnostics
//!   ([`metrics`]).
//!
//! Everything downstream of the loaders is pure: the batch runner and the
//! diagnostics are deterministic functions of (inputs, seed), regardless of
//! worker count.

pub mod error;
pub mod image_io;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod selfcheck;
pub mod spectral;
pub mod style;
pub mod tensor;
pub mod tensor_file;

pub use error::{Error, Result};
pub use tensor::{ChannelStats, FeatureMap, ImageTensor, Planar};
