//! Numerical core of a diffuse-noise-aware blind source extractor.
//!
//! Given an `M`-channel STFT observation containing one point source and
//! diffuse noise, the extractor estimates per-frequency demixing matrices
//! whose first output carries the target (plus residual noise) and whose
//! remaining outputs carry noise only. Demixing filters come from a
//! generalized eigendecomposition of two variance-weighted covariances;
//! source variances follow an NMF model updated by majorization-minimization,
//! optionally switched to free variances with an inverse-gamma prior once the
//! filters have settled. A multichannel Wiener filter produces the output.
//!
//! The crate is `no_std` and only needs `alloc`. Transforms, file formats
//! and the command line live in the `noisy-ilrma` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod demix;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod linalg;
pub mod model;
pub mod spectrogram;

#[cfg(test)]
mod testutil;

pub use demix::{run_noisy_ilrma, AlgorithmConfig, ExtractionResult, NoisyIlrma, Regime, TraceEntry};
pub use error::{Error, Result, Warning};
pub use spectrogram::Spectrogram;
