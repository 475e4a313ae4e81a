//! Blind extraction of a single target source from diffuse noise with a
//! microphone array: STFT front end, synthetic mixture rendering, WAV and
//! CSV IO, and the `noisy-ilrma` command line. The numerical work lives in
//! [`noisy_ilrma_core`], re-exported here as [`core`].

use std::path::{Path, PathBuf};

pub use noisy_ilrma_core as core;

pub mod bench;
pub mod cli;
pub mod config;
pub mod mixsim;
pub mod pipeline;
pub mod signals;
pub mod stft;
pub mod wav;

use noisy_ilrma_core::eval::EvalError;
use noisy_ilrma_core::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] noisy_ilrma_core::Error),
    #[error(transparent)]
    Stft(#[from] stft::StftError),
    #[error(transparent)]
    Simulation(#[from] mixsim::SimError),
    #[error("SDR evaluation: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Wav(#[from] wav::WavError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 3 for numerical breakdown of the extractor, 2 for everything the
    /// caller can fix (arguments, files, configuration).
    pub fn exit_code(&self) -> i32 {
        use noisy_ilrma_core::Error as E;
        match self {
            Error::Core(E::Usage(_) | E::DimensionMismatch { .. } | E::Model(ModelError::InvalidPrior { .. })) => cli::EXIT_USAGE,
            Error::Core(_) => cli::EXIT_NUMERICAL,
            _ => cli::EXIT_USAGE,
        }
    }
}
