//! Multichannel RIFF/WAVE reading (16-bit integer or 32-bit float PCM) and
//! 32-bit float writing.

use std::path::{Path, PathBuf};

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

/// Channel-major audio.
#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub sample_rate: u32,
    pub channels: Vec<Vec<f64>>,
}

impl Audio {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WavError {
    #[error("{path}: {source}")]
    Hound {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("{path}: unsupported sample format ({bits}-bit {format:?}); expected 16-bit integer or 32-bit float")]
    Unsupported {
        path: PathBuf,
        bits: u16,
        format: SampleFormat,
    },
    #[error("{0}: file contains no samples")]
    Empty(PathBuf),
    #[error("cannot write audio with ragged or missing channels")]
    Ragged,
}

pub fn read_wav(path: &Path) -> Result<Audio, WavError> {
    let wrap = |source| WavError::Hound {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = WavReader::open(path).map_err(wrap)?;
    let spec = reader.spec();
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(wrap)?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(wrap)?,
        (format, bits) => {
            return Err(WavError::Unsupported {
                path: path.to_path_buf(),
                bits,
                format,
            })
        }
    };
    let m = spec.channels as usize;
    if interleaved.is_empty() || m == 0 {
        return Err(WavError::Empty(path.to_path_buf()));
    }
    let channels = (0..m).map(|c| interleaved.iter().skip(c).step_by(m).copied().collect()).collect();
    Ok(Audio {
        sample_rate: spec.sample_rate,
        channels,
    })
}

pub fn write_wav(path: &Path, audio: &Audio) -> Result<(), WavError> {
    let len = audio.len();
    if audio.channels.is_empty() || audio.channels.iter().any(|c| c.len() != len) || audio.channels.len() > u16::MAX as usize {
        return Err(WavError::Ragged);
    }
    let wrap = |source| WavError::Hound {
        path: path.to_path_buf(),
        source,
    };
    let spec = WavSpec {
        channels: audio.channels.len() as u16,
        sample_rate: audio.sample_rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec).map_err(wrap)?;
    for t in 0..len {
        for c in &audio.channels {
            writer.write_sample(c[t] as f32).map_err(wrap)?;
        }
    }
    writer.finalize().map_err(wrap)
}
