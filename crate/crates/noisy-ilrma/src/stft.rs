//! Short-time Fourier transform with half-window edge padding and
//! least-squares (dual window) overlap-add synthesis.

use std::f64::consts::PI;
use std::sync::Arc;

use noisy_ilrma_core::Spectrogram;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Hamming,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftConfig {
    pub sample_rate: u32,
    pub window_length: usize,
    pub hop_length: usize,
    pub window_kind: WindowKind,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            window_length: 1024,
            hop_length: 512,
            window_kind: WindowKind::Hamming,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StftError {
    #[error("invalid STFT configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("signal has no channels or no samples")]
    EmptySignal,
    #[error("signal has {len} samples, shorter than the window ({window})")]
    TooShort { len: usize, window: usize },
    #[error("channel {channel} has {found} samples, expected {expected}")]
    RaggedChannels { channel: usize, expected: usize, found: usize },
    #[error("spectrogram has {found} frequency bins but the configuration implies {expected}")]
    ConfigMismatch { expected: usize, found: usize },
    #[error("requested length {length} is not covered by {frames} frames")]
    LengthNotCovered { length: usize, frames: usize },
}

impl StftConfig {
    pub fn validate(&self) -> Result<(), StftError> {
        if self.sample_rate == 0 {
            return Err(StftError::InvalidConfig("sample rate must be positive"));
        }
        if self.window_length < 2 || self.window_length % 2 != 0 {
            return Err(StftError::InvalidConfig("window length must be even and at least 2"));
        }
        if self.hop_length == 0 || self.hop_length > self.window_length {
            return Err(StftError::InvalidConfig("hop length must be in 1..=window length"));
        }
        Ok(())
    }

    pub fn freq_bins(&self) -> usize {
        self.window_length / 2 + 1
    }

    /// Frame count for a signal of `len` samples.
    pub fn frames_for(&self, len: usize) -> usize {
        len / self.hop_length + 1
    }

    pub fn bin_frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.sample_rate as f64 / self.window_length as f64
    }

    pub fn window(&self) -> Vec<f64> {
        let n = self.window_length as f64;
        match self.window_kind {
            // periodic form, so the frame sum is flat at integer overlaps
            WindowKind::Hamming => (0..self.window_length)
                .map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / n).cos())
                .collect(),
        }
    }
}

/// Planned transforms for one configuration. Cheap to clone.
#[derive(Clone)]
pub struct Stft {
    config: StftConfig,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Stft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stft").field("config", &self.config).finish()
    }
}

impl Stft {
    pub fn new(config: StftConfig) -> Result<Self, StftError> {
        config.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            config,
            window: config.window(),
            forward: planner.plan_fft_forward(config.window_length),
            inverse: planner.plan_fft_inverse(config.window_length),
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    /// One-sided STFT of every channel. Channels must have equal length of at
    /// least one window.
    pub fn analyze(&self, channels: &[Vec<f64>]) -> Result<Spectrogram, StftError> {
        let len = check_channels(channels)?;
        let n = self.config.window_length;
        if len < n {
            return Err(StftError::TooShort { len, window: n });
        }
        let (hop, half) = (self.config.hop_length, n / 2);
        let bins = self.config.freq_bins();
        let frames = self.config.frames_for(len);
        let mut spec = Spectrogram::zeros(channels.len(), bins, frames);
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        for (m, signal) in channels.iter().enumerate() {
            for j in 0..frames {
                // frame j covers signal[j*hop - half .. j*hop - half + n], zero outside
                for (k, b) in buf.iter_mut().enumerate() {
                    let t = (j * hop + k).wrapping_sub(half);
                    let x = if t < len { signal[t] } else { 0.0 };
                    *b = Complex64::new(x * self.window[k], 0.0);
                }
                self.forward.process_with_scratch(&mut buf, &mut scratch);
                for (i, &v) in buf[..bins].iter().enumerate() {
                    spec.set(i, j, m, v);
                }
            }
        }
        Ok(spec)
    }

    /// Inverse transform by overlap-add with the dual window
    /// `w / sum_j w_j^2`, cropped to `length` samples (by default
    /// `(frames - 1) * hop`).
    pub fn synthesize(&self, spec: &Spectrogram, length: Option<usize>) -> Result<Vec<Vec<f64>>, StftError> {
        let bins = self.config.freq_bins();
        if spec.freq_bins() != bins {
            return Err(StftError::ConfigMismatch {
                expected: bins,
                found: spec.freq_bins(),
            });
        }
        let (n, hop) = (self.config.window_length, self.config.hop_length);
        let half = n / 2;
        let frames = spec.frames();
        let length = length.unwrap_or(frames.saturating_sub(1) * hop);
        if frames == 0 || length / hop + 1 > frames {
            return Err(StftError::LengthNotCovered { length, frames });
        }
        let padded = (frames - 1) * hop + n;
        let mut norm = vec![0.0; padded];
        for j in 0..frames {
            for (k, w) in self.window.iter().enumerate() {
                norm[j * hop + k] += w * w;
            }
        }

        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];
        let scale = 1.0 / n as f64;
        let mut out = Vec::with_capacity(spec.channels());
        for m in 0..spec.channels() {
            let mut acc = vec![0.0; padded];
            for j in 0..frames {
                for i in 0..bins {
                    buf[i] = spec.get(i, j, m);
                }
                // Hermitian extension; DC and Nyquist must be real
                buf[0].im = 0.0;
                buf[half].im = 0.0;
                for i in 1..half {
                    buf[n - i] = buf[i].conj();
                }
                self.inverse.process_with_scratch(&mut buf, &mut scratch);
                for (k, w) in self.window.iter().enumerate() {
                    acc[j * hop + k] += buf[k].re * scale * w;
                }
            }
            out.push(
                (half..half + length)
                    .map(|t| if norm[t] > 0.0 { acc[t] / norm[t] } else { 0.0 })
                    .collect(),
            );
        }
        Ok(out)
    }
}

fn check_channels(channels: &[Vec<f64>]) -> Result<usize, StftError> {
    let len = channels.first().map_or(0, Vec::len);
    if len == 0 {
        return Err(StftError::EmptySignal);
    }
    for (channel, c) in channels.iter().enumerate() {
        if c.len() != len {
            return Err(StftError::RaggedChannels {
                channel,
                expected: len,
                found: c.len(),
            });
        }
    }
    Ok(len)
}
