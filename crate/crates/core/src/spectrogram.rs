use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

/// Multichannel complex time-frequency tensor indexed `(bin, frame, channel)`.
///
/// Channels are innermost so the observation vector of one time-frequency
/// point is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    channels: usize,
    freq_bins: usize,
    frames: usize,
    data: Vec<Complex64>,
}

impl Spectrogram {
    pub fn zeros(channels: usize, freq_bins: usize, frames: usize) -> Self {
        Self {
            channels,
            freq_bins,
            frames,
            data: vec![Complex64::new(0.0, 0.0); channels * freq_bins * frames],
        }
    }

    pub fn from_fn(
        channels: usize,
        freq_bins: usize,
        frames: usize,
        mut f: impl FnMut(usize, usize, usize) -> Complex64,
    ) -> Self {
        let mut s = Self::zeros(channels, freq_bins, frames);
        for i in 0..freq_bins {
            for j in 0..frames {
                for m in 0..channels {
                    s.data[(i * frames + j) * channels + m] = f(i, j, m);
                }
            }
        }
        s
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn freq_bins(&self) -> usize {
        self.freq_bins
    }

    #[inline]
    pub fn frames(&self) -> usize {
        self.frames
    }

    #[inline]
    pub fn get(&self, bin: usize, frame: usize, channel: usize) -> Complex64 {
        self.data[(bin * self.frames + frame) * self.channels + channel]
    }

    #[inline]
    pub fn set(&mut self, bin: usize, frame: usize, channel: usize, value: Complex64) {
        self.data[(bin * self.frames + frame) * self.channels + channel] = value;
    }

    /// The `channels`-long observation vector at one time-frequency point.
    #[inline]
    pub fn vector(&self, bin: usize, frame: usize) -> &[Complex64] {
        let start = (bin * self.frames + frame) * self.channels;
        &self.data[start..start + self.channels]
    }

    #[inline]
    pub fn vector_mut(&mut self, bin: usize, frame: usize) -> &mut [Complex64] {
        let start = (bin * self.frames + frame) * self.channels;
        &mut self.data[start..start + self.channels]
    }

    /// All frames of one bin, frame-major.
    pub fn bin(&self, bin: usize) -> &[Complex64] {
        let len = self.frames * self.channels;
        &self.data[bin * len..(bin + 1) * len]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
}
