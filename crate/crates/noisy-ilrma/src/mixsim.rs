//! Point source plus diffuse noise rendered on a uniform linear array.
//!
//! Directional propagation is applied in the STFT domain: each source's
//! single-channel spectrogram is multiplied by the far-field steering vector
//! of its direction and resynthesised per microphone. Diffuse noise is the
//! sum of independent signals from many directions. The optional
//! reverberant mode additionally convolves every image with an independent
//! exponentially decaying Gaussian impulse response per microphone.

use std::f64::consts::LN_10;

use noisy_ilrma_core::geometry::{ArrayGeometry, GeometryError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::signals::{pink_noise, speech_like};
use crate::stft::{Stft, StftConfig, StftError};

pub const DEFAULT_SAMPLE_COUNT: usize = 140_800;
pub const DEFAULT_NOISE_DIRECTIONS: usize = 19;
pub const DEFAULT_SPACING: f64 = 0.05;
pub const DEFAULT_MIC_COUNT: usize = 4;
const TARGET_ANGLES: [f64; 4] = [0.0, 10.0, 20.0, 30.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reverb {
    pub rt60: f64,
    pub rir_length: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub geometry: ArrayGeometry,
    pub stft: StftConfig,
    pub target_angle: f64,
    pub noise_angles: Vec<f64>,
    pub input_snr: f64,
    pub target_signal: Vec<f64>,
    pub noise_signals: Vec<Vec<f64>>,
    pub reverb: Option<Reverb>,
}

/// Channel-major multichannel waveforms with
/// `mixture = target_image + noise_image`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub mixture: Vec<Vec<f64>>,
    pub target_image: Vec<Vec<f64>>,
    pub noise_image: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Stft(#[from] StftError),
    #[error("{angles} noise angles but {signals} noise signals")]
    NoiseCountMismatch { angles: usize, signals: usize },
    #[error("signal lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("input SNR must be finite")]
    InvalidSnr,
    #[error("invalid reverberation parameters")]
    InvalidReverb,
    #[error("{0} signal has zero energy")]
    Degenerate(&'static str),
}

/// `count` directions evenly spaced over [-90, 90] degrees.
pub fn spread_angles(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count).map(|k| -90.0 + 180.0 * k as f64 / (count - 1) as f64).collect(),
    }
}

/// Knobs of the bundled synthetic fixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureOptions {
    pub mic_count: usize,
    pub spacing: f64,
    pub input_snr: f64,
    pub sample_count: usize,
    pub noise_directions: usize,
    /// Defaults to one of 0/10/20/30 degrees chosen by the seed.
    pub target_angle: Option<f64>,
    pub reverb: Option<(f64, usize)>,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        Self {
            mic_count: DEFAULT_MIC_COUNT,
            spacing: DEFAULT_SPACING,
            input_snr: 0.0,
            sample_count: DEFAULT_SAMPLE_COUNT,
            noise_directions: DEFAULT_NOISE_DIRECTIONS,
            target_angle: None,
            reverb: None,
        }
    }
}

/// Synthetic speech-like target and independent pink noise per direction,
/// all drawn from `seed`.
pub fn fixture_spec(options: &FixtureOptions, stft: StftConfig, seed: u64) -> Result<MixtureSpec, SimError> {
    let geometry = ArrayGeometry::new(options.mic_count, options.spacing)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target_angle = options
        .target_angle
        .unwrap_or_else(|| TARGET_ANGLES[rng.random_range(0..TARGET_ANGLES.len())]);
    let target_signal = speech_like(&mut rng, options.sample_count, stft.sample_rate);
    let noise_angles = spread_angles(options.noise_directions);
    let noise_signals = noise_angles.iter().map(|_| pink_noise(&mut rng, options.sample_count)).collect();
    let reverb = options.reverb.map(|(rt60, rir_length)| Reverb {
        rt60,
        rir_length,
        seed: rng.random(),
    });
    Ok(MixtureSpec {
        geometry,
        stft,
        target_angle,
        noise_angles,
        input_snr: options.input_snr,
        target_signal,
        noise_signals,
        reverb,
    })
}

pub fn render_mixture(spec: &MixtureSpec) -> Result<GroundTruth, SimError> {
    if spec.noise_angles.len() != spec.noise_signals.len() {
        return Err(SimError::NoiseCountMismatch {
            angles: spec.noise_angles.len(),
            signals: spec.noise_signals.len(),
        });
    }
    if !spec.input_snr.is_finite() {
        return Err(SimError::InvalidSnr);
    }
    if let Some(r) = spec.reverb {
        if !(r.rt60 > 0.0 && r.rt60.is_finite()) || r.rir_length == 0 {
            return Err(SimError::InvalidReverb);
        }
    }
    let len = spec.target_signal.len();
    for n in &spec.noise_signals {
        if n.len() != len {
            return Err(SimError::LengthMismatch(len, n.len()));
        }
    }
    if energy(std::slice::from_ref(&spec.target_signal)) == 0.0 {
        return Err(SimError::Degenerate("target"));
    }
    if spec.noise_signals.is_empty() || energy(&spec.noise_signals) == 0.0 {
        return Err(SimError::Degenerate("noise"));
    }

    let stft = Stft::new(spec.stft)?;
    let mut rir_rng = spec.reverb.map(|r| ChaCha8Rng::seed_from_u64(r.seed));
    let mut image = |signal: &[f64], angle: f64| -> Result<Vec<Vec<f64>>, SimError> {
        let mut img = steer(&stft, &spec.geometry, signal, angle)?;
        if let (Some(r), Some(rng)) = (spec.reverb, rir_rng.as_mut()) {
            for ch in img.iter_mut() {
                let rir = decaying_rir(rng, r.rt60, r.rir_length, spec.stft.sample_rate);
                *ch = convolve_truncated(ch, &rir);
            }
        }
        Ok(img)
    };

    let target_image = image(&spec.target_signal, spec.target_angle)?;
    let mut noise_image = vec![vec![0.0; len]; spec.geometry.mic_count()];
    // fixed summation order keeps rendering bit-reproducible
    for (signal, &angle) in spec.noise_signals.iter().zip(&spec.noise_angles) {
        for (acc, ch) in noise_image.iter_mut().zip(image(signal, angle)?) {
            acc.iter_mut().zip(ch).for_each(|(a, x)| *a += x);
        }
    }

    let (et, en) = (energy(&target_image), energy(&noise_image));
    if et == 0.0 {
        return Err(SimError::Degenerate("target"));
    }
    if en == 0.0 {
        return Err(SimError::Degenerate("noise"));
    }
    let gain = (et / (en * 10f64.powf(spec.input_snr / 10.0))).sqrt();
    noise_image.iter_mut().flatten().for_each(|x| *x *= gain);
    let mixture = target_image
        .iter()
        .zip(&noise_image)
        .map(|(t, n)| t.iter().zip(n).map(|(a, b)| a + b).collect())
        .collect();
    Ok(GroundTruth {
        mixture,
        target_image,
        noise_image,
    })
}

/// Plane-wave image of `signal` arriving from `angle` at every microphone.
pub fn steer(stft: &Stft, geometry: &ArrayGeometry, signal: &[f64], angle: f64) -> Result<Vec<Vec<f64>>, SimError> {
    let config = stft.config();
    let single = stft.analyze(std::slice::from_ref(&signal.to_vec()))?;
    let (bins, frames, mics) = (single.freq_bins(), single.frames(), geometry.mic_count());
    let steering: Vec<Vec<Complex64>> = (0..bins)
        .map(|i| geometry.steering_vector(angle, config.bin_frequency(i)))
        .collect::<Result<_, _>>()?;
    let multi = noisy_ilrma_core::Spectrogram::from_fn(mics, bins, frames, |i, j, m| steering[i][m] * single.get(i, j, 0));
    Ok(stft.synthesize(&multi, Some(signal.len()))?)
}

fn decaying_rir<R: Rng>(rng: &mut R, rt60: f64, len: usize, sample_rate: u32) -> Vec<f64> {
    // amplitude falls by 60 dB over rt60; tail energy matches the direct path
    let decay = -3.0 * LN_10 / (rt60 * sample_rate as f64);
    let mut h: Vec<f64> = (0..len)
        .map(|n| if n == 0 { 0.0 } else { rng.sample::<f64, _>(StandardNormal) * (decay * n as f64).exp() })
        .collect();
    let tail: f64 = h.iter().map(|x| x * x).sum();
    if tail > 0.0 {
        h.iter_mut().for_each(|x| *x /= tail.sqrt());
    }
    h[0] = 1.0;
    h
}

/// Linear convolution via FFT, truncated to the input length.
fn convolve_truncated(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = (x.len() + h.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::new();
    let (fwd, inv) = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
    let pad = |s: &[f64]| {
        let mut v: Vec<Complex64> = s.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        v.resize(n, Complex64::new(0.0, 0.0));
        v
    };
    let (mut a, mut b) = (pad(x), pad(h));
    fwd.process(&mut a);
    fwd.process(&mut b);
    a.iter_mut().zip(&b).for_each(|(p, q)| *p *= q);
    inv.process(&mut a);
    a[..x.len()].iter().map(|z| z.re / n as f64).collect()
}

pub fn energy(channels: &[Vec<f64>]) -> f64 {
    channels.iter().flatten().map(|x| x * x).sum()
}
