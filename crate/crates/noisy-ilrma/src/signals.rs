//! Synthetic stand-ins for speech and ambient noise.
//!
//! "Speech" is a sequence of syllable-like bursts: a glottal pulse train
//! mixed with aspiration noise, shaped by two resonators (formants) and a
//! raised-cosine envelope, separated by short pauses. It is sparse in time
//! and frequency, which is what the low-rank target model relies on. Noise
//! is stationary pink noise.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

/// Second-order resonator with unity peak gain.
struct Resonator {
    a1: f64,
    a2: f64,
    gain: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bandwidth: f64, sample_rate: f64) -> Self {
        let r = (-PI * bandwidth / sample_rate).exp();
        let theta = 2.0 * PI * freq / sample_rate;
        Self {
            a1: 2.0 * r * theta.cos(),
            a2: -r * r,
            gain: 1.0 - r,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn process(&mut self, x: f64) -> f64 {
        let y = self.gain * x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

pub fn speech_like<R: Rng>(rng: &mut R, len: usize, sample_rate: u32) -> Vec<f64> {
    let fs = sample_rate as f64;
    let mut out = vec![0.0; len];
    let mut t = (rng.random_range(0.02..0.15) * fs) as usize;
    while t < len {
        let dur = ((rng.random_range(0.08..0.3) * fs) as usize).min(len - t);
        let f0 = rng.random_range(90.0..240.0);
        let voicing = rng.random_range(0.5..1.0);
        let mut f1 = Resonator::new(rng.random_range(300.0..900.0), 80.0, fs);
        let mut f2 = Resonator::new(rng.random_range(900.0..2800.0), 120.0, fs);
        let mut f3 = Resonator::new(rng.random_range(2500.0..3800.0), 200.0, fs);
        let level = rng.random_range(0.3..1.0);
        let mut phase = 0.0;
        for k in 0..dur {
            phase += f0 / fs;
            let pulse = if phase >= 1.0 {
                phase -= 1.0;
                1.0
            } else {
                0.0
            };
            let noise: f64 = rng.sample(StandardNormal);
            let e = voicing * pulse * 8.0 + (1.0 - voicing) * noise * 0.3 + 0.02 * noise;
            let y = f1.process(e) + 0.6 * f2.process(e) + 0.3 * f3.process(e);
            let env = 0.5 - 0.5 * (2.0 * PI * k as f64 / dur as f64).cos();
            out[t + k] = level * env * y;
        }
        t += dur + (rng.random_range(0.03..0.25) * fs) as usize;
    }
    normalize_peak(&mut out, 0.5);
    out
}

/// Pink (1/f) noise via Kellet's three-pole approximation.
pub fn pink_noise<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    let mut out: Vec<f64> = (0..len)
        .map(|_| {
            let w: f64 = rng.sample(StandardNormal);
            b0 = 0.99765 * b0 + w * 0.0990460;
            b1 = 0.96300 * b1 + w * 0.2965164;
            b2 = 0.57000 * b2 + w * 1.0526913;
            b0 + b1 + b2 + w * 0.1848
        })
        .collect();
    normalize_peak(&mut out, 0.5);
    out
}

fn normalize_peak(x: &mut [f64], peak: f64) {
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max > 0.0 {
        x.iter_mut().for_each(|v| *v *= peak / max);
    }
}
