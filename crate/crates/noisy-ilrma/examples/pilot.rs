//! Pilot run used to calibrate the regression thresholds.
//!
//! For each seed, renders the default fixture (4 mics, 0 dB, 19 noise
//! directions) and prints the final SDR improvement of the switching and
//! non-switching variants, then the noise-free SI-SDR (2 mics, target at
//! 30 degrees, 20 iterations, no switching).
//!
//! cargo run --release -p noisy-ilrma --example pilot -- [seeds] [first_seed] [alpha]
//!
//! Defaults were calibrated on seeds 100..110; the acceptance suite uses
//! seeds 0..10.

use std::time::Instant;

use noisy_ilrma::bench::median;
use noisy_ilrma::core::eval::sdr;
use noisy_ilrma::core::AlgorithmConfig;
use noisy_ilrma::mixsim::{fixture_spec, render_mixture, steer, FixtureOptions};
use noisy_ilrma::pipeline::{extract, Reference};
use noisy_ilrma::stft::{Stft, StftConfig};

fn main() -> Result<(), noisy_ilrma::Error> {
    let arg = |n: usize| std::env::args().nth(n);
    let seeds: u64 = arg(1).map_or(10, |s| s.parse().expect("seed count"));
    let first: u64 = arg(2).map_or(0, |s| s.parse().expect("first seed"));
    let alpha: f64 = arg(3).map_or(AlgorithmConfig::default().alpha, |s| s.parse().expect("alpha"));
    let stft = Stft::new(StftConfig::default())?;
    let (mut on, mut off, mut clean) = (Vec::new(), Vec::new(), Vec::new());
    let start = Instant::now();
    for seed in first..first + seeds {
        let spec = fixture_spec(&FixtureOptions::default(), StftConfig::default(), seed)?;
        let truth = render_mixture(&spec)?;
        let mut row = Vec::new();
        for switch in [Some(4), None] {
            let config = AlgorithmConfig {
                seed,
                alpha,
                switch_iteration: switch,
                ..Default::default()
            };
            let reference = Reference {
                signal: &truth.target_image[0],
                taps: 512,
            };
            let out = extract(&stft, &truth.mixture, &config, Some(reference), false)?;
            row.push(out.report.expect("reference given").sdr_improvement);
        }

        let options = FixtureOptions {
            mic_count: 2,
            target_angle: Some(30.0),
            ..Default::default()
        };
        let spec2 = fixture_spec(&options, StftConfig::default(), seed)?;
        let image = steer(&stft, &spec2.geometry, &spec2.target_signal, 30.0)?;
        let config = AlgorithmConfig {
            seed,
            outer_iterations: 20,
            switch_iteration: None,
            ..Default::default()
        };
        let out = extract(&stft, &image, &config, None, false)?;
        let si = sdr(&out.extracted[0], &image[0], 1)?;

        println!(
            "seed {seed:3} angle {:4.0}  switch {:6.2} dB  noswitch {:6.2} dB  noise-free SI-SDR {si:6.1} dB",
            spec.target_angle, row[0], row[1]
        );
        on.push(row[0]);
        off.push(row[1]);
        clean.push(si);
    }
    let wins = on.iter().zip(&off).filter(|(a, b)| a > b).count();
    println!(
        "median switch {:.2} dB, noswitch {:.2} dB, switch wins {wins}/{seeds}, noise-free median {:.1} dB, {:.1} s",
        median(&mut on).unwrap(),
        median(&mut off).unwrap(),
        median(&mut clean).unwrap(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
