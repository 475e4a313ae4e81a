//! Run configuration: a plain `key = value` file, overridden by flags.
//!
//! ```text
//! # comments start with '#'
//! iterations = 50
//! switch_at = never
//! bases = 3
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use noisy_ilrma_core::eval::DEFAULT_TAPS;
use noisy_ilrma_core::AlgorithmConfig;

use crate::mixsim::FixtureOptions;
use crate::stft::StftConfig;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{origin}: unknown key '{key}'")]
    UnknownKey { origin: String, key: String },
    #[error("{origin}: invalid value '{value}' for '{key}'")]
    InvalidValue { origin: String, key: String, value: String },
    #[error("{origin}: expected 'key = value'")]
    Syntax { origin: String },
    #[error("cannot read config {path}: {message}")]
    Read { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Anechoic,
    Reverberant,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Anechoic => "anechoic",
            Condition::Reverberant => "reverberant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variants {
    Both,
    Switching,
    NonSwitching,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IoConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub seeds: usize,
    pub variants: Variants,
    pub conditions: Vec<Condition>,
    pub rt60: f64,
    pub rir_length: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            seeds: 3,
            variants: Variants::Both,
            conditions: vec![Condition::Anechoic],
            rt60: 0.3,
            rir_length: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub stft: StftConfig,
    pub algorithm: AlgorithmConfig,
    pub fixture: FixtureOptions,
    /// FIR projection length of the SDR metric.
    pub taps: usize,
    pub io: IoConfig,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            stft: StftConfig::default(),
            algorithm: AlgorithmConfig::default(),
            fixture: FixtureOptions::default(),
            taps: DEFAULT_TAPS,
            io: IoConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

fn parse<T: FromStr>(origin: &str, key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::InvalidValue {
        origin: origin.to_owned(),
        key: key.to_owned(),
        value: value.to_owned(),
    })
}

/// `never` or an iteration count.
pub fn parse_switch(value: &str) -> Option<Option<usize>> {
    match value.trim() {
        "never" | "none" => Some(None),
        v => v.parse().ok().map(Some),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut config = Self::default();
        config.apply_text(&text, &path.display().to_string())?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str, name: &str) -> Result<(), ConfigError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let origin = format!("{name}:{}", n + 1);
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { origin: origin.clone() })?;
            self.set(key.trim(), value.trim(), &origin)?;
        }
        Ok(())
    }

    /// Set one option; `origin` labels errors (file:line or flag name).
    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), ConfigError> {
        let p = |v: &str| -> Result<f64, ConfigError> { parse(origin, key, v) };
        let u = |v: &str| -> Result<usize, ConfigError> { parse(origin, key, v) };
        let invalid = || ConfigError::InvalidValue {
            origin: origin.to_owned(),
            key: key.to_owned(),
            value: value.to_owned(),
        };
        let a = &mut self.algorithm;
        match key {
            "sample_rate" => self.stft.sample_rate = parse(origin, key, value)?,
            "window_length" => self.stft.window_length = u(value)?,
            "hop_length" => self.stft.hop_length = u(value)?,
            "bases" => a.basis_count = u(value)?,
            "iterations" => a.outer_iterations = u(value)?,
            "schedule_ratio" => a.schedule_ratio = u(value)?,
            "warmup_sweeps" => a.warmup_sweeps = u(value)?,
            "switch_at" => a.switch_iteration = parse_switch(value).ok_or_else(invalid)?,
            "alpha" => a.alpha = p(value)?,
            "beta_scale" => a.beta_scale = p(value)?,
            "nmf_floor" => a.floors.nmf = p(value)?,
            "variance_floor" => a.floors.variance = p(value)?,
            "seed" => a.seed = parse(origin, key, value)?,
            "mics" => self.fixture.mic_count = u(value)?,
            "spacing" => self.fixture.spacing = p(value)?,
            "snr" => self.fixture.input_snr = p(value)?,
            "samples" => self.fixture.sample_count = u(value)?,
            "noise_directions" => self.fixture.noise_directions = u(value)?,
            "target_angle" => self.fixture.target_angle = Some(p(value)?),
            "reverb" => {
                self.fixture.reverb = match value {
                    "off" | "none" => None,
                    v => {
                        let (rt60, len) = v.split_once(',').ok_or_else(invalid)?;
                        Some((p(rt60.trim())?, u(len.trim())?))
                    }
                }
            }
            "taps" => self.taps = u(value)?,
            "input" => self.io.input = Some(value.into()),
            "output" => self.io.output = Some(value.into()),
            "reference" => self.io.reference = Some(value.into()),
            "csv" => self.io.csv = Some(value.into()),
            "bench_seeds" => self.bench.seeds = u(value)?,
            "bench_variants" => {
                self.bench.variants = match value {
                    "both" => Variants::Both,
                    "switch" => Variants::Switching,
                    "noswitch" => Variants::NonSwitching,
                    _ => return Err(invalid()),
                }
            }
            "bench_conditions" => {
                self.bench.conditions = value
                    .split(',')
                    .map(|c| match c.trim() {
                        "anechoic" => Ok(Condition::Anechoic),
                        "reverberant" => Ok(Condition::Reverberant),
                        _ => Err(invalid()),
                    })
                    .collect::<Result<_, _>>()?;
                if self.bench.conditions.is_empty() {
                    return Err(invalid());
                }
            }
            "bench_rt60" => self.bench.rt60 = p(value)?,
            "bench_rir_length" => self.bench.rir_length = u(value)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    origin: origin.to_owned(),
                    key: key.to_owned(),
                })
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_text() {
        let mut c = RunConfig::default();
        c.apply_text("# demo\niterations = 7 \nswitch_at=never\n\nbases = 5 # trailing\nreverb = 0.4, 2048\nbench_conditions = anechoic,reverberant", "t")
            .unwrap();
        assert_eq!(c.algorithm.outer_iterations, 7);
        assert_eq!(c.algorithm.switch_iteration, None);
        assert_eq!(c.algorithm.basis_count, 5);
        assert_eq!(c.fixture.reverb, Some((0.4, 2048)));
        assert_eq!(c.bench.conditions, vec![Condition::Anechoic, Condition::Reverberant]);
    }

    #[test]
    fn reports_bad_lines() {
        let mut c = RunConfig::default();
        assert_eq!(
            c.apply_text("\nfoo = 1", "f"),
            Err(ConfigError::UnknownKey {
                origin: "f:2".into(),
                key: "foo".into()
            })
        );
        assert!(matches!(c.apply_text("iterations = x", "f"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(c.apply_text("iterations", "f"), Err(ConfigError::Syntax { .. })));
        assert!(matches!(c.apply_text("switch_at = soon", "f"), Err(ConfigError::InvalidValue { .. })));
    }

    #[test]
    fn switch_values() {
        assert_eq!(parse_switch("never"), Some(None));
        assert_eq!(parse_switch("4"), Some(Some(4)));
        assert_eq!(parse_switch("-1"), None);
    }
}
