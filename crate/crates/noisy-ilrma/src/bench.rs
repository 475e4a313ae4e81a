//! Seeds x conditions x variants sweep over the synthetic fixture.

use std::path::Path;

use noisy_ilrma_core::AlgorithmConfig;
use rayon::prelude::*;

use crate::config::{Condition, RunConfig, Variants};
use crate::mixsim::{fixture_spec, render_mixture, FixtureOptions};
use crate::pipeline::{extract, IterationRecord, Reference};
use crate::stft::Stft;
use crate::Error;

pub const THREADS_ENV: &str = "NOISY_ILRMA_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    /// `<condition>-<variant>`, e.g. `anechoic-switch`.
    pub condition: String,
    pub seed: u64,
    pub records: Vec<IterationRecord>,
}

impl BenchRun {
    pub fn final_sdr_improvement(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.sdr_improvement_db)
    }
}

fn variants(config: &AlgorithmConfig, which: Variants) -> Vec<(&'static str, AlgorithmConfig)> {
    // non-switching baseline keeps whatever switch point is configured
    // for the switching variant, defaulting to the standard one
    let switching = AlgorithmConfig {
        switch_iteration: config.switch_iteration.or(AlgorithmConfig::default().switch_iteration),
        ..*config
    };
    let plain = AlgorithmConfig {
        switch_iteration: None,
        ..*config
    };
    match which {
        Variants::Both => vec![("switch", switching), ("noswitch", plain)],
        Variants::Switching => vec![("switch", switching)],
        Variants::NonSwitching => vec![("noswitch", plain)],
    }
}

/// Thread pool honouring `NOISY_ILRMA_THREADS` (unset or 0: rayon default).
pub fn thread_pool() -> Result<rayon::ThreadPool, Error> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(e.to_string()))
}

/// Runs every (condition, seed) cell, each with all requested variants on
/// the same rendered mixture. Seeds are `first_seed..first_seed + seeds`;
/// the seed drives both the fixture and the algorithm initialisation.
pub fn run_bench(config: &RunConfig) -> Result<Vec<BenchRun>, Error> {
    let stft = Stft::new(config.stft)?;
    let first = config.algorithm.seed;
    let cells: Vec<(Condition, u64)> = config
        .bench
        .conditions
        .iter()
        .flat_map(|&c| (0..config.bench.seeds as u64).map(move |s| (c, first + s)))
        .collect();
    let pool = thread_pool()?;
    let nested: Vec<Vec<BenchRun>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(condition, seed)| run_cell(config, &stft, condition, seed))
            .collect::<Result<_, _>>()
    })?;
    Ok(nested.into_iter().flatten().collect())
}

fn run_cell(config: &RunConfig, stft: &Stft, condition: Condition, seed: u64) -> Result<Vec<BenchRun>, Error> {
    let options = FixtureOptions {
        reverb: match condition {
            Condition::Anechoic => None,
            Condition::Reverberant => Some((config.bench.rt60, config.bench.rir_length)),
        },
        ..config.fixture
    };
    let truth = render_mixture(&fixture_spec(&options, config.stft, seed)?)?;
    variants(&config.algorithm, config.bench.variants)
        .into_iter()
        .map(|(name, algorithm)| {
            let algorithm = AlgorithmConfig { seed, ..algorithm };
            let reference = Reference {
                signal: &truth.target_image[0],
                taps: config.taps,
            };
            let out = extract(stft, &truth.mixture, &algorithm, Some(reference), true)?;
            Ok(BenchRun {
                condition: format!("{}-{name}", condition.name()),
                seed,
                records: out.records,
            })
        })
        .collect()
}

pub const AGGREGATE_HEADER: [&str; 6] = ["condition", "seed", "iteration", "wall_time_s", "cost", "sdr_improvement_db"];

/// One row per iteration (the initial state is omitted).
pub fn write_aggregate(path: &Path, runs: &[BenchRun]) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(AGGREGATE_HEADER)?;
    for run in runs {
        for r in run.records.iter().filter(|r| r.iteration > 0) {
            w.write_record([
                run.condition.clone(),
                run.seed.to_string(),
                r.iteration.to_string(),
                r.wall_time_s.to_string(),
                r.cost.to_string(),
                r.sdr_improvement_db.map_or(String::new(), |v| v.to_string()),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}
