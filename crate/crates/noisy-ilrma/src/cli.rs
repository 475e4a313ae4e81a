//! `noisy-ilrma extract | simulate | bench`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{run_bench, write_aggregate, BenchRun};
use crate::config::RunConfig;
use crate::mixsim::{fixture_spec, render_mixture};
use crate::pipeline::{extract, PipelineOutput, Reference};
use crate::stft::Stft;
use crate::wav::{read_wav, write_wav, Audio};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const EXTRACT_HEADER: [&str; 3] = ["iteration", "cost", "wall_time_s"];

#[derive(Debug, Parser)]
#[command(name = "noisy-ilrma", version, about = "Blind extraction of one target source from diffuse noise")]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Mode {
    /// Extract the target from a multichannel WAV
    Extract,
    /// Render a synthetic mixture with its target and noise images
    Simulate,
    /// Run the extractor over seeded synthetic mixtures and write CSV traces
    Bench,
}

#[derive(Debug, Args)]
struct Flags {
    /// key = value configuration file; flags take precedence
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Input mixture WAV (extract)
    #[arg(long, global = true, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Output WAV (extract) or directory (simulate, bench)
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Target image WAV; channel 1 is the SDR reference (extract)
    #[arg(long, global = true, value_name = "PATH")]
    reference: Option<PathBuf>,
    /// Trace CSV (extract) or aggregate CSV (bench)
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    iterations: Option<String>,
    /// Outer iteration after which the source model switches, or 'never'
    #[arg(long = "switch-at", global = true, value_name = "N|never")]
    switch_at: Option<String>,
    /// NMF bases per source
    #[arg(long, global = true, value_name = "K")]
    bases: Option<String>,
    /// Input SNR of simulated mixtures in dB
    #[arg(long, global = true, value_name = "DB", allow_hyphen_values = true)]
    snr: Option<String>,
}

impl Flags {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let paths = [
            ("input", &self.input),
            ("output", &self.output),
            ("reference", &self.reference),
            ("csv", &self.csv),
        ];
        for (key, value) in paths {
            if let Some(v) = value {
                config.set(key, &v.to_string_lossy(), &format!("--{key}"))?;
            }
        }
        let values = [
            ("seed", "--seed", &self.seed),
            ("iterations", "--iterations", &self.iterations),
            ("switch_at", "--switch-at", &self.switch_at),
            ("bases", "--bases", &self.bases),
            ("snr", "--snr", &self.snr),
        ];
        for (key, flag, value) in values {
            if let Some(v) = value {
                config.set(key, v, flag)?;
            }
        }
        config.algorithm.validate()?;
        Ok(config)
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = cli.flags.resolve().and_then(|config| match cli.mode {
        Mode::Extract => cmd_extract(&config),
        Mode::Simulate => cmd_simulate(&config),
        Mode::Bench => cmd_bench(&config),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn require<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, Error> {
    path.as_deref().ok_or_else(|| Error::Usage(format!("missing --{what}")))
}

pub fn cmd_extract(config: &RunConfig) -> Result<(), Error> {
    let input = read_wav(require(&config.io.input, "input")?)?;
    let output = require(&config.io.output, "output")?;
    if input.channel_count() < 2 {
        return Err(Error::Usage(format!(
            "input has {} channel; extraction needs at least two microphones",
            input.channel_count()
        )));
    }
    if input.sample_rate != config.stft.sample_rate {
        return Err(Error::Usage(format!(
            "input sample rate {} Hz differs from the configured {} Hz",
            input.sample_rate, config.stft.sample_rate
        )));
    }
    let reference = config.io.reference.as_deref().map(read_wav).transpose()?;
    let reference = reference.as_ref().map(|r| Reference {
        signal: &r.channels[0],
        taps: config.taps,
    });

    let stft = Stft::new(config.stft)?;
    let out = extract(&stft, &input.channels, &config.algorithm, reference, true)?;
    report_warnings(&out);
    write_wav(
        output,
        &Audio {
            sample_rate: input.sample_rate,
            channels: out.extracted.clone(),
        },
    )?;
    if let Some(csv_path) = &config.io.csv {
        write_trace(csv_path, &out)?;
    }
    if let Some(r) = out.report {
        eprintln!(
            "SDR {:.2} dB -> {:.2} dB (improvement {:.2} dB)",
            r.sdr_in, r.sdr_out, r.sdr_improvement
        );
    }
    Ok(())
}

fn report_warnings(out: &PipelineOutput) {
    if !out.warnings.is_empty() {
        eprintln!("warning: {} frequency bins needed a fallback; first: {:?}", out.warnings.len(), out.warnings[0]);
    }
}

/// `iteration,cost,wall_time_s[,sdr_improvement_db]`.
pub fn write_trace(path: &Path, out: &PipelineOutput) -> Result<(), Error> {
    let with_sdr = out.report.is_some();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = EXTRACT_HEADER.to_vec();
    if with_sdr {
        header.push("sdr_improvement_db");
    }
    w.write_record(&header)?;
    for r in &out.records {
        let mut row = vec![r.iteration.to_string(), r.cost.to_string(), r.wall_time_s.to_string()];
        if with_sdr {
            row.push(r.sdr_improvement_db.map_or(String::new(), |v| v.to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn cmd_simulate(config: &RunConfig) -> Result<(), Error> {
    let dir = require(&config.io.output, "output")?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let truth = render_mixture(&fixture_spec(&config.fixture, config.stft, config.algorithm.seed)?)?;
    // one common gain keeps the images consistent and the mixture unclipped
    let peak = truth.mixture.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let gain = if peak > 0.0 { 0.9 / peak } else { 1.0 };
    for (name, signal) in [
        ("mixture.wav", &truth.mixture),
        ("target_image.wav", &truth.target_image),
        ("noise_image.wav", &truth.noise_image),
    ] {
        let audio = Audio {
            sample_rate: config.stft.sample_rate,
            channels: signal.iter().map(|c| c.iter().map(|x| x * gain).collect()).collect(),
        };
        write_wav(&dir.join(name), &audio)?;
    }
    Ok(())
}

pub fn cmd_bench(config: &RunConfig) -> Result<(), Error> {
    let aggregate = require(&config.io.csv, "csv")?;
    let runs = run_bench(config)?;
    if let Some(dir) = &config.io.output {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for run in &runs {
            write_run(&dir.join(format!("{}_seed{}.csv", run.condition, run.seed)), run)?;
        }
    }
    write_aggregate(aggregate, &runs)?;
    let mut by_condition: Vec<(&str, Vec<f64>)> = Vec::new();
    for run in &runs {
        let v = run.final_sdr_improvement().unwrap_or(f64::NAN);
        match by_condition.iter_mut().find(|(c, _)| *c == run.condition) {
            Some((_, vs)) => vs.push(v),
            None => by_condition.push((&run.condition, vec![v])),
        }
    }
    for (condition, mut values) in by_condition {
        let n = values.len();
        let med = crate::bench::median(&mut values).unwrap_or(f64::NAN);
        eprintln!("{condition}: median final SDR improvement {med:.2} dB over {n} seeds");
    }
    Ok(())
}

fn write_run(path: &Path, run: &BenchRun) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "cost", "wall_time_s", "sdr_improvement_db"])?;
    for r in &run.records {
        w.write_record([
            r.iteration.to_string(),
            r.cost.to_string(),
            r.wall_time_s.to_string(),
            r.sdr_improvement_db.map_or(String::new(), |v| v.to_string()),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
