use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use noisy_ilrma::config::RunConfig;
use noisy_ilrma::core::eval::sdr;
use noisy_ilrma::pipeline::{extract, Reference};
use noisy_ilrma::stft::Stft;
use noisy_ilrma::wav::{read_wav, write_wav, Audio};
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noisy-ilrma")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Short fixture so each run stays well under a second.
fn short_config(dir: &Path) -> PathBuf {
    let path = dir.join("short.cfg");
    std::fs::write(&path, "# short runs\nsamples = 16000\niterations = 6\nswitch_at = 2\ntaps = 64\n").unwrap();
    path
}

fn simulate(dir: &Path, seed: &str) -> PathBuf {
    let out = dir.join(format!("sim{seed}"));
    let cfg = short_config(dir);
    let o = run(&["simulate", "--config", s(&cfg), "--seed", seed, "--output", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn energy(x: &[Vec<f64>]) -> f64 {
    x.iter().flatten().map(|v| v * v).sum()
}

#[test]
fn simulate_is_deterministic_and_hits_the_snr() {
    let dir = TempDir::new().unwrap();
    let a = simulate(dir.path(), "7");
    let b = dir.path().join("again");
    let cfg = short_config(dir.path());
    assert!(run(&["simulate", "--config", s(&cfg), "--seed", "7", "--output", s(&b)]).status.success());
    for name in ["mixture.wav", "target_image.wav", "noise_image.wav"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }

    let target = read_wav(&a.join("target_image.wav")).unwrap();
    let noise = read_wav(&a.join("noise_image.wav")).unwrap();
    assert_eq!(target.channel_count(), 4);
    assert_eq!(target.channels[0].len(), 16000);
    let snr = 10.0 * (energy(&target.channels) / energy(&noise.channels)).log10();
    assert!(snr.abs() < 1e-6, "snr {snr}");

    let c = simulate(dir.path(), "8");
    assert_ne!(std::fs::read(a.join("noise_image.wav")).unwrap(), std::fs::read(c.join("noise_image.wav")).unwrap());
}

#[test]
fn simulate_respects_snr_flag() {
    let dir = TempDir::new().unwrap();
    let cfg = short_config(dir.path());
    let out = dir.path().join("snr");
    assert!(run(&["simulate", "--config", s(&cfg), "--snr", "-5", "--output", s(&out)]).status.success());
    let target = read_wav(&out.join("target_image.wav")).unwrap();
    let noise = read_wav(&out.join("noise_image.wav")).unwrap();
    let snr = 10.0 * (energy(&target.channels) / energy(&noise.channels)).log10();
    assert!((snr + 5.0).abs() < 1e-6, "snr {snr}");
}

#[test]
fn extract_preserves_shape_and_reports_the_same_sdr_as_the_library() {
    let dir = TempDir::new().unwrap();
    let sim = simulate(dir.path(), "3");
    let cfg = short_config(dir.path());
    let (out, trace) = (dir.path().join("out.wav"), dir.path().join("trace.csv"));
    let o = run(&[
        "extract",
        "--config",
        s(&cfg),
        "--input",
        s(&sim.join("mixture.wav")),
        "--reference",
        s(&sim.join("target_image.wav")),
        "--output",
        s(&out),
        "--csv",
        s(&trace),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let mixture = read_wav(&sim.join("mixture.wav")).unwrap();
    let extracted = read_wav(&out).unwrap();
    assert_eq!(extracted.sample_rate, mixture.sample_rate);
    assert_eq!(extracted.channel_count(), mixture.channel_count());
    assert!(extracted.channels.iter().all(|c| c.len() == mixture.channels[0].len()));

    let mut rows = csv::Reader::from_path(&trace).unwrap();
    let header: Vec<String> = rows.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(header, ["iteration", "cost", "wall_time_s", "sdr_improvement_db"]);
    let records: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 7);
    let final_sdr: f64 = records.last().unwrap()[3].parse().unwrap();

    // recompute from the same files through the library
    let mut config = RunConfig::default();
    config.apply_text(&std::fs::read_to_string(&cfg).unwrap(), "short.cfg").unwrap();
    let reference = read_wav(&sim.join("target_image.wav")).unwrap();
    let stft = Stft::new(config.stft).unwrap();
    let lib = extract(
        &stft,
        &mixture.channels,
        &config.algorithm,
        Some(Reference {
            signal: &reference.channels[0],
            taps: config.taps,
        }),
        true,
    )
    .unwrap();
    let expected = lib.records.last().unwrap().sdr_improvement_db.unwrap();
    assert!((final_sdr - expected).abs() < 1e-9, "{final_sdr} vs {expected}");
    assert!(final_sdr > 0.0, "extraction should help: {final_sdr}");

    // the WAV holds the same signal up to f32 quantisation
    let direct = sdr(&extracted.channels[0], &lib.extracted[0], 1).unwrap();
    assert!(direct > 100.0, "{direct}");
}

#[test]
fn extract_rejects_mono_and_missing_arguments() {
    let dir = TempDir::new().unwrap();
    let mono = dir.path().join("mono.wav");
    let audio = Audio {
        sample_rate: 16000,
        channels: vec![(0..16000).map(|n| (n as f64 * 0.01).sin() * 0.3).collect()],
    };
    write_wav(&mono, &audio).unwrap();
    let out = dir.path().join("out.wav");
    assert_eq!(run(&["extract", "--input", s(&mono), "--output", s(&out)]).status.code(), Some(2));
    assert!(!out.exists());
    assert_eq!(run(&["extract", "--output", s(&out)]).status.code(), Some(2));
    assert_eq!(run(&["extract", "--input", s(&dir.path().join("missing.wav")), "--output", s(&out)]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["extract", "--iterations", "many"]).status.code(), Some(2));
}

#[test]
fn extract_rejects_sample_rate_mismatch() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.wav");
    let audio = Audio {
        sample_rate: 8000,
        channels: vec![vec![0.1; 8000], vec![0.2; 8000]],
    };
    write_wav(&input, &audio).unwrap();
    let o = run(&["extract", "--input", s(&input), "--output", s(&dir.path().join("o.wav"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sample rate"));
}

#[test]
fn bench_writes_one_row_per_iteration_and_variant() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bench.cfg");
    std::fs::write(&cfg, "samples = 16000\niterations = 10\nbench_seeds = 2\ntaps = 64\n").unwrap();
    let (agg, runs) = (dir.path().join("agg.csv"), dir.path().join("runs"));
    let o = run(&["bench", "--config", s(&cfg), "--csv", s(&agg), "--output", s(&runs)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let mut reader = csv::Reader::from_path(&agg).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(header, noisy_ilrma::bench::AGGREGATE_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    for variant in ["anechoic-switch", "anechoic-noswitch"] {
        let mine: Vec<_> = rows.iter().filter(|r| &r[0] == variant).collect();
        assert_eq!(mine.len(), 20, "{variant}");
        for seed in ["0", "1"] {
            let times: Vec<f64> = mine.iter().filter(|r| &r[1] == seed).map(|r| r[3].parse().unwrap()).collect();
            assert_eq!(times.len(), 10);
            assert!(times.windows(2).all(|w| w[1] > w[0]), "{times:?}");
        }
    }
    assert_eq!(std::fs::read_dir(&runs).unwrap().count(), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("median final SDR improvement"));
}

#[test]
fn help_exits_zero() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("extract"));
}
