//! Command-line front end: waveform generation, file-based receive, PER
//! scoring, the FIR spectrum demo and FFT backend benchmarking.

pub mod commands;
mod error;
pub mod files;

pub use commands::*;
pub use error::CliError;

use clap::{Args, Parser, Subcommand};
use sdr_core::accel::BackendKind;
use sdr_core::profiler;
use sdr_core::runtime::{RunConfig, DEFAULT_BUFFER_ITEMS};
use sdr_core::wifi::Mcs;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "sdr", version, about = "802.11p software radio on a streaming runtime")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an IQ capture of random or given PSDUs.
    Tx(TxArgs),
    /// Decode an IQ capture and print one line per frame.
    Rx(RxArgs),
    /// Score decoded events against a transmit manifest.
    Per(PerArgs),
    /// Run the tone, noise, low-pass FIR and spectrum graph.
    DemoFir(DemoFirArgs),
    /// Time and check FFT backends against the reference DFT.
    BenchFft(BenchArgs),
}

fn parse_mcs(s: &str) -> Result<Mcs, String> {
    s.parse()
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    s.parse()
}

#[derive(Args, Debug)]
struct TxArgs {
    /// bpsk-1/2, bpsk-3/4, qpsk-1/2, qpsk-3/4, qam16-1/2, qam16-3/4, qam64-2/3, qam64-3/4
    #[arg(long, value_parser = parse_mcs)]
    mcs: Mcs,
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// PSDU length in bytes, including the 4-byte FCS.
    #[arg(long, default_value_t = 100)]
    length: usize,
    /// Send these PSDUs (one hex string per line) instead of random ones.
    #[arg(long, conflicts_with = "length")]
    psdu_file: Option<PathBuf>,
    /// Add white noise at this SNR.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    cfo_hz: f64,
    /// Random seed; a fresh one is drawn and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Noise samples before each frame.
    #[arg(long, default_value_t = DEFAULT_GAP)]
    gap: usize,
    #[arg(long, default_value_t = 10e6)]
    sample_rate: f64,
    #[arg(long, default_value_t = DEFAULT_CENTER_FREQ_HZ)]
    center_freq: f64,
    /// Output capture; metadata goes to `<out>.json`.
    #[arg(long)]
    out: PathBuf,
    /// Manifest path, `<out>.manifest` by default.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RxArgs {
    /// IQ capture to decode.
    input: PathBuf,
    /// Overrides the sidecar sample rate.
    #[arg(long)]
    sample_rate: Option<f64>,
    #[arg(long, default_value = "software", value_parser = parse_backend)]
    backend: BackendKind,
    /// Write a profile (JSON for `.json`, CSV otherwise).
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Write events as JSON lines.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Also decode with the other backend and write a comparison table.
    #[arg(long)]
    compare: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Items offered per port per activation.
    #[arg(long, default_value_t = DEFAULT_BUFFER_ITEMS)]
    chunk: usize,
}

#[derive(Args, Debug)]
struct PerArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    events: PathBuf,
}

#[derive(Args, Debug)]
struct DemoFirArgs {
    /// Tone frequency in Hz.
    #[arg(long, default_value_t = 1000.0)]
    frequency: f64,
    #[arg(long, default_value_t = 32000.0)]
    sample_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// Per-component noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    noise_std: f64,
    #[arg(long, default_value_t = 4000.0)]
    cutoff: f64,
    /// Transition band width in Hz.
    #[arg(long, default_value_t = 1000.0)]
    transition: f64,
    /// `device` runs the fixed-point filter.
    #[arg(long, default_value = "software", value_parser = parse_backend)]
    backend: BackendKind,
    /// Seconds of signal to generate.
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    #[arg(long, default_value_t = 1024)]
    fft_size: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Run as fast as possible instead of at the sample rate.
    #[arg(long)]
    no_throttle: bool,
    /// Spectrum CSV (freq_hz,power_db).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "64,256,1024")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    /// Benchmark only this backend.
    #[arg(long, value_parser = parse_backend)]
    backend: Option<BackendKind>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn seed_or_fresh(seed: Option<u64>, err: &mut dyn Write) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        let _ = writeln!(err, "seed: {s}");
        s
    })
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code: 0 success, 1 usage, 2 I/O or format.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let stdout = |e: std::io::Error| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    match cmd {
        Command::Tx(a) => {
            let seed = seed_or_fresh(a.seed, err);
            let cfg = TxConfig {
                mcs: a.mcs,
                count: a.count,
                psdu: match a.psdu_file {
                    Some(p) => PsduSource::File(p),
                    None => PsduSource::Random { length: a.length },
                },
                snr_db: a.snr_db,
                cfo_hz: a.cfo_hz,
                seed,
                gap: a.gap,
                sample_rate: a.sample_rate,
                center_freq_hz: a.center_freq,
                out: a.out,
                manifest: a.manifest,
            };
            let o = cmd_tx(&cfg)?;
            writeln!(
                out,
                "wrote {} frames ({} samples) to {}, manifest {}, seed {seed}",
                o.psdus.len(),
                o.samples,
                cfg.out.display(),
                o.manifest.display()
            )
            .map_err(stdout)
        }
        Command::Rx(a) => {
            let cfg = RxConfig {
                input: a.input,
                sample_rate: a.sample_rate,
                backend: a.backend,
                run: RunConfig {
                    workers: a.workers.max(1),
                    chunk_cap: a.chunk.max(1),
                    profiling: a.profile.is_some(),
                    ..RunConfig::default()
                },
            };
            let o = cmd_rx(&cfg)?;
            for e in &o.events {
                writeln!(out, "{}", format_event_line(e)).map_err(stdout)?;
            }
            if let Some(p) = &a.events {
                files::write_text(p, &files::format_events(&o.events))?;
            }
            if let Some(p) = &a.profile {
                let profile = o.profile();
                write_profile(p, &profile)?;
                let grouped = profiler::utilization_grouped(
                    &profile.counters,
                    &profiler::receiver_groups(),
                )
                .map_err(|e| CliError::Run(e.to_string()))?;
                let _ = write!(err, "{}", grouped.render());
            }
            if let Some(p) = &a.compare {
                let c = compare_backends(&o.samples, &o.params, &cfg.run)?;
                files::write_text(p, &c.report.render())?;
                let mismatches = c.fcs_mismatches();
                let _ = writeln!(err, "backend fcs_ok mismatches: {}", mismatches.len());
            }
            let passed = o.events.iter().filter(|e| e.fcs_ok).count();
            let seed = o
                .sidecar
                .as_ref()
                .and_then(|s| s.seed)
                .map_or_else(|| "unknown".to_string(), |s| s.to_string());
            let _ = writeln!(
                err,
                "{} frames, {passed} fcs_ok ({} backend, capture seed {seed})",
                o.events.len(),
                cfg.backend.as_str()
            );
            Ok(())
        }
        Command::Per(a) => {
            let s = cmd_per(&a.manifest, &a.events)?;
            let json = serde_json::json!({
                "sent": s.sent,
                "detected": s.detected,
                "passed": s.passed,
                "per": s.per,
            });
            writeln!(out, "{json}").map_err(stdout)
        }
        Command::DemoFir(a) => {
            let seed = seed_or_fresh(a.seed, err);
            let cfg = DemoFirConfig {
                frequency: a.frequency,
                sample_rate: a.sample_rate,
                amplitude: a.amplitude,
                noise_std: a.noise_std,
                cutoff: a.cutoff,
                transition: a.transition,
                backend: a.backend,
                duration_s: a.duration,
                fft_size: a.fft_size,
                seed,
                throttle: !a.no_throttle,
                capture: 0,
                run: RunConfig {
                    profiling: a.profile.is_some(),
                    ..RunConfig::default()
                },
            };
            let r = cmd_demo_fir(&cfg)?;
            if let Some(p) = &a.out {
                files::write_text(p, &r.spectrum_csv())?;
            }
            if let Some(p) = &a.profile {
                write_profile(p, &sdr_core::profiler::Profile::from_run(&r.run))?;
            }
            let peak = r.peak().map_or_else(
                || "none (run shorter than one FFT frame)".to_string(),
                |(f, db)| format!("{f:.1} Hz at {db:.2} dB"),
            );
            writeln!(
                out,
                "{} taps, {} spectrum frames, peak {peak}, seed {seed}",
                r.taps.len(),
                r.frames
            )
            .map_err(stdout)
        }
        Command::BenchFft(a) => {
            let seed = seed_or_fresh(a.seed, err);
            let cfg = BenchConfig {
                sizes: a.sizes,
                iterations: a.iterations,
                backends: match a.backend {
                    Some(b) => vec![b],
                    None => vec![BackendKind::Software, BackendKind::Device],
                },
                seed,
            };
            let csv = bench_csv(&cmd_bench_fft(&cfg)?);
            match &a.out {
                Some(p) => files::write_text(p, &csv),
                None => write!(out, "{csv}").map_err(stdout),
            }
        }
    }
}
