//! Subcommand implementations. Each returns structured results; printing
//! and exit codes are handled by [`crate::run`].

use crate::files::{self, Sidecar};
use crate::CliError;
use num_complex::{Complex32, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdr_core::accel::{BackendKind, FftBackend};
use sdr_core::dsp::{
    design_lowpass, dft_reference, ComplexToInt, CosineSource, Direction, FirBlock, FirTaps,
    IntFir, IntFirBlock, IntToFloat, NoiseAdder, RealPairsToComplex, SpectrumSink, Throttle,
};
use sdr_core::profiler::{self, ComparisonReport, Profile};
use sdr_core::runtime::{
    Block, BlockError, FlowGraph, ItemKind, RunConfig, RunReport, WorkIo, WorkStatus,
};
use sdr_core::wifi::coding::append_fcs;
use sdr_core::wifi::{
    build_capture, compute_per, encode_frame, FrameEvent, Mcs, OfdmParams, PerSummary,
    ReceiverGraph, MAX_PSDU,
};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

pub const DEFAULT_CENTER_FREQ_HZ: f64 = 5.9e9;
pub const DEFAULT_GAP: usize = 400;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn check_rate(fs: f64) -> Result<(), CliError> {
    if fs.is_finite() && fs > 0.0 {
        Ok(())
    } else {
        Err(usage(format!("sample rate {fs} must be positive")))
    }
}

// ---------------------------------------------------------------- tx

#[derive(Debug, Clone)]
pub enum PsduSource {
    /// Random bodies of this total length; lengths of 4 or more end in a
    /// valid FCS.
    Random { length: usize },
    /// One hex PSDU per line, sent in order.
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct TxConfig {
    pub mcs: Mcs,
    pub count: usize,
    pub psdu: PsduSource,
    /// `None` transmits without noise.
    pub snr_db: Option<f64>,
    pub cfo_hz: f64,
    pub seed: u64,
    pub gap: usize,
    pub sample_rate: f64,
    pub center_freq_hz: f64,
    pub out: PathBuf,
    /// Defaults to `<out>.manifest`.
    pub manifest: Option<PathBuf>,
}

impl TxConfig {
    pub fn new(mcs: Mcs, count: usize, out: impl Into<PathBuf>) -> Self {
        Self {
            mcs,
            count,
            psdu: PsduSource::Random { length: 100 },
            snr_db: None,
            cfo_hz: 0.0,
            seed: 0,
            gap: DEFAULT_GAP,
            sample_rate: OfdmParams::default().sample_rate,
            center_freq_hz: DEFAULT_CENTER_FREQ_HZ,
            out: out.into(),
            manifest: None,
        }
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.manifest.clone().unwrap_or_else(|| {
            let mut s = self.out.as_os_str().to_owned();
            s.push(".manifest");
            PathBuf::from(s)
        })
    }
}

#[derive(Debug, Clone)]
pub struct TxOutcome {
    pub psdus: Vec<Vec<u8>>,
    /// First sample of each frame in the capture.
    pub starts: Vec<usize>,
    pub samples: usize,
    pub manifest: PathBuf,
}

/// Random PSDUs of `length` bytes, FCS-terminated when `length >= 4`.
pub fn random_psdus(rng: &mut impl Rng, count: usize, length: usize) -> Vec<Vec<u8>> {
    (0..count)
        .map(|_| {
            let body_len = if length >= 4 { length - 4 } else { length };
            let body: Vec<u8> = (0..body_len).map(|_| rng.gen()).collect();
            if length >= 4 {
                append_fcs(&body)
            } else {
                body
            }
        })
        .collect()
}

/// Encodes `psdus` and passes them through the configured channel.
pub fn synthesize(
    psdus: &[Vec<u8>],
    mcs: Mcs,
    snr_db: Option<f64>,
    cfo_hz: f64,
    gap: usize,
    seed: u64,
    sample_rate: f64,
) -> Result<(Vec<Complex32>, Vec<usize>), CliError> {
    check_rate(sample_rate)?;
    if !cfo_hz.is_finite() || snr_db.is_some_and(|s| !s.is_finite()) {
        return Err(usage("impairments must be finite"));
    }
    let params = OfdmParams { sample_rate };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5C4A_3B1E);
    let frames = psdus
        .iter()
        .map(|p| {
            let scrambler: u8 = rng.gen_range(1..=127);
            encode_frame(p, mcs, &params, scrambler).map_err(|e| usage(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(build_capture(
        &frames,
        gap,
        cfo_hz,
        snr_db.unwrap_or(f64::INFINITY),
        seed,
        sample_rate,
    ))
}

pub fn cmd_tx(cfg: &TxConfig) -> Result<TxOutcome, CliError> {
    let psdus = match &cfg.psdu {
        PsduSource::Random { length } => {
            if !(1..=MAX_PSDU).contains(length) {
                return Err(usage(format!("PSDU length {length} outside 1..={MAX_PSDU}")));
            }
            random_psdus(&mut ChaCha8Rng::seed_from_u64(cfg.seed), cfg.count, *length)
        }
        PsduSource::File(path) => files::parse_manifest(&files::read_text(path)?)?,
    };
    let (capture, starts) = synthesize(
        &psdus,
        cfg.mcs,
        cfg.snr_db,
        cfg.cfo_hz,
        cfg.gap,
        cfg.seed,
        cfg.sample_rate,
    )?;
    let snr = cfg
        .snr_db
        .map_or_else(|| "no noise".to_string(), |s| format!("SNR {s} dB"));
    let sidecar = Sidecar {
        sample_rate_hz: cfg.sample_rate,
        center_freq_hz: cfg.center_freq_hz,
        description: format!(
            "{} frames, {}, {snr}, CFO {} Hz, gap {}",
            psdus.len(),
            cfg.mcs,
            cfg.cfo_hz,
            cfg.gap
        ),
        seed: Some(cfg.seed),
    };
    files::write_iq(&cfg.out, &capture, &sidecar)?;
    let manifest = cfg.manifest_path();
    files::write_text(&manifest, &files::format_manifest(&psdus))?;
    Ok(TxOutcome {
        psdus,
        starts,
        samples: capture.len(),
        manifest,
    })
}

// ---------------------------------------------------------------- rx

#[derive(Debug, Clone)]
pub struct RxConfig {
    pub input: PathBuf,
    /// Overrides the sidecar; 10 MHz when neither is given.
    pub sample_rate: Option<f64>,
    pub backend: BackendKind,
    pub run: RunConfig,
}

impl RxConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            sample_rate: None,
            backend: BackendKind::Software,
            run: RunConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RxOutcome {
    pub events: Vec<FrameEvent>,
    pub run: RunReport,
    pub params: OfdmParams,
    pub sidecar: Option<Sidecar>,
    pub samples: Vec<Complex32>,
}

impl RxOutcome {
    pub fn profile(&self) -> Profile {
        Profile::from_run(&self.run)
    }
}

/// Runs the receiver graph over an in-memory capture.
pub fn receive_capture(
    samples: Vec<Complex32>,
    params: &OfdmParams,
    backend: BackendKind,
    run: &RunConfig,
) -> Result<(Vec<FrameEvent>, RunReport), CliError> {
    let rg = ReceiverGraph::from_samples(samples, params, backend.build())
        .map_err(|e| CliError::Run(e.to_string()))?;
    let report = rg.graph.run(run).map_err(|e| CliError::Run(e.to_string()))?;
    Ok((rg.events.events(), report))
}

pub fn cmd_rx(cfg: &RxConfig) -> Result<RxOutcome, CliError> {
    let (samples, sidecar) = files::read_iq(&cfg.input)?;
    let sample_rate = cfg
        .sample_rate
        .or(sidecar.as_ref().map(|s| s.sample_rate_hz))
        .unwrap_or(OfdmParams::default().sample_rate);
    check_rate(sample_rate)?;
    let params = OfdmParams { sample_rate };
    let (events, run) = receive_capture(samples.clone(), &params, cfg.backend, &cfg.run)?;
    Ok(RxOutcome {
        events,
        run,
        params,
        sidecar,
        samples,
    })
}

/// `start=… mcs=… len=… fcs_ok=… psdu=…`
pub fn format_event_line(e: &FrameEvent) -> String {
    format!(
        "start={} mcs={} len={} fcs_ok={} psdu={}",
        e.start,
        e.mcs,
        e.length,
        e.fcs_ok,
        hex::encode(&e.psdu)
    )
}

/// JSON for `.json` paths, CSV otherwise.
pub fn write_profile(path: &Path, profile: &Profile) -> Result<(), CliError> {
    let doc = profile.document();
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let text = if is_json {
        profiler::export_json(&doc) + "\n"
    } else {
        profiler::export_csv(&doc)
    };
    files::write_text(path, &text)
}

/// The same capture decoded with the software (A) and device (B) FFT.
#[derive(Debug, Clone)]
pub struct BackendComparison {
    pub software: Vec<FrameEvent>,
    pub device: Vec<FrameEvent>,
    pub report: ComparisonReport,
}

impl BackendComparison {
    /// Frames whose `fcs_ok` differs between the two runs, by start index.
    pub fn fcs_mismatches(&self) -> Vec<u64> {
        let key = |ev: &[FrameEvent]| -> std::collections::BTreeMap<u64, bool> {
            ev.iter().map(|e| (e.start, e.fcs_ok)).collect()
        };
        let (a, b) = (key(&self.software), key(&self.device));
        let mut starts: Vec<u64> = a.keys().chain(b.keys()).copied().collect();
        starts.sort_unstable();
        starts.dedup();
        starts
            .into_iter()
            .filter(|s| a.get(s) != b.get(s))
            .collect()
    }
}

pub fn compare_backends(
    samples: &[Complex32],
    params: &OfdmParams,
    run: &RunConfig,
) -> Result<BackendComparison, CliError> {
    let run = RunConfig {
        profiling: true,
        ..run.clone()
    };
    let (software, ra) = receive_capture(samples.to_vec(), params, BackendKind::Software, &run)?;
    let (device, rb) = receive_capture(samples.to_vec(), params, BackendKind::Device, &run)?;
    let report = profiler::compare(&Profile::from_run(&ra), &Profile::from_run(&rb))
        .map_err(|e| CliError::Run(e.to_string()))?;
    Ok(BackendComparison {
        software,
        device,
        report,
    })
}

// ---------------------------------------------------------------- per

pub fn cmd_per(manifest: &Path, events: &Path) -> Result<PerSummary, CliError> {
    let sent = files::parse_manifest(&files::read_text(manifest)?)?;
    let events = files::parse_events(&files::read_text(events)?)?;
    Ok(compute_per(&sent, &events))
}

// ---------------------------------------------------------------- demo-fir

#[derive(Debug, Clone)]
pub struct DemoFirConfig {
    pub frequency: f64,
    pub sample_rate: f64,
    pub amplitude: f64,
    pub noise_std: f64,
    pub cutoff: f64,
    pub transition: f64,
    /// `Device` runs the integer FIR path.
    pub backend: BackendKind,
    pub duration_s: f64,
    pub fft_size: usize,
    pub seed: u64,
    /// Pace the source at the sample rate.
    pub throttle: bool,
    /// Number of leading filter outputs to keep in the result.
    pub capture: usize,
    pub run: RunConfig,
}

impl Default for DemoFirConfig {
    fn default() -> Self {
        Self {
            frequency: 1000.0,
            sample_rate: 32_000.0,
            amplitude: 1.0,
            noise_std: 0.0,
            cutoff: 4000.0,
            transition: 1000.0,
            backend: BackendKind::Software,
            duration_s: 1.0,
            fft_size: 1024,
            seed: 0,
            throttle: true,
            capture: 0,
            run: RunConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoFirResult {
    pub taps: FirTaps,
    /// `(frequency Hz, power dB)`, DC centered.
    pub spectrum: Vec<(f64, f64)>,
    pub frames: u64,
    pub run: RunReport,
    /// First `capture` filter outputs, as complex samples.
    pub filtered: Vec<Complex32>,
}

impl DemoFirResult {
    /// Strongest bin.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.spectrum
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Power in the bin nearest `freq`.
    pub fn level_at(&self, freq: f64) -> Option<f64> {
        self.spectrum
            .iter()
            .min_by(|a, b| (a.0 - freq).abs().total_cmp(&(b.0 - freq).abs()))
            .map(|p| p.1)
    }

    pub fn spectrum_csv(&self) -> String {
        let mut s = String::from("freq_hz,power_db\n");
        for (f, p) in &self.spectrum {
            s += &format!("{f:.3},{p:.3}\n");
        }
        s
    }
}

/// Pass-through that records the first `limit` samples it forwards.
struct Capture {
    limit: usize,
    store: Arc<Mutex<Vec<Complex32>>>,
}

impl Block for Capture {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let n = input.items().min(out.space());
        let x = &input.slice::<Complex32>()[..n];
        let mut store = self.store.lock().unwrap();
        let keep = (self.limit - store.len().min(self.limit)).min(n);
        store.extend_from_slice(&x[..keep]);
        out.push(x);
        input.consume(n);
        Ok(WorkStatus::Ok)
    }
}

/// Integer scale between the float stream and the fixed-point filter.
const INT_SCALE: f32 = 32768.0;

pub fn cmd_demo_fir(cfg: &DemoFirConfig) -> Result<DemoFirResult, CliError> {
    let fs = cfg.sample_rate;
    check_rate(fs)?;
    if !(cfg.duration_s.is_finite() && cfg.duration_s > 0.0) {
        return Err(usage(format!("duration {} must be positive", cfg.duration_s)));
    }
    let dsp = |e: sdr_core::dsp::DspError| usage(e.to_string());
    let graph_err = |e: sdr_core::runtime::GraphError| CliError::Run(e.to_string());
    let taps = design_lowpass(cfg.cutoff, cfg.transition, fs).map_err(dsp)?;
    let n_samples = (cfg.duration_s * fs).round() as u64;
    let source = CosineSource::new(cfg.frequency, fs, cfg.amplitude)
        .map_err(dsp)?
        .with_limit(n_samples);
    let (sink, spectrum) = SpectrumSink::new(cfg.fft_size, fs).map_err(dsp)?;
    let store = Arc::new(Mutex::new(Vec::new()));

    let mut g = FlowGraph::new();
    let mut ids = vec![
        g.add_block("cosine", source).map_err(graph_err)?,
        g.add_block("noise", NoiseAdder::new(cfg.seed, cfg.noise_std).map_err(dsp)?)
            .map_err(graph_err)?,
    ];
    let throttle = if cfg.throttle {
        Throttle::new(ItemKind::Complex32, fs).map_err(dsp)?
    } else {
        Throttle::unbounded(ItemKind::Complex32)
    };
    ids.push(g.add_block("throttle", throttle).map_err(graph_err)?);
    match cfg.backend {
        BackendKind::Software => {
            ids.push(g.add_block("fir", FirBlock::new(taps.clone())).map_err(graph_err)?);
        }
        BackendKind::Device => {
            let fir = IntFir::new(&taps, 2).map_err(dsp)?;
            ids.push(
                g.add_block("to_int", ComplexToInt::new(INT_SCALE).map_err(dsp)?)
                    .map_err(graph_err)?,
            );
            ids.push(g.add_block("fir", IntFirBlock::new(fir)).map_err(graph_err)?);
            ids.push(
                g.add_block("to_float", IntToFloat::new(INT_SCALE).map_err(dsp)?)
                    .map_err(graph_err)?,
            );
            ids.push(
                g.add_block("pairs", RealPairsToComplex::new())
                    .map_err(graph_err)?,
            );
        }
    }
    ids.push(
        g.add_block(
            "capture",
            Capture {
                limit: cfg.capture,
                store: store.clone(),
            },
        )
        .map_err(graph_err)?,
    );
    ids.push(g.add_block("fft_sink", sink).map_err(graph_err)?);
    g.chain(&ids).map_err(graph_err)?;
    let run = g.run(&cfg.run).map_err(|e| CliError::Run(e.to_string()))?;
    let filtered = std::mem::take(&mut *store.lock().unwrap());
    Ok(DemoFirResult {
        taps,
        spectrum: spectrum.spectrum_db(),
        frames: spectrum.frames(),
        run,
        filtered,
    })
}

// ---------------------------------------------------------------- bench-fft

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub iterations: usize,
    pub backends: Vec<BackendKind>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub size: usize,
    pub backend: &'static str,
    pub iterations: usize,
    /// Wall-clock time per transform on the host.
    pub mean_host_ns: f64,
    /// Modeled offload time per transform (0 for software).
    pub mean_modeled_ns: f64,
    pub max_error: f64,
    pub tolerance: f64,
    pub seed: u64,
}

/// Transforms checked against the O(N²) reference per size and backend.
const CHECKED_VECTORS: usize = 8;

pub fn cmd_bench_fft(cfg: &BenchConfig) -> Result<Vec<BenchRow>, CliError> {
    if cfg.iterations == 0 {
        return Err(usage("iterations must be at least 1"));
    }
    let mut backends: Vec<(BackendKind, Box<dyn FftBackend>)> =
        cfg.backends.iter().map(|&k| (k, k.build())).collect();
    for &n in &cfg.sizes {
        if let Some((k, _)) = backends.iter().find(|(_, b)| !b.supports(n)) {
            return Err(usage(format!(
                "FFT size {n} is not supported by the {} backend",
                k.as_str()
            )));
        }
    }
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ n as u64);
        let inputs: Vec<Vec<Complex32>> = (0..cfg.iterations.min(64))
            .map(|_| {
                (0..n)
                    .map(|_| Complex32::new(rng.gen_range(-0.35..0.35), rng.gen_range(-0.35..0.35)))
                    .collect()
            })
            .collect();
        let checked = inputs.len().min(CHECKED_VECTORS);
        let references: Vec<Vec<Complex64>> = inputs[..checked]
            .iter()
            .map(|x| dft_reference(x, Direction::Forward))
            .collect();
        for (kind, be) in backends.iter_mut() {
            let mut host_ns = 0u128;
            let mut modeled_ns = 0u128;
            let mut max_error = 0.0f64;
            for i in 0..cfg.iterations {
                let x = &inputs[i % inputs.len()];
                let t0 = Instant::now();
                let t = be
                    .transform(x, Direction::Forward)
                    .map_err(|e| CliError::Run(e.to_string()))?;
                host_ns += t0.elapsed().as_nanos();
                modeled_ns += t.modeled_ns as u128;
                if let Some(r) = references.get(i) {
                    let err = t
                        .output
                        .iter()
                        .zip(r)
                        .map(|(o, r)| (Complex64::new(o.re as f64, o.im as f64) - r).norm())
                        .fold(0.0, f64::max);
                    max_error = max_error.max(err);
                }
            }
            let iters = cfg.iterations as f64;
            rows.push(BenchRow {
                size: n,
                backend: kind.as_str(),
                iterations: cfg.iterations,
                mean_host_ns: host_ns as f64 / iters,
                mean_modeled_ns: modeled_ns as f64 / iters,
                max_error,
                tolerance: be.tolerance(n),
                seed: cfg.seed,
            });
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = String::from(
        "size,backend,iterations,mean_host_ns,mean_modeled_ns,max_error,tolerance,seed\n",
    );
    for r in rows {
        s += &format!(
            "{},{},{},{:.1},{:.1},{:.3e},{:.3e},{}\n",
            r.size,
            r.backend,
            r.iterations,
            r.mean_host_ns,
            r.mean_modeled_ns,
            r.max_error,
            r.tolerance,
            r.seed
        );
    }
    s
}
