//! Frame detection, frequency-offset correction and symbol alignment.

use super::params::{OfdmParams, FFT_SIZE};
use super::tx::ltf_period;
use super::WifiError;
use num_complex::{Complex32, Complex64};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Short-preamble autocorrelation detector settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub window: usize,
    pub lag: usize,
    pub threshold: f64,
    pub plateau: usize,
    /// Running sums are rebuilt from scratch at multiples of this absolute
    /// index, bounding drift and making results independent of chunking.
    pub refresh: u64,
    /// Windows with less energy than this never count as correlated.
    pub power_floor: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            window: 48,
            lag: 16,
            threshold: 0.9,
            plateau: 16,
            refresh: 4096,
            power_floor: 1e-9,
        }
    }
}

impl DetectorConfig {
    /// Samples needed past a window start to evaluate it.
    pub fn span(&self) -> usize {
        self.window + self.lag
    }
}

/// A detected preamble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trigger {
    /// Window start where the plateau completed.
    pub index: u64,
    pub cfo_hz: f64,
}

/// Streaming detector. Window `n` compares `x[n..n+W]` with
/// `x[n+L..n+L+W]`:
///
/// ```text
/// ratio(n) = |Σ x[n+k]·conj(x[n+k+L])| / sqrt(Σ |x[n+k]|² · Σ |x[n+k+L]|²)
/// ```
///
/// The ratio never exceeds 1, including at the falling edge of a burst.
///
/// A trigger fires when the ratio stays above threshold for `plateau`
/// consecutive windows, and re-arms once it falls back.
#[derive(Debug, Clone)]
pub struct Detector {
    cfg: DetectorConfig,
    sample_rate: f64,
    pos: u64,
    p: Complex64,
    ra: f64,
    rb: f64,
    last: Option<Complex32>,
    run: usize,
    armed: bool,
    plateau_sum: Complex64,
}

fn c64(x: Complex32) -> Complex64 {
    Complex64::new(x.re as f64, x.im as f64)
}

impl Detector {
    pub fn new(cfg: DetectorConfig, params: &OfdmParams) -> Self {
        Self {
            cfg,
            sample_rate: params.sample_rate,
            pos: 0,
            p: Complex64::new(0.0, 0.0),
            ra: 0.0,
            rb: 0.0,
            last: None,
            run: 0,
            armed: true,
            plateau_sum: Complex64::new(0.0, 0.0),
        }
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    /// Next window start to be evaluated.
    pub fn position(&self) -> u64 {
        self.pos
    }

    /// Evaluates every window that fits in `x`, whose first sample must be
    /// at absolute index [`Self::position`]. Returns how many windows were
    /// evaluated (= samples the caller may release) and any triggers.
    pub fn process(&mut self, x: &[Complex32]) -> (usize, Vec<Trigger>) {
        let (w, l) = (self.cfg.window, self.cfg.lag);
        let span = self.cfg.span();
        if x.len() < span {
            return (0, Vec::new());
        }
        let count = x.len() - span + 1;
        let mut triggers = Vec::new();
        for i in 0..count {
            let n = self.pos;
            match self.last {
                Some(prev) if !n.is_multiple_of(self.cfg.refresh) => {
                    let old_b = c64(x[i + l - 1]);
                    let new_a = c64(x[i + w - 1]);
                    let new_b = c64(x[i + w + l - 1]);
                    self.p += new_a * new_b.conj() - c64(prev) * old_b.conj();
                    self.ra += new_a.norm_sqr() - c64(prev).norm_sqr();
                    self.rb += new_b.norm_sqr() - old_b.norm_sqr();
                }
                _ => {
                    self.p = (0..w).map(|k| c64(x[i + k]) * c64(x[i + k + l]).conj()).sum();
                    self.ra = (0..w).map(|k| c64(x[i + k]).norm_sqr()).sum();
                    self.rb = (0..w).map(|k| c64(x[i + k + l]).norm_sqr()).sum();
                }
            }
            self.last = Some(x[i]);
            let ratio = if self.ra > self.cfg.power_floor && self.rb > self.cfg.power_floor {
                self.p.norm() / (self.ra * self.rb).sqrt()
            } else {
                0.0
            };
            if ratio > self.cfg.threshold {
                self.run += 1;
                self.plateau_sum += self.p;
                if self.armed && self.run >= self.cfg.plateau {
                    let cfo = -self.plateau_sum.arg() / (TAU * l as f64 / self.sample_rate);
                    triggers.push(Trigger { index: n, cfo_hz: cfo });
                    self.armed = false;
                }
            } else {
                self.run = 0;
                self.plateau_sum = Complex64::new(0.0, 0.0);
                self.armed = true;
            }
            self.pos += 1;
        }
        (count, triggers)
    }
}

/// All triggers in a finite capture.
pub fn detect_frames(samples: &[Complex32], params: &OfdmParams) -> Vec<Trigger> {
    detect_frames_with(samples, params, DetectorConfig::default())
}

pub fn detect_frames_with(
    samples: &[Complex32],
    params: &OfdmParams,
    cfg: DetectorConfig,
) -> Vec<Trigger> {
    Detector::new(cfg, params).process(samples).1
}

/// `exp(-j 2π f n / fs)` rotation, phase continuous across calls.
#[derive(Debug, Clone)]
pub struct CfoCorrector {
    cycles_per_sample: f64,
    n: i64,
}

impl CfoCorrector {
    pub fn new(cfo_hz: f64, sample_rate: f64) -> Self {
        Self::starting_at(cfo_hz, sample_rate, 0)
    }

    /// Corrector whose first sample has phase index `n0`.
    pub fn starting_at(cfo_hz: f64, sample_rate: f64, n0: i64) -> Self {
        Self {
            cycles_per_sample: cfo_hz / sample_rate,
            n: n0,
        }
    }

    pub fn rotate(&mut self, x: Complex32) -> Complex32 {
        let ph = -(self.cycles_per_sample * self.n as f64).fract() * TAU;
        self.n += 1;
        x * Complex32::new(ph.cos() as f32, ph.sin() as f32)
    }

    pub fn process(&mut self, x: &[Complex32]) -> Vec<Complex32> {
        x.iter().map(|&v| self.rotate(v)).collect()
    }
}

pub fn correct_cfo(samples: &[Complex32], cfo_hz: f64, sample_rate: f64) -> Vec<Complex32> {
    CfoCorrector::new(cfo_hz, sample_rate).process(samples)
}

/// Samples from the trigger needed before alignment can run.
pub const ALIGN_SPAN: usize = ALIGN_SEARCH + 2 * FFT_SIZE - 1;
/// LTF boundary candidates examined after the trigger.
pub const ALIGN_SEARCH: usize = 320;
/// FFT windows start this many samples early, inside the cyclic prefix.
pub const WINDOW_BACKOFF: usize = 2;
/// Minimum normalized LTF correlation accepted.
pub const ALIGN_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    /// Index of the first LTF period (absolute if the input was).
    pub ltf_start: usize,
    pub fine_cfo_hz: f64,
    /// Normalized correlation peak in [0, 1].
    pub score: f64,
}

/// Finds the first LTF period in `x[trigger..]`: the `m` maximizing
/// `c[m] + c[m+64]`, with `c` the magnitude of correlation against the
/// known period. Fine CFO comes from the phase between the two periods.
pub fn align_symbols(
    x: &[Complex32],
    trigger: usize,
    params: &OfdmParams,
) -> Result<Alignment, WifiError> {
    let seg = x.get(trigger..).unwrap_or(&[]);
    let mut a = align_segment(seg, params.sample_rate)?;
    a.ltf_start += trigger;
    Ok(a)
}

pub(crate) fn align_segment(seg: &[Complex32], sample_rate: f64) -> Result<Alignment, WifiError> {
    if seg.len() < ALIGN_SPAN {
        return Err(WifiError::AlignmentFailed);
    }
    let ltf: Vec<Complex64> = ltf_period().into_iter().map(|v| c64(v).conj()).collect();
    let ltf_norm = ltf.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let xs: Vec<Complex64> = seg[..ALIGN_SPAN].iter().map(|&v| c64(v)).collect();
    let corr: Vec<f64> = (0..ALIGN_SEARCH + FFT_SIZE)
        .map(|m| {
            xs[m..m + FFT_SIZE]
                .iter()
                .zip(&ltf)
                .map(|(a, b)| a * b)
                .sum::<Complex64>()
                .norm()
        })
        .collect();
    let mut best = (0usize, f64::MIN);
    for m in 0..ALIGN_SEARCH {
        let v = corr[m] + corr[m + FFT_SIZE];
        if v > best.1 {
            best = (m, v);
        }
    }
    let m = best.0;
    let e1: f64 = xs[m..m + FFT_SIZE].iter().map(|v| v.norm_sqr()).sum();
    let e2: f64 = xs[m + FFT_SIZE..m + 2 * FFT_SIZE].iter().map(|v| v.norm_sqr()).sum();
    let denom = ltf_norm * (e1.sqrt() + e2.sqrt());
    let score = if denom > 0.0 { best.1 / denom } else { 0.0 };
    if score < ALIGN_THRESHOLD || m < WINDOW_BACKOFF {
        return Err(WifiError::AlignmentFailed);
    }
    let lag: Complex64 = (0..FFT_SIZE).map(|k| xs[m + k] * xs[m + k + FFT_SIZE].conj()).sum();
    let fine = -lag.arg() / (TAU * FFT_SIZE as f64 / sample_rate);
    Ok(Alignment {
        ltf_start: m,
        fine_cfo_hz: fine,
        score,
    })
}

/// Offset of FFT window `j` from the first LTF sample: two LTF periods, then
/// one window per OFDM symbol, all backed off into the guard interval.
pub fn window_offset(j: usize) -> i64 {
    let raw = if j < 2 {
        j * FFT_SIZE
    } else {
        2 * FFT_SIZE + super::params::CP_LEN + super::params::SYMBOL_LEN * (j - 2)
    };
    raw as i64 - WINDOW_BACKOFF as i64
}
