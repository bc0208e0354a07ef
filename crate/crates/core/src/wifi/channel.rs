//! Impairment simulator: multipath, carrier offset, noise.

use crate::dsp::GaussianRng;
use num_complex::Complex32;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub cfo_hz: f64,
    /// Signal-to-noise ratio over the signal portion; infinite = no noise.
    pub snr_db: f64,
    pub taps: Vec<Complex32>,
    /// Noise-only samples placed before the signal.
    pub start_pad: usize,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            cfo_hz: 0.0,
            snr_db: f64::INFINITY,
            taps: vec![Complex32::new(1.0, 0.0)],
            start_pad: 0,
            seed: 0,
        }
    }
}

/// Convolves with `taps` (full length), rotates by the offset, prepends the
/// pad and adds AWGN scaled to the mean signal power.
pub fn apply_channel(samples: &[Complex32], cfg: &ChannelConfig, sample_rate: f64) -> Vec<Complex32> {
    assert!(!cfg.taps.is_empty(), "channel needs at least one tap");
    let n = samples.len() + cfg.taps.len() - 1;
    let mut conv = vec![Complex32::new(0.0, 0.0); if samples.is_empty() { 0 } else { n }];
    for (i, x) in samples.iter().enumerate() {
        for (k, t) in cfg.taps.iter().enumerate() {
            conv[i + k] += x * t;
        }
    }
    let step = cfg.cfo_hz / sample_rate;
    if cfg.cfo_hz != 0.0 {
        for (i, v) in conv.iter_mut().enumerate() {
            let ph = (step * i as f64).fract() * TAU;
            *v *= Complex32::new(ph.cos() as f32, ph.sin() as f32);
        }
    }
    let mut out = vec![Complex32::new(0.0, 0.0); cfg.start_pad];
    out.extend(conv);
    if cfg.snr_db.is_finite() {
        let body = &out[cfg.start_pad..];
        let p = if body.is_empty() {
            0.0
        } else {
            body.iter().map(|v| v.norm_sqr() as f64).sum::<f64>() / body.len() as f64
        };
        let sigma = (p / 10f64.powf(cfg.snr_db / 10.0) / 2.0).sqrt();
        let mut g = GaussianRng::new(cfg.seed);
        for v in out.iter_mut() {
            *v += g.complex(sigma);
        }
    }
    out
}

/// Frames joined with noise gaps. Frame `i` goes through its own channel
/// realization (seeded from `seed` and `i`) with `gap` leading samples.
/// Returns the capture and each frame's first sample.
pub fn build_capture(
    frames: &[Vec<Complex32>],
    gap: usize,
    cfo_hz: f64,
    snr_db: f64,
    seed: u64,
    sample_rate: f64,
) -> (Vec<Complex32>, Vec<usize>) {
    let mut out = Vec::new();
    let mut starts = Vec::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        let cfg = ChannelConfig {
            cfo_hz,
            snr_db,
            start_pad: gap,
            seed: seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            ..ChannelConfig::default()
        };
        starts.push(out.len() + gap);
        out.extend(apply_channel(f, &cfg, sample_rate));
    }
    (out, starts)
}
