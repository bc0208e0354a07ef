//! Channel estimation from the long training field and per-symbol
//! equalization with pilot phase tracking.

use super::params::*;
use super::WifiError;
use num_complex::{Complex32, Complex64};
use serde::{Deserialize, Serialize};

/// Smallest usable channel gain magnitude.
pub const MIN_GAIN: f32 = 1e-6;

/// Static per-frame channel estimate, indexed by FFT bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub h: [Complex32; FFT_SIZE],
}

/// One equalized OFDM symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equalized {
    /// Data carriers in transmission order.
    pub data: Vec<Complex32>,
    /// Common phase removed (radians).
    pub residual_phase: f32,
    /// Linear phase slope removed (radians per carrier).
    pub timing_slope: f32,
}

fn occupied() -> impl Iterator<Item = i32> {
    (-26..=26).filter(|k| *k != 0)
}

impl ChannelEstimate {
    /// Gain on carrier `k` (signed index).
    pub fn gain(&self, k: i32) -> Complex32 {
        self.h[bin(k)]
    }
}

/// Least-squares estimate from the two LTF periods (already transformed):
/// `H[k] = (Y1[k] + Y2[k]) / 2 / L[k]`.
pub fn estimate_channel(ltf1: &[Complex32], ltf2: &[Complex32]) -> Result<ChannelEstimate, WifiError> {
    for v in [ltf1, ltf2] {
        if v.len() != FFT_SIZE {
            return Err(WifiError::LengthMismatch {
                expected: FFT_SIZE,
                got: v.len(),
            });
        }
    }
    let reference = ltf_freq();
    let mut h = [Complex32::new(0.0, 0.0); FFT_SIZE];
    for k in occupied() {
        let b = bin(k);
        let g = (ltf1[b] + ltf2[b]) * 0.5 / reference[b];
        let mag = g.norm();
        if mag.is_nan() || mag < MIN_GAIN {
            return Err(WifiError::DegenerateChannel);
        }
        h[b] = g;
    }
    Ok(ChannelEstimate { h })
}

/// Divides by the channel, then removes the common phase and timing slope
/// seen on the four pilots (polarity of `symbol_index`, 0 = SIGNAL).
pub fn equalize(
    symbol: &[Complex32],
    est: &ChannelEstimate,
    symbol_index: usize,
) -> Result<Equalized, WifiError> {
    if symbol.len() != FFT_SIZE {
        return Err(WifiError::LengthMismatch {
            expected: FFT_SIZE,
            got: symbol.len(),
        });
    }
    let pol = pilot_polarity()[symbol_index % 127];
    let z = |k: i32| symbol[bin(k)] / est.h[bin(k)];
    let r: Vec<Complex64> = PILOT_CARRIERS
        .iter()
        .zip(PILOT_VALUES)
        .map(|(&k, v)| {
            let p = z(k) * (pol * v);
            Complex64::new(p.re as f64, p.im as f64)
        })
        .collect();
    let total: Complex64 = r.iter().sum();
    let mag = total.norm();
    if !mag.is_finite() || mag <= 1e-9 {
        return Err(WifiError::DegeneratePilots);
    }
    // Angles relative to the common rotation, then a fit through the carriers.
    let rel: Vec<f64> = r.iter().map(|v| (v * total.conj()).arg()).collect();
    let kk: f64 = PILOT_CARRIERS.iter().map(|k| (*k as f64).powi(2)).sum();
    let slope = PILOT_CARRIERS
        .iter()
        .zip(&rel)
        .map(|(k, a)| *k as f64 * a)
        .sum::<f64>()
        / kk;
    let phase = total.arg() + rel.iter().sum::<f64>() / rel.len() as f64;
    let data = data_carriers()
        .iter()
        .map(|&k| {
            let a = -(phase + slope * k as f64);
            z(k) * Complex32::new(a.cos() as f32, a.sin() as f32)
        })
        .collect();
    Ok(Equalized {
        data,
        residual_phase: phase as f32,
        timing_slope: slope as f32,
    })
}
