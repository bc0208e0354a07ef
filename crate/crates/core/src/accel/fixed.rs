//! Q1.15 complex samples and the fixed-point radix-2 datapath.

use serde::{Deserialize, Serialize};
use num_complex::Complex32;
use std::f64::consts::TAU;

/// Complex Q1.15 sample: 16-bit two's complement I and Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Cq15 {
    pub re: i16,
    pub im: i16,
}

impl Cq15 {
    pub const fn new(re: i16, im: i16) -> Self {
        Self { re, im }
    }
}

/// Bytes one sample occupies on the bus.
pub const SAMPLE_BYTES: usize = 4;

const Q15: f64 = 32768.0;

/// Maps `x / full_scale` to Q1.15, rounding half to even and saturating.
pub fn quantize(x: &[Complex32], full_scale: f32) -> Vec<Cq15> {
    assert!(full_scale > 0.0, "full_scale must be positive");
    let q = |v: f32| {
        let s = (v as f64 / full_scale as f64 * Q15).round_ties_even();
        s.clamp(i16::MIN as f64, i16::MAX as f64) as i16
    };
    x.iter().map(|v| Cq15::new(q(v.re), q(v.im))).collect()
}

/// Exact inverse mapping of representable Q1.15 values.
pub fn dequantize(x: &[Cq15], full_scale: f32) -> Vec<Complex32> {
    let k = full_scale as f64 / Q15;
    x.iter()
        .map(|v| Complex32::new((v.re as f64 * k) as f32, (v.im as f64 * k) as f32))
        .collect()
}

/// Divides by `2^shift`, rounding halves away from zero.
fn round_shift(v: i64, shift: u32) -> i64 {
    if shift == 0 {
        return v;
    }
    let half = 1i64 << (shift - 1);
    if v >= 0 {
        (v + half) >> shift
    } else {
        -((-v + half) >> shift)
    }
}

fn saturate(v: i64, overflow: &mut bool) -> i16 {
    if v > i16::MAX as i64 {
        *overflow = true;
        i16::MAX
    } else if v < i16::MIN as i64 {
        *overflow = true;
        i16::MIN
    } else {
        v as i16
    }
}

/// In-place decimation-in-time FFT on Q1.15 data.
///
/// Stage `s` (0 = first, 2-point butterflies) right-shifts its outputs by
/// `shifts[s]`. Each butterfly is computed exactly in i64 and rounded once.
/// Returns true if any output saturated.
pub fn fixed_fft(data: &mut [Cq15], inverse: bool, shifts: &[u32]) -> bool {
    let n = data.len();
    assert!(n.is_power_of_two() && n >= 2);
    let stages = n.trailing_zeros() as usize;
    assert!(shifts.len() >= stages);
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let tw: Vec<(i64, i64)> = (0..n / 2)
        .map(|k| {
            let a = sign * TAU * k as f64 / n as f64;
            let q = |v: f64| (v * Q15).round().clamp(-Q15, Q15 - 1.0) as i64;
            (q(a.cos()), q(a.sin()))
        })
        .collect();
    let mut overflow = false;
    let mut half = 1;
    let mut stage = 0;
    while half < n {
        let stride = n / (2 * half);
        let shift = 15 + shifts[stage];
        for start in (0..n).step_by(2 * half) {
            for k in 0..half {
                let (wr, wi) = tw[k * stride];
                let a = data[start + k];
                let b = data[start + k + half];
                let (br, bi) = (b.re as i64, b.im as i64);
                let tr = br * wr - bi * wi;
                let ti = br * wi + bi * wr;
                let (ar, ai) = ((a.re as i64) << 15, (a.im as i64) << 15);
                data[start + k] = Cq15::new(
                    saturate(round_shift(ar + tr, shift), &mut overflow),
                    saturate(round_shift(ai + ti, shift), &mut overflow),
                );
                data[start + k + half] = Cq15::new(
                    saturate(round_shift(ar - tr, shift), &mut overflow),
                    saturate(round_shift(ai - ti, shift), &mut overflow),
                );
            }
        }
        half *= 2;
        stage += 1;
    }
    overflow
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_symmetric() {
        assert_eq!(round_shift(3, 1), 2);
        assert_eq!(round_shift(-3, 1), -2);
        assert_eq!(round_shift(5, 2), 1);
        assert_eq!(round_shift(-6, 2), -2);
        assert_eq!(round_shift(7, 0), 7);
    }

    #[test]
    fn quantize_edges() {
        let q = quantize(&[Complex32::new(0.0, 1.0), Complex32::new(-1.0, 2.0)], 1.0);
        assert_eq!(q[0], Cq15::new(0, 32767));
        assert_eq!(q[1], Cq15::new(-32768, 32767));
        assert_eq!(dequantize(&[Cq15::new(0, 0)], 1.0)[0], Complex32::new(0.0, 0.0));
        // Ties go to even.
        let half_lsb = 0.5 / 32768.0;
        assert_eq!(quantize(&[Complex32::new(half_lsb, 3.0 * half_lsb)], 1.0)[0], Cq15::new(0, 2));
    }
}
