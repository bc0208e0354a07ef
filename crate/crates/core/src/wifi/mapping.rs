//! Gray-coded constellations with unit average energy, and max-log soft
//! demapping (positive LLR = bit 0).

use super::params::Modulation;
use num_complex::Complex32;

fn norm(m: Modulation) -> f32 {
    match m {
        Modulation::Bpsk => 1.0,
        Modulation::Qpsk => std::f32::consts::FRAC_1_SQRT_2,
        Modulation::Qam16 => 1.0 / 10f32.sqrt(),
        Modulation::Qam64 => 1.0 / 42f32.sqrt(),
    }
}

/// One axis level from 1..=3 Gray bits (first bit = sign bit).
fn axis_level(bits: &[u8]) -> f32 {
    match bits {
        [b0] => 2.0 * *b0 as f32 - 1.0,
        [b0, b1] => {
            let mag = if *b1 == 0 { 3.0 } else { 1.0 };
            if *b0 == 0 { -mag } else { mag }
        }
        [b0, b1, b2] => {
            let mag = match (b1, b2) {
                (0, 0) => 7.0,
                (0, _) => 5.0,
                (_, 1) => 3.0,
                _ => 1.0,
            };
            if *b0 == 0 { -mag } else { mag }
        }
        _ => unreachable!("axis carries 1..=3 bits"),
    }
}

/// Maps groups of `bits_per_symbol` bits to constellation points.
pub fn map(bits: &[u8], m: Modulation) -> Vec<Complex32> {
    let n = m.bits_per_symbol();
    assert_eq!(bits.len() % n, 0, "partial constellation symbol");
    let k = norm(m);
    bits.chunks_exact(n)
        .map(|c| match m {
            Modulation::Bpsk => Complex32::new(axis_level(c) * k, 0.0),
            _ => {
                let h = n / 2;
                Complex32::new(axis_level(&c[..h]) * k, axis_level(&c[h..]) * k)
            }
        })
        .collect()
}

fn axis_llrs(y: f32, bits: usize, out: &mut Vec<f32>) {
    out.push(-y);
    if bits >= 2 {
        let inner = if bits == 2 { 2.0 } else { 4.0 };
        out.push(y.abs() - inner);
    }
    if bits == 3 {
        out.push((y.abs() - 4.0).abs() - 2.0);
    }
}

/// Soft bits for each point, in the order [`map`] consumed them.
pub fn demap(points: &[Complex32], m: Modulation) -> Vec<f32> {
    let k = norm(m);
    let n = m.bits_per_symbol();
    let mut out = Vec::with_capacity(points.len() * n);
    for p in points {
        let (i, q) = (p.re / k, p.im / k);
        match m {
            Modulation::Bpsk => axis_llrs(i, 1, &mut out),
            _ => {
                axis_llrs(i, n / 2, &mut out);
                axis_llrs(q, n / 2, &mut out);
            }
        }
    }
    out
}

/// Hard decisions from soft bits.
pub fn hard(soft: &[f32]) -> Vec<u8> {
    soft.iter().map(|&l| (l < 0.0) as u8).collect()
}
