//! Bit-level coding: scrambler, CRC-32 FCS, K=7 convolutional code,
//! puncturing, soft-decision Viterbi and the per-symbol interleaver.
//!
//! Soft bits are log-likelihood ratios with positive meaning bit 0; zero is
//! an erasure.

use super::params::CodeRate;
use super::WifiError;

/// Scrambler output for `n` steps from a 7-bit state.
///
/// Generator x^7 + x^4 + 1: feedback is state bit 6 xor bit 3, shifted in at
/// bit 0.
pub fn scrambler_sequence(seed: u8, n: usize) -> Vec<u8> {
    let mut s = seed & 0x7f;
    (0..n)
        .map(|_| {
            let fb = ((s >> 6) ^ (s >> 3)) & 1;
            s = ((s << 1) | fb) & 0x7f;
            fb
        })
        .collect()
}

/// XORs `bits` with the scrambler sequence. Self-inverse.
pub fn scramble(bits: &[u8], seed: u8) -> Vec<u8> {
    scrambler_sequence(seed, bits.len())
        .iter()
        .zip(bits)
        .map(|(s, b)| s ^ b)
        .collect()
}

/// Initial scrambler state given its first seven output bits.
pub fn recover_seed(first7: &[u8]) -> u8 {
    assert!(first7.len() >= 7);
    let mut s = first7[..7].iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1));
    for _ in 0..7 {
        let bit6 = (s & 1) ^ ((s >> 4) & 1);
        s = (s >> 1) | (bit6 << 6);
    }
    s
}

/// Descrambles a DATA field whose first seven plain bits are zero. Returns
/// the plain bits and the seed found.
pub fn descramble(bits: &[u8]) -> (Vec<u8>, u8) {
    if bits.len() < 7 {
        return (bits.to_vec(), 0);
    }
    let seed = recover_seed(bits);
    (scramble(bits, seed), seed)
}

/// CRC-32 as used for the FCS (reflected 0x04C11DB7, init and xor-out
/// 0xFFFFFFFF).
pub fn crc32(data: &[u8]) -> u32 {
    crc32fast::hash(data)
}

/// `body` followed by its little-endian CRC-32.
pub fn append_fcs(body: &[u8]) -> Vec<u8> {
    let mut v = body.to_vec();
    v.extend_from_slice(&crc32(body).to_le_bytes());
    v
}

/// True when the trailing four bytes are the CRC-32 of the rest.
pub fn check_fcs(psdu: &[u8]) -> Result<bool, WifiError> {
    if psdu.len() < 4 {
        return Err(WifiError::FcsTooShort(psdu.len()));
    }
    let (body, fcs) = psdu.split_at(psdu.len() - 4);
    Ok(crc32(body).to_le_bytes() == fcs)
}

pub const G0: u8 = 0o133;
pub const G1: u8 = 0o171;

fn parity(x: u8) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Rate-1/2 mother code, register starting at zero. Output A0 B0 A1 B1 ...
pub fn conv_encode(bits: &[u8]) -> Vec<u8> {
    let mut reg = 0u8;
    let mut out = Vec::with_capacity(bits.len() * 2);
    for &b in bits {
        reg = (reg >> 1) | ((b & 1) << 6);
        out.push(parity(reg & G0));
        out.push(parity(reg & G1));
    }
    out
}

/// Drops mother-code bits per the rate's pattern.
pub fn puncture<T: Copy>(coded: &[T], rate: CodeRate) -> Vec<T> {
    let p = rate.puncture_pattern();
    coded
        .iter()
        .enumerate()
        .filter(|(i, _)| p[i % p.len()])
        .map(|(_, v)| *v)
        .collect()
}

/// Punctured length of `mother_len` mother-code bits.
pub fn punctured_len(mother_len: usize, rate: CodeRate) -> usize {
    let p = rate.puncture_pattern();
    let kept = p.iter().filter(|k| **k).count();
    mother_len / p.len() * kept + p[..mother_len % p.len()].iter().filter(|k| **k).count()
}

/// Re-inserts erasures (0.0) at punctured positions to rebuild
/// `mother_len` soft bits.
pub fn depuncture(soft: &[f32], rate: CodeRate, mother_len: usize) -> Result<Vec<f32>, WifiError> {
    let need = punctured_len(mother_len, rate);
    if soft.len() < need {
        return Err(WifiError::LengthMismatch {
            expected: need,
            got: soft.len(),
        });
    }
    let p = rate.puncture_pattern();
    let mut it = soft.iter();
    Ok((0..mother_len)
        .map(|i| if p[i % p.len()] { *it.next().unwrap() } else { 0.0 })
        .collect())
}

/// Soft-decision maximum-likelihood decoder for the K=7 code.
///
/// `soft` is the punctured stream; the first `length` information bits are
/// decoded, with the trellis forced back to state zero at bit `length`
/// (the last six of them are the tail). Trailing coded bits are ignored.
pub fn viterbi_decode(soft: &[f32], rate: CodeRate, length: usize) -> Result<Vec<u8>, WifiError> {
    if length < 6 {
        return Err(WifiError::LengthMismatch {
            expected: 6,
            got: length,
        });
    }
    let mother = depuncture(soft, rate, 2 * length)?;
    Ok(viterbi_mother(&mother, length))
}

fn viterbi_mother(mother: &[f32], length: usize) -> Vec<u8> {
    // out[(state << 1) | bit] = (A, B) as +/-1 signs for metric sums.
    let mut out = [(0f32, 0f32); 128];
    for state in 0..64u8 {
        for bit in 0..2u8 {
            let reg = (bit << 6) | state;
            let sign = |b: u8| if b == 0 { 1.0 } else { -1.0 };
            out[((state as usize) << 1) | bit as usize] =
                (sign(parity(reg & G0)), sign(parity(reg & G1)));
        }
    }
    const NEG: f32 = -1e30;
    let mut pm = [NEG; 64];
    pm[0] = 0.0;
    let mut next = [NEG; 64];
    let mut decisions: Vec<u64> = Vec::with_capacity(length);
    for t in 0..length {
        let (la, lb) = (mother[2 * t], mother[2 * t + 1]);
        let mut dec = 0u64;
        let mut best = NEG;
        for (ns, slot) in next.iter_mut().enumerate() {
            let bit = ns >> 5;
            let p0 = (ns & 31) << 1;
            let p1 = p0 | 1;
            let (a0, b0) = out[(p0 << 1) | bit];
            let (a1, b1) = out[(p1 << 1) | bit];
            let m0 = pm[p0] + a0 * la + b0 * lb;
            let m1 = pm[p1] + a1 * la + b1 * lb;
            if m1 > m0 {
                *slot = m1;
                dec |= 1 << ns;
            } else {
                *slot = m0;
            }
            best = best.max(*slot);
        }
        for (p, n) in pm.iter_mut().zip(&next) {
            *p = n - best;
        }
        decisions.push(dec);
    }
    let mut bits = vec![0u8; length];
    let mut state = 0usize;
    for t in (0..length).rev() {
        bits[t] = (state >> 5) as u8;
        let d = ((decisions[t] >> state) & 1) as usize;
        state = ((state & 31) << 1) | d;
    }
    bits
}

fn interleave_index(k: usize, n_cbps: usize, n_bpsc: usize) -> usize {
    let s = (n_bpsc / 2).max(1);
    let i = (n_cbps / 16) * (k % 16) + k / 16;
    s * (i / s) + (i + n_cbps - (16 * i / n_cbps)) % s
}

fn check_block(len: usize, n_cbps: usize) -> Result<(), WifiError> {
    if len != n_cbps {
        return Err(WifiError::LengthMismatch {
            expected: n_cbps,
            got: len,
        });
    }
    Ok(())
}

/// Two-step block permutation over one OFDM symbol's coded bits.
pub fn interleave<T: Copy + Default>(bits: &[T], n_bpsc: usize) -> Result<Vec<T>, WifiError> {
    let n = 48 * n_bpsc;
    check_block(bits.len(), n)?;
    let mut out = vec![T::default(); n];
    for (k, b) in bits.iter().enumerate() {
        out[interleave_index(k, n, n_bpsc)] = *b;
    }
    Ok(out)
}

pub fn deinterleave<T: Copy + Default>(bits: &[T], n_bpsc: usize) -> Result<Vec<T>, WifiError> {
    let n = 48 * n_bpsc;
    check_block(bits.len(), n)?;
    Ok((0..n).map(|k| bits[interleave_index(k, n, n_bpsc)]).collect())
}

/// Bytes to bits, least significant bit first.
pub fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    bytes
        .iter()
        .flat_map(|b| (0..8).map(move |i| (b >> i) & 1))
        .collect()
}

/// Inverse of [`bytes_to_bits`]; `bits.len()` must be a multiple of 8.
pub fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks_exact(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, b)| acc | ((b & 1) << i)))
        .collect()
}
