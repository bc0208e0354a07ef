//! Reference transmitter.

use super::coding::{bytes_to_bits, conv_encode, interleave, puncture, scramble};
use super::mapping::map;
use super::params::*;
use super::signal::SignalField;
use super::WifiError;
use crate::dsp::{Direction, Fft, FftPlan};
use num_complex::Complex32;

fn ifft64(freq: &[Complex32; FFT_SIZE]) -> Vec<Complex32> {
    Fft::new(FftPlan::new(FFT_SIZE, Direction::Inverse).expect("64 is valid"))
        .process(freq)
        .expect("64 samples")
}

/// 160-sample short training field: ten 16-sample periods.
pub fn stf_time() -> Vec<Complex32> {
    let t = ifft64(&stf_freq());
    (0..STF_LEN).map(|n| t[n % FFT_SIZE]).collect()
}

/// One 64-sample long training period.
pub fn ltf_period() -> Vec<Complex32> {
    ifft64(&ltf_freq())
}

/// 160-sample long training field: 32-sample guard then two periods.
pub fn ltf_time() -> Vec<Complex32> {
    let p = ltf_period();
    let mut out = p[32..].to_vec();
    out.extend_from_slice(&p);
    out.extend_from_slice(&p);
    out
}

/// Frequency-domain OFDM symbol: data on the 48 data carriers, pilots with
/// polarity for `symbol_index` (0 = SIGNAL).
pub fn symbol_freq(data: &[Complex32], symbol_index: usize) -> [Complex32; FFT_SIZE] {
    assert_eq!(data.len(), N_DATA_CARRIERS);
    let mut x = [Complex32::new(0.0, 0.0); FFT_SIZE];
    for (k, d) in data_carriers().iter().zip(data) {
        x[bin(*k)] = *d;
    }
    let pol = pilot_polarity()[symbol_index % 127];
    for (k, v) in PILOT_CARRIERS.iter().zip(PILOT_VALUES) {
        x[bin(*k)] = Complex32::new(pol * v, 0.0);
    }
    x
}

/// Cyclic prefix plus 64-sample body.
pub fn ofdm_symbol(data: &[Complex32], symbol_index: usize) -> Vec<Complex32> {
    let body = ifft64(&symbol_freq(data, symbol_index));
    let mut out = body[FFT_SIZE - CP_LEN..].to_vec();
    out.extend_from_slice(&body);
    out
}

/// Scrambled, tail-zeroed DATA bits (SERVICE, PSDU, tail, pad).
pub fn data_bits(psdu: &[u8], mcs: Mcs, seed: u8) -> Vec<u8> {
    let n_sym = mcs.n_symbols(psdu.len());
    let mut bits = vec![0u8; SERVICE_BITS];
    bits.extend(bytes_to_bits(psdu));
    bits.resize(n_sym * mcs.n_dbps(), 0);
    let mut s = scramble(&bits, seed);
    let tail = SERVICE_BITS + 8 * psdu.len();
    s[tail..tail + TAIL_BITS].iter_mut().for_each(|b| *b = 0);
    s
}

/// Complete baseband frame: STF, LTF, SIGNAL, DATA.
pub fn encode_frame(
    psdu: &[u8],
    mcs: Mcs,
    _params: &OfdmParams,
    scrambler_seed: u8,
) -> Result<Vec<Complex32>, WifiError> {
    let signal = SignalField::new(mcs, psdu.len())?;
    if !(1..=0x7f).contains(&scrambler_seed) {
        return Err(WifiError::InvalidSeed(scrambler_seed));
    }
    let mut out = Vec::with_capacity(frame_len(mcs, psdu.len()));
    out.extend(stf_time());
    out.extend(ltf_time());
    out.extend(ofdm_symbol(&map(&signal.encode(), Modulation::Bpsk), 0));

    let coded = puncture(&conv_encode(&data_bits(psdu, mcs, scrambler_seed)), mcs.code_rate());
    for (i, chunk) in coded.chunks_exact(mcs.n_cbps()).enumerate() {
        let bits = interleave(chunk, mcs.n_bpsc())?;
        out.extend(ofdm_symbol(&map(&bits, mcs.modulation()), i + 1));
    }
    debug_assert_eq!(out.len(), frame_len(mcs, psdu.len()));
    Ok(out)
}
