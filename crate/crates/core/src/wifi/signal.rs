use super::coding::{conv_encode, deinterleave, interleave, viterbi_decode};
use super::params::{CodeRate, Mcs, MAX_PSDU};
use super::WifiError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum SignalError {
    #[error("SIGNAL parity check failed")]
    Parity,
    #[error("unknown rate pattern {0:?}")]
    UnknownRate([u8; 4]),
    #[error("SIGNAL tail bits not zero")]
    NonzeroTail,
    #[error("SIGNAL length {0} out of range")]
    BadLength(usize),
}

/// RATE, LENGTH, parity and tail of the PLCP header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalField {
    pub mcs: Mcs,
    pub length: usize,
}

impl SignalField {
    pub fn new(mcs: Mcs, length: usize) -> Result<Self, WifiError> {
        if !(1..=MAX_PSDU).contains(&length) {
            return Err(WifiError::LengthOutOfRange(length));
        }
        Ok(Self { mcs, length })
    }

    /// 24 header bits: rate (4), reserved (1), length LSB first (12), even
    /// parity over bits 0..17, six zero tail bits.
    pub fn to_bits(&self) -> [u8; 24] {
        let mut b = [0u8; 24];
        b[..4].copy_from_slice(&self.mcs.rate_bits());
        for i in 0..12 {
            b[5 + i] = ((self.length >> i) & 1) as u8;
        }
        b[17] = b[..17].iter().fold(0, |a, x| a ^ x);
        b
    }

    pub fn from_bits(b: &[u8; 24]) -> Result<Self, SignalError> {
        if b[..18].iter().fold(0, |a, x| a ^ x) != 0 {
            return Err(SignalError::Parity);
        }
        let rate = [b[0], b[1], b[2], b[3]];
        let mcs = Mcs::from_rate_bits(rate).ok_or(SignalError::UnknownRate(rate))?;
        if b[18..].iter().any(|&x| x != 0) {
            return Err(SignalError::NonzeroTail);
        }
        let length = (0..12).fold(0usize, |a, i| a | ((b[5 + i] as usize) << i));
        if length == 0 {
            return Err(SignalError::BadLength(length));
        }
        Ok(Self { mcs, length })
    }

    /// The 48 interleaved coded bits of the SIGNAL symbol.
    pub fn encode(&self) -> Vec<u8> {
        interleave(&conv_encode(&self.to_bits()), 1).expect("48 coded bits")
    }
}

/// Decodes 48 soft bits (BPSK, rate 1/2, interleaved) into the header.
pub fn decode_signal(soft: &[f32]) -> Result<SignalField, WifiError> {
    let deint = deinterleave(soft, 1)?;
    let bits = viterbi_decode(&deint, CodeRate::Half, 24)?;
    let arr: [u8; 24] = bits.try_into().expect("24 bits");
    SignalField::from_bits(&arr).map_err(WifiError::Signal)
}
