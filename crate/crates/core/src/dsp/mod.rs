//! Signal-processing building blocks: sources, noise, throttling, FIR
//! filtering, type conversion, vectorization and a reference FFT.

mod blocks;
mod fft;
mod fir;
mod rng;

pub use blocks::{
    ComplexToInt, CosineSource, FloatToInt, IntToFloat, NoiseAdder, RealPairsToComplex,
    SpectrumHandle, SpectrumSink, StreamToVector, Throttle, VectorToStream,
};
pub use fft::{dft_reference, Direction, Fft, FftPlan, Scaling};
pub use fir::{design_lowpass, FirBlock, FirFilter, FirTaps, IntFir, IntFirBlock};
pub use rng::GaussianRng;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DspError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Swaps the two halves so DC sits at index N/2.
pub fn fftshift<T: Copy>(x: &[T]) -> Vec<T> {
    let h = x.len() / 2;
    x[h..].iter().chain(&x[..h]).copied().collect()
}

#[cfg(test)]
mod tests;
