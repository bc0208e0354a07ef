//! Software-defined-radio engine: a block flow-graph runtime with per-block
//! profiling, an IEEE 802.11p OFDM receiver with its reference transmitter,
//! and an FFT accelerator model usable as a drop-in compute backend.

pub mod accel;
pub mod dsp;
pub mod profiler;
pub mod runtime;
pub mod wifi;
