//! FFT accelerator model: a register file, a DMA job interface, a Q1.15
//! datapath with per-stage scaling, and a bus transfer-time model. Exposed
//! through [`FftBackend`] so it can stand in for the software FFT.

mod backend;
mod device;
mod fixed;
mod transfer;

pub use backend::{
    BackendError, BackendKind, DeviceBackend, FftBackend, FftBlock, SoftwareBackend, Transform,
};
pub use device::{
    Completion, DeviceConfig, DeviceError, FftDevice, FftDirection, DEFAULT_SCALE_SCHED,
    DEVICE_ID, MAX_LOG2, MIN_LOG2, REG_CP_LEN, REG_DIRECTION, REG_ID, REG_NFFT_LOG2,
    REG_SCALE_SCHED, REG_STATUS, STATUS_BUSY, STATUS_DONE, STATUS_ERROR, STATUS_OVERFLOW,
};
pub use fixed::{dequantize, fixed_fft, quantize, Cq15, SAMPLE_BYTES};
pub use transfer::TransferModel;

#[cfg(test)]
mod tests;
