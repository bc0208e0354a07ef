//! Register-level model of the FFT accelerator.
//!
//! | addr | name        | access | reset      | fields                                      |
//! |------|-------------|--------|------------|---------------------------------------------|
//! | 0x00 | ID          | RO     | 0x46465431 | constant                                    |
//! | 0x04 | STATUS      | RO/W1C | 0          | bit0 busy, bit1 done, bit2 error, bit3 ovf  |
//! | 0x08 | DIRECTION   | RW     | 0          | bit0: 0 forward, 1 inverse                  |
//! | 0x0C | NFFT_LOG2   | RW     | 6          | 3..=11                                      |
//! | 0x10 | CP_LEN      | RW     | 0          | 0..fft_size                                 |
//! | 0x14 | SCALE_SCHED | RW     | 0x155555   | 2 bits per stage, stage 0 in bits 1:0       |
//!
//! STATUS bits 1..3 clear when written with 1; busy is hardware-owned.

use super::fixed::{fixed_fft, Cq15, SAMPLE_BYTES};
use super::transfer::TransferModel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const REG_ID: u32 = 0x00;
pub const REG_STATUS: u32 = 0x04;
pub const REG_DIRECTION: u32 = 0x08;
pub const REG_NFFT_LOG2: u32 = 0x0C;
pub const REG_CP_LEN: u32 = 0x10;
pub const REG_SCALE_SCHED: u32 = 0x14;

pub const DEVICE_ID: u32 = 0x4646_5431;

pub const STATUS_BUSY: u32 = 1 << 0;
pub const STATUS_DONE: u32 = 1 << 1;
pub const STATUS_ERROR: u32 = 1 << 2;
pub const STATUS_OVERFLOW: u32 = 1 << 3;

pub const MIN_LOG2: u32 = 3;
pub const MAX_LOG2: u32 = 11;

/// Shift 1 at every stage: overall 1/N, never overflows for in-range input.
pub const DEFAULT_SCALE_SCHED: u32 = 0x0015_5555;
const SCHED_MASK: u32 = (1 << (2 * MAX_LOG2)) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeviceError {
    #[error("unknown register address {0:#04x}")]
    UnknownAddress(u32),
    #[error("register {0:#04x} is read-only")]
    ReadOnly(u32),
    #[error("device busy")]
    Busy,
    #[error("value {value} out of range for register {addr:#04x}")]
    OutOfRange { addr: u32, value: u32 },
    #[error("device not configured")]
    Unconfigured,
    #[error("no job in flight")]
    Idle,
    #[error("unsupported FFT size {0}")]
    InvalidSize(usize),
    #[error("cyclic prefix {cp} not below FFT size {n}")]
    CpTooLong { cp: usize, n: usize },
    #[error("DMA buffer holds {got} samples, job needs {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FftDirection {
    Forward,
    Inverse,
}

/// Everything `configure` writes in one go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceConfig {
    pub direction: FftDirection,
    pub fft_size: usize,
    pub cp_len: usize,
    pub scale_sched: u32,
}

impl DeviceConfig {
    pub fn new(direction: FftDirection, fft_size: usize) -> Self {
        Self {
            direction,
            fft_size,
            cp_len: 0,
            scale_sched: DEFAULT_SCALE_SCHED,
        }
    }

    /// Sum of the per-stage shifts actually used at this size.
    pub fn total_shift(&self) -> u32 {
        stage_shifts(self.scale_sched, self.fft_size.trailing_zeros())
            .iter()
            .sum()
    }
}

fn stage_shifts(sched: u32, stages: u32) -> Vec<u32> {
    (0..stages).map(|s| (sched >> (2 * s)) & 3).collect()
}

/// A finished DMA job.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub output: Vec<Cq15>,
    pub bytes_in: u64,
    pub bytes_out: u64,
    /// Modeled device time in seconds (advisory; never slept).
    pub modeled_time_s: f64,
    pub overflow: bool,
}

#[derive(Debug, Clone)]
pub struct FftDevice {
    status: u32,
    direction: u32,
    nfft_log2: u32,
    cp_len: u32,
    scale_sched: u32,
    configured: bool,
    pending: Option<Vec<Cq15>>,
    model: TransferModel,
    jobs: u64,
}

impl Default for FftDevice {
    fn default() -> Self {
        Self::new(TransferModel::default())
    }
}

impl FftDevice {
    pub fn new(model: TransferModel) -> Self {
        Self {
            status: 0,
            direction: 0,
            nfft_log2: 6,
            cp_len: 0,
            scale_sched: DEFAULT_SCALE_SCHED,
            configured: false,
            pending: None,
            model,
            jobs: 0,
        }
    }

    pub fn model(&self) -> &TransferModel {
        &self.model
    }

    pub fn jobs(&self) -> u64 {
        self.jobs
    }

    pub fn supports(n: usize) -> bool {
        n.is_power_of_two() && (MIN_LOG2..=MAX_LOG2).contains(&n.trailing_zeros())
    }

    fn busy(&self) -> bool {
        self.status & STATUS_BUSY != 0
    }

    fn reject(&mut self, e: DeviceError) -> DeviceError {
        self.status |= STATUS_ERROR;
        e
    }

    pub fn read_register(&self, addr: u32) -> Result<u32, DeviceError> {
        Ok(match addr {
            REG_ID => DEVICE_ID,
            REG_STATUS => self.status,
            REG_DIRECTION => self.direction,
            REG_NFFT_LOG2 => self.nfft_log2,
            REG_CP_LEN => self.cp_len,
            REG_SCALE_SCHED => self.scale_sched,
            other => return Err(DeviceError::UnknownAddress(other)),
        })
    }

    pub fn write_register(&mut self, addr: u32, value: u32) -> Result<(), DeviceError> {
        match addr {
            REG_ID => return Err(self.reject(DeviceError::ReadOnly(addr))),
            REG_STATUS => {
                self.status &= !(value & (STATUS_DONE | STATUS_ERROR | STATUS_OVERFLOW));
                return Ok(());
            }
            REG_DIRECTION | REG_NFFT_LOG2 | REG_CP_LEN | REG_SCALE_SCHED => {}
            other => return Err(self.reject(DeviceError::UnknownAddress(other))),
        }
        if self.busy() {
            return Err(self.reject(DeviceError::Busy));
        }
        let out_of_range = DeviceError::OutOfRange { addr, value };
        match addr {
            REG_DIRECTION if value <= 1 => self.direction = value,
            REG_NFFT_LOG2 if (MIN_LOG2..=MAX_LOG2).contains(&value) => {
                self.nfft_log2 = value;
                if self.cp_len >= 1 << value {
                    self.cp_len = 0;
                }
            }
            REG_CP_LEN if value < (1 << self.nfft_log2) => self.cp_len = value,
            REG_SCALE_SCHED if value & !SCHED_MASK == 0 => self.scale_sched = value,
            _ => return Err(self.reject(out_of_range)),
        }
        self.configured = true;
        Ok(())
    }

    /// Same effect as the individual register writes, validated up front.
    pub fn configure(&mut self, cfg: &DeviceConfig) -> Result<(), DeviceError> {
        if self.busy() {
            return Err(self.reject(DeviceError::Busy));
        }
        if !Self::supports(cfg.fft_size) {
            return Err(self.reject(DeviceError::InvalidSize(cfg.fft_size)));
        }
        if cfg.cp_len >= cfg.fft_size {
            return Err(self.reject(DeviceError::CpTooLong {
                cp: cfg.cp_len,
                n: cfg.fft_size,
            }));
        }
        if cfg.scale_sched & !SCHED_MASK != 0 {
            return Err(self.reject(DeviceError::OutOfRange {
                addr: REG_SCALE_SCHED,
                value: cfg.scale_sched,
            }));
        }
        self.write_register(REG_NFFT_LOG2, cfg.fft_size.trailing_zeros())?;
        self.write_register(
            REG_DIRECTION,
            matches!(cfg.direction, FftDirection::Inverse) as u32,
        )?;
        self.write_register(REG_CP_LEN, cfg.cp_len as u32)?;
        self.write_register(REG_SCALE_SCHED, cfg.scale_sched)
    }

    pub fn config(&self) -> DeviceConfig {
        DeviceConfig {
            direction: if self.direction == 1 {
                FftDirection::Inverse
            } else {
                FftDirection::Forward
            },
            fft_size: 1 << self.nfft_log2,
            cp_len: self.cp_len as usize,
            scale_sched: self.scale_sched,
        }
    }

    /// Input samples the current configuration expects.
    pub fn input_len(&self) -> usize {
        let c = self.config();
        match c.direction {
            FftDirection::Forward => c.fft_size + c.cp_len,
            FftDirection::Inverse => c.fft_size,
        }
    }

    /// Hands a buffer to the DMA engine and raises busy.
    pub fn start(&mut self, input: Vec<Cq15>) -> Result<(), DeviceError> {
        if self.busy() {
            return Err(self.reject(DeviceError::Busy));
        }
        if !self.configured {
            return Err(self.reject(DeviceError::Unconfigured));
        }
        let need = self.input_len();
        if input.len() != need {
            return Err(self.reject(DeviceError::LengthMismatch {
                expected: need,
                got: input.len(),
            }));
        }
        self.status = (self.status & !STATUS_DONE) | STATUS_BUSY;
        self.pending = Some(input);
        Ok(())
    }

    /// Runs the in-flight job to completion.
    pub fn wait(&mut self) -> Result<Completion, DeviceError> {
        let input = self.pending.take().ok_or(DeviceError::Idle)?;
        let cfg = self.config();
        let n = cfg.fft_size;
        let bytes_in = (input.len() * SAMPLE_BYTES) as u64;
        let mut data = match cfg.direction {
            FftDirection::Forward => input[cfg.cp_len..].to_vec(),
            FftDirection::Inverse => input,
        };
        let shifts = stage_shifts(cfg.scale_sched, self.nfft_log2);
        let overflow = fixed_fft(&mut data, cfg.direction == FftDirection::Inverse, &shifts);
        let output = match cfg.direction {
            FftDirection::Forward => data,
            FftDirection::Inverse => {
                let mut o = data[n - cfg.cp_len..].to_vec();
                o.extend_from_slice(&data);
                o
            }
        };
        let bytes_out = (output.len() * SAMPLE_BYTES) as u64;
        self.status &= !STATUS_BUSY;
        self.status |= STATUS_DONE;
        if overflow {
            self.status |= STATUS_OVERFLOW;
        }
        self.jobs += 1;
        Ok(Completion {
            output,
            bytes_in,
            bytes_out,
            modeled_time_s: self.model.job_time(n, bytes_in, bytes_out),
            overflow,
        })
    }

    pub fn submit(&mut self, input: Vec<Cq15>) -> Result<Completion, DeviceError> {
        self.start(input)?;
        self.wait()
    }
}
