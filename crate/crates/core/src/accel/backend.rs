//! Interchangeable FFT compute backends and the runtime FFT block.

use super::device::{DeviceConfig, DeviceError, FftDevice, FftDirection};
use super::fixed::{dequantize, quantize};
use super::transfer::TransferModel;
use crate::dsp::{Direction, Fft, FftPlan};
use crate::runtime::{forward_tags, Block, BlockError, ItemKind, WorkIo, WorkStatus};
use num_complex::Complex32;
use std::collections::HashMap;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("FFT size {0} not supported by this backend")]
    Unsupported(usize),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// Result of one transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Transform {
    pub output: Vec<Complex32>,
    /// Modeled accelerator time (0 for software).
    pub modeled_ns: u64,
    /// Host time spent simulating hardware; not real CPU cost of the offload.
    pub emulation_ns: u64,
}

/// An FFT engine. Forward is unscaled, inverse carries 1/N, whatever the
/// implementation does internally.
pub trait FftBackend: Send {
    fn name(&self) -> &'static str;
    fn supports(&self, n: usize) -> bool;
    /// Max absolute error against an exact DFT for inputs of magnitude <= 1.
    fn tolerance(&self, n: usize) -> f64;
    fn transform(
        &mut self,
        input: &[Complex32],
        direction: Direction,
    ) -> Result<Transform, BackendError>;
}

/// Which backend to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackendKind {
    Software,
    Device,
}

impl BackendKind {
    pub fn build(self) -> Box<dyn FftBackend> {
        match self {
            BackendKind::Software => Box::new(SoftwareBackend::new()),
            BackendKind::Device => Box::new(DeviceBackend::new(FftDevice::default())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Software => "software",
            BackendKind::Device => "device",
        }
    }
}

impl std::str::FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "software" | "sw" => Ok(BackendKind::Software),
            "device" | "fpga" => Ok(BackendKind::Device),
            _ => Err(format!("unknown backend '{s}' (software|device)")),
        }
    }
}

/// Reference floating-point FFT with cached plans.
#[derive(Default)]
pub struct SoftwareBackend {
    plans: HashMap<(usize, Direction), Fft>,
}

impl SoftwareBackend {
    pub fn new() -> Self {
        Self::default()
    }
}

impl FftBackend for SoftwareBackend {
    fn name(&self) -> &'static str {
        "software"
    }

    fn supports(&self, n: usize) -> bool {
        n >= 2 && n.is_power_of_two()
    }

    fn tolerance(&self, n: usize) -> f64 {
        1e-5 * (n as f64 / 256.0).max(1.0)
    }

    fn transform(
        &mut self,
        input: &[Complex32],
        direction: Direction,
    ) -> Result<Transform, BackendError> {
        let n = input.len();
        if !self.supports(n) {
            return Err(BackendError::Unsupported(n));
        }
        let fft = self
            .plans
            .entry((n, direction))
            .or_insert_with(|| Fft::new(FftPlan::new(n, direction).expect("size checked")));
        let output = fft.process(input).expect("length checked");
        Ok(Transform {
            output,
            modeled_ns: 0,
            emulation_ns: 0,
        })
    }
}

/// Offloads to an [`FftDevice`]: quantize, configure when the job shape
/// changes, submit, dequantize and undo the stage scaling.
pub struct DeviceBackend {
    device: FftDevice,
    full_scale: f32,
    scale_sched: u32,
    current: Option<DeviceConfig>,
}

impl DeviceBackend {
    pub fn new(device: FftDevice) -> Self {
        Self {
            device,
            full_scale: 1.0,
            scale_sched: super::device::DEFAULT_SCALE_SCHED,
            current: None,
        }
    }

    pub fn with_model(model: TransferModel) -> Self {
        Self::new(FftDevice::new(model))
    }

    /// Input magnitude mapped to Q1.15 full scale.
    pub fn with_full_scale(mut self, full_scale: f32) -> Self {
        assert!(full_scale > 0.0);
        self.full_scale = full_scale;
        self
    }

    pub fn with_scale_sched(mut self, sched: u32) -> Self {
        self.scale_sched = sched;
        self
    }

    pub fn device(&self) -> &FftDevice {
        &self.device
    }
}

impl FftBackend for DeviceBackend {
    fn name(&self) -> &'static str {
        "device"
    }

    fn supports(&self, n: usize) -> bool {
        FftDevice::supports(n)
    }

    fn tolerance(&self, n: usize) -> f64 {
        8.0 * n as f64 / 32768.0 * self.full_scale as f64
    }

    fn transform(
        &mut self,
        input: &[Complex32],
        direction: Direction,
    ) -> Result<Transform, BackendError> {
        let n = input.len();
        if !self.supports(n) {
            return Err(BackendError::Unsupported(n));
        }
        let cfg = DeviceConfig {
            direction: match direction {
                Direction::Forward => FftDirection::Forward,
                Direction::Inverse => FftDirection::Inverse,
            },
            fft_size: n,
            cp_len: 0,
            scale_sched: self.scale_sched,
        };
        let q = quantize(input, self.full_scale);
        let t0 = Instant::now();
        if self.current != Some(cfg) {
            self.device.configure(&cfg)?;
            self.current = Some(cfg);
        }
        let done = self.device.submit(q)?;
        let emulation_ns = t0.elapsed().as_nanos() as u64;
        let mut gain = (1u64 << cfg.total_shift()) as f32;
        if direction == Direction::Inverse {
            gain /= n as f32;
        }
        let output = dequantize(&done.output, self.full_scale)
            .into_iter()
            .map(|v| v * gain)
            .collect();
        Ok(Transform {
            output,
            modeled_ns: (done.modeled_time_s * 1e9).round() as u64,
            emulation_ns,
        })
    }
}

/// Runtime FFT stage over `N`-vectors. Reports modeled device time to the
/// profiler and keeps emulation time out of its own measured cost.
pub struct FftBlock {
    backend: Box<dyn FftBackend>,
    n: usize,
    direction: Direction,
}

impl FftBlock {
    pub fn new(
        backend: Box<dyn FftBackend>,
        n: usize,
        direction: Direction,
    ) -> Result<Self, BackendError> {
        if !backend.supports(n) {
            return Err(BackendError::Unsupported(n));
        }
        Ok(Self {
            backend,
            n,
            direction,
        })
    }
}

impl Block for FftBlock {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::ComplexVector(self.n)]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::ComplexVector(self.n)]
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let count = io.inputs[0].items().min(io.outputs[0].space());
        let (mut modeled, mut excluded) = (0, 0);
        {
            let (input, out) = (&io.inputs[0], &mut io.outputs[0]);
            let x = input.slice::<Complex32>();
            for v in 0..count {
                let t = self
                    .backend
                    .transform(&x[v * self.n..(v + 1) * self.n], self.direction)
                    .map_err(|e| BlockError::new(e.to_string()))?;
                modeled += t.modeled_ns;
                excluded += t.emulation_ns;
                out.push(&t.output);
            }
            forward_tags(input, out, count);
        }
        io.inputs[0].consume(count);
        io.record_modeled_ns(modeled);
        io.exclude_ns(excluded);
        Ok(WorkStatus::Ok)
    }
}
