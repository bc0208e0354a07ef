use serde::{Deserialize, Serialize};

/// DMA/bus timing model for the high-performance port.
///
/// Peak throughput is `bus_width_bits / 8 * clock_hz` bytes per second
/// (1.2e9 for the 64-bit, 150 MHz default).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferModel {
    pub bus_width_bits: u32,
    pub clock_hz: f64,
    /// Fixed per-transfer latency in seconds.
    pub setup_s: f64,
}

impl Default for TransferModel {
    fn default() -> Self {
        Self {
            bus_width_bits: 64,
            clock_hz: 150e6,
            setup_s: 0.0,
        }
    }
}

impl TransferModel {
    pub fn with_setup_us(mut self, us: f64) -> Self {
        self.setup_s = us * 1e-6;
        self
    }

    pub fn peak_bytes_per_s(&self) -> f64 {
        (self.bus_width_bits / 8) as f64 * self.clock_hz
    }

    /// Setup latency plus bytes at peak throughput.
    pub fn estimate_transfer_time(&self, n_bytes: u64) -> f64 {
        self.setup_s + n_bytes as f64 / self.peak_bytes_per_s()
    }

    /// One FFT job: setup, both DMA directions, and `N log2 N` pipeline
    /// cycles at the fabric clock.
    pub fn job_time(&self, fft_size: usize, bytes_in: u64, bytes_out: u64) -> f64 {
        let stages = fft_size.trailing_zeros() as f64;
        self.estimate_transfer_time(bytes_in + bytes_out) + fft_size as f64 * stages / self.clock_hz
    }
}
