//! Reference floating-point FFT: iterative radix-2 decimation-in-time with a
//! per-plan twiddle table. Arithmetic runs in f64; inputs and outputs are f32.

use super::DspError;
use num_complex::{Complex32, Complex64};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scaling {
    None,
    /// Multiply inverse transforms by 1/N.
    InverseOneOverN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FftPlan {
    size: usize,
    direction: Direction,
    scaling: Scaling,
}

impl FftPlan {
    /// Forward unscaled, inverse scaled by 1/N.
    pub fn new(size: usize, direction: Direction) -> Result<Self, DspError> {
        Self::with_scaling(size, direction, Scaling::InverseOneOverN)
    }

    pub fn with_scaling(
        size: usize,
        direction: Direction,
        scaling: Scaling,
    ) -> Result<Self, DspError> {
        if size < 2 || !size.is_power_of_two() {
            return Err(DspError::InvalidParameter(format!(
                "FFT size {size} is not a power of two >= 2"
            )));
        }
        Ok(Self {
            size,
            direction,
            scaling,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
    }
}

/// An FFT plan with its twiddle table.
#[derive(Debug, Clone)]
pub struct Fft {
    plan: FftPlan,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Fft {
    pub fn new(plan: FftPlan) -> Self {
        let n = plan.size;
        let sign = match plan.direction {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        };
        let twiddles = (0..n / 2)
            .map(|k| Complex64::from_polar(1.0, sign * TAU * k as f64 / n as f64))
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| i.reverse_bits() >> (usize::BITS - bits))
            .collect();
        Self {
            plan,
            twiddles,
            bitrev,
        }
    }

    pub fn plan(&self) -> FftPlan {
        self.plan
    }

    pub fn process(&self, input: &[Complex32]) -> Result<Vec<Complex32>, DspError> {
        let mut out = vec![Complex32::new(0.0, 0.0); self.plan.size];
        self.process_into(input, &mut out)?;
        Ok(out)
    }

    pub fn process_into(&self, input: &[Complex32], out: &mut [Complex32]) -> Result<(), DspError> {
        let n = self.plan.size;
        if input.len() != n || out.len() != n {
            return Err(DspError::LengthMismatch {
                expected: n,
                got: if input.len() != n { input.len() } else { out.len() },
            });
        }
        let mut work: Vec<Complex64> = self
            .bitrev
            .iter()
            .map(|&j| {
                let x = input[j];
                Complex64::new(x.re as f64, x.im as f64)
            })
            .collect();
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = work[start + k];
                    let b = work[start + k + half] * w;
                    work[start + k] = a + b;
                    work[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
        let scale = match (self.plan.direction, self.plan.scaling) {
            (Direction::Inverse, Scaling::InverseOneOverN) => 1.0 / n as f64,
            _ => 1.0,
        };
        for (o, w) in out.iter_mut().zip(&work) {
            *o = Complex32::new((w.re * scale) as f32, (w.im * scale) as f32);
        }
        Ok(())
    }
}

/// Direct O(N²) DFT in f64, used where a slow exact reference is wanted at
/// run time (benchmark error columns). Any length.
pub fn dft_reference(input: &[Complex32], direction: Direction) -> Vec<Complex64> {
    let n = input.len();
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    (0..n)
        .map(|k| {
            input
                .iter()
                .enumerate()
                .map(|(t, x)| {
                    let ang = sign * TAU * ((k * t) % n) as f64 / n as f64;
                    Complex64::new(x.re as f64, x.im as f64) * Complex64::from_polar(1.0, ang)
                })
                .sum()
        })
        .collect()
}
