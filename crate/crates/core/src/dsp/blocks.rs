use super::fft::{Direction, Fft, FftPlan};
use super::{fftshift, DspError, GaussianRng};
use crate::runtime::{copy_items, forward_tags, Block, BlockError, ItemKind, WorkIo, WorkStatus};
use num_complex::Complex32;
use std::f64::consts::TAU;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

/// Complex tone `amplitude * exp(j 2π f n / fs)`, n counting from 0.
pub struct CosineSource {
    cycles_per_sample: f64,
    amplitude: f64,
    n: u64,
    limit: Option<u64>,
}

impl CosineSource {
    /// Frequency 0 gives a DC stream. Frequencies at or above Nyquist and
    /// negative or non-finite parameters are rejected.
    pub fn new(frequency: f64, sample_rate: f64, amplitude: f64) -> Result<Self, DspError> {
        let ok = sample_rate.is_finite()
            && sample_rate > 0.0
            && frequency.is_finite()
            && frequency >= 0.0
            && frequency < sample_rate / 2.0
            && amplitude.is_finite()
            && amplitude >= 0.0;
        if !ok {
            return Err(DspError::InvalidParameter(format!(
                "cosine source needs 0 <= f < fs/2 and amplitude >= 0 \
                 (f {frequency}, fs {sample_rate}, amplitude {amplitude})"
            )));
        }
        Ok(Self {
            cycles_per_sample: frequency / sample_rate,
            amplitude,
            n: 0,
            limit: None,
        })
    }

    /// Stop after `n` samples instead of running forever.
    pub fn with_limit(mut self, n: u64) -> Self {
        self.limit = Some(n);
        self
    }

    /// Sample `n` of the tone.
    pub fn sample(&self, n: u64) -> Complex32 {
        // Reduce the phase in cycles first so long runs keep full precision.
        let phase = (self.cycles_per_sample * n as f64).fract() * TAU;
        Complex32::new(
            (self.amplitude * phase.cos()) as f32,
            (self.amplitude * phase.sin()) as f32,
        )
    }
}

impl Block for CosineSource {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let out = &mut io.outputs[0];
        let left = self.limit.map_or(u64::MAX, |l| l - self.n);
        let n = (out.space() as u64).min(left) as usize;
        let start = self.n;
        for (i, y) in out.slice_mut::<Complex32>()[..n].iter_mut().enumerate() {
            *y = self.sample(start + i as u64);
        }
        out.produce(n);
        self.n += n as u64;
        Ok(if Some(self.n) == self.limit {
            WorkStatus::Done
        } else {
            WorkStatus::Ok
        })
    }
}

/// Adds circular complex Gaussian noise, per-component std `stddev`.
pub struct NoiseAdder {
    rng: GaussianRng,
    stddev: f64,
}

impl NoiseAdder {
    pub fn new(seed: u64, stddev: f64) -> Result<Self, DspError> {
        if !(stddev.is_finite() && stddev >= 0.0) {
            return Err(DspError::InvalidParameter(format!("noise stddev {stddev} < 0")));
        }
        Ok(Self {
            rng: GaussianRng::new(seed),
            stddev,
        })
    }

    pub fn process(&mut self, input: &[Complex32]) -> Vec<Complex32> {
        input.iter().map(|&x| self.next(x)).collect()
    }

    fn next(&mut self, x: Complex32) -> Complex32 {
        if self.stddev == 0.0 {
            x
        } else {
            x + self.rng.complex(self.stddev)
        }
    }
}

impl Block for NoiseAdder {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let n = input.items().min(out.space());
        let x = input.slice::<Complex32>();
        let y = out.slice_mut::<Complex32>();
        for i in 0..n {
            y[i] = self.next(x[i]);
        }
        out.produce(n);
        forward_tags(input, out, n);
        input.consume(n);
        Ok(WorkStatus::Ok)
    }
}

/// Rate limiter: item `k` (from 0) is released no earlier than `k / rate`
/// seconds after the first activation. Content and tags pass unchanged.
pub struct Throttle {
    kind: ItemKind,
    rate: Option<f64>,
    start: Option<Instant>,
    released: u64,
}

/// Longest single sleep, so wall-clock budgets stay responsive.
const MAX_SLEEP: Duration = Duration::from_millis(20);

impl Throttle {
    pub fn new(kind: ItemKind, rate: f64) -> Result<Self, DspError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(DspError::InvalidParameter(format!("throttle rate {rate} <= 0")));
        }
        Ok(Self {
            kind,
            rate: Some(rate),
            start: None,
            released: 0,
        })
    }

    /// No rate limit: a plain pass-through that never sleeps.
    pub fn unbounded(kind: ItemKind) -> Self {
        Self {
            kind,
            rate: None,
            start: None,
            released: 0,
        }
    }
}

impl Block for Throttle {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![self.kind]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![self.kind]
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let mut n = input.items().min(out.space());
        if let (Some(rate), true) = (self.rate, n > 0) {
            let start = *self.start.get_or_insert_with(Instant::now);
            let due = Duration::from_secs_f64(self.released as f64 / rate);
            let now = start.elapsed();
            if due > now {
                std::thread::sleep((due - now).min(MAX_SLEEP));
            }
            let elapsed = start.elapsed().as_secs_f64();
            // Items 0..=floor(elapsed * rate) are due by now.
            let allowed = ((elapsed * rate).floor() as u64 + 1).saturating_sub(self.released);
            n = n.min(allowed as usize);
        }
        copy_items(input, out, n);
        forward_tags(input, out, n);
        input.consume(n);
        self.released += n as u64;
        Ok(WorkStatus::Ok)
    }
}

/// Groups `N` consecutive complex samples into one vector item. A trailing
/// partial group stays in the edge buffer and is never emitted.
pub struct StreamToVector {
    n: usize,
}

impl StreamToVector {
    pub fn new(n: usize) -> Result<Self, DspError> {
        if n == 0 {
            return Err(DspError::InvalidParameter("vector arity must be >= 1".into()));
        }
        Ok(Self { n })
    }
}

impl Block for StreamToVector {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::ComplexVector(self.n)]
    }

    fn min_input_items(&self, _port: usize) -> usize {
        self.n
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let vecs = (input.items() / self.n).min(out.space());
        let m = vecs * self.n;
        out.push(&input.slice::<Complex32>()[..m]);
        let base = input.offset();
        let out_base = out.offset();
        for t in input.tags() {
            if t.offset < base + m as u64 {
                let v = (t.offset - base) / self.n as u64;
                out.add_tag(out_base + v, t.key.clone(), t.value.clone());
            }
        }
        input.consume(m);
        Ok(WorkStatus::Ok)
    }
}

/// Flattens `N`-vectors back into a sample stream.
pub struct VectorToStream {
    n: usize,
}

impl VectorToStream {
    pub fn new(n: usize) -> Result<Self, DspError> {
        if n == 0 {
            return Err(DspError::InvalidParameter("vector arity must be >= 1".into()));
        }
        Ok(Self { n })
    }
}

impl Block for VectorToStream {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::ComplexVector(self.n)]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn min_output_space(&self, _port: usize) -> usize {
        self.n
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let vecs = input.items().min(out.space() / self.n);
        out.push(&input.slice::<Complex32>()[..vecs * self.n]);
        let (base, out_base) = (input.offset(), out.offset());
        for t in input.tags() {
            if t.offset < base + vecs as u64 {
                let at = out_base + (t.offset - base) * self.n as u64;
                out.add_tag(at, t.key.clone(), t.value.clone());
            }
        }
        input.consume(vecs);
        Ok(WorkStatus::Ok)
    }
}

/// `y = x / scale`.
pub struct IntToFloat {
    scale: f32,
}

impl IntToFloat {
    pub fn new(scale: f32) -> Result<Self, DspError> {
        if scale == 0.0 || !scale.is_finite() {
            return Err(DspError::InvalidParameter(format!("int-to-float scale {scale}")));
        }
        Ok(Self { scale })
    }

    pub fn convert(&self, x: i32) -> f32 {
        x as f32 / self.scale
    }
}

impl Block for IntToFloat {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Int32]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Real32]
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let n = input.items().min(out.space());
        let x = input.slice::<i32>();
        let y = out.slice_mut::<f32>();
        for i in 0..n {
            y[i] = self.convert(x[i]);
        }
        out.produce(n);
        forward_tags(input, out, n);
        input.consume(n);
        Ok(WorkStatus::Ok)
    }
}

/// `y = round(x * scale)`, saturated to i32.
pub struct FloatToInt {
    scale: f32,
}

impl FloatToInt {
    pub fn new(scale: f32) -> Result<Self, DspError> {
        if scale == 0.0 || !scale.is_finite() {
            return Err(DspError::InvalidParameter(format!("float-to-int scale {scale}")));
        }
        Ok(Self { scale })
    }

    pub fn convert(&self, x: f32) -> i32 {
        quantize(x, self.scale)
    }
}

fn quantize(x: f32, scale: f32) -> i32 {
    (x as f64 * scale as f64)
        .round()
        .clamp(i32::MIN as f64, i32::MAX as f64) as i32
}

impl Block for FloatToInt {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Real32]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Int32]
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let n = input.items().min(out.space());
        let x = input.slice::<f32>();
        let y = out.slice_mut::<i32>();
        for i in 0..n {
            y[i] = self.convert(x[i]);
        }
        out.produce(n);
        forward_tags(input, out, n);
        input.consume(n);
        Ok(WorkStatus::Ok)
    }
}

/// Complex sample to interleaved integer `I, Q` pair.
pub struct ComplexToInt {
    scale: f32,
}

impl ComplexToInt {
    pub fn new(scale: f32) -> Result<Self, DspError> {
        if scale == 0.0 || !scale.is_finite() {
            return Err(DspError::InvalidParameter(format!("complex-to-int scale {scale}")));
        }
        Ok(Self { scale })
    }
}

impl Block for ComplexToInt {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Int32]
    }

    fn min_output_space(&self, _port: usize) -> usize {
        2
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let n = input.items().min(out.space() / 2);
        let x = input.slice::<Complex32>();
        let y = out.slice_mut::<i32>();
        for i in 0..n {
            y[2 * i] = quantize(x[i].re, self.scale);
            y[2 * i + 1] = quantize(x[i].im, self.scale);
        }
        out.produce(2 * n);
        input.consume(n);
        Ok(WorkStatus::Ok)
    }
}

/// Interleaved real `I, Q` pairs to complex samples.
#[derive(Default)]
pub struct RealPairsToComplex;

impl RealPairsToComplex {
    pub fn new() -> Self {
        Self
    }
}

impl Block for RealPairsToComplex {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Real32]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn min_input_items(&self, _port: usize) -> usize {
        2
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let n = (input.items() / 2).min(out.space());
        let x = input.slice::<f32>();
        let y = out.slice_mut::<Complex32>();
        for i in 0..n {
            y[i] = Complex32::new(x[2 * i], x[2 * i + 1]);
        }
        out.produce(n);
        input.consume(2 * n);
        Ok(WorkStatus::Ok)
    }
}

/// Averaged power spectrum captured by a [`SpectrumSink`].
#[derive(Debug, Clone)]
pub struct SpectrumHandle {
    inner: Arc<Mutex<SpectrumState>>,
    sample_rate: f64,
}

#[derive(Debug, Default)]
struct SpectrumState {
    power: Vec<f64>,
    frames: u64,
}

impl SpectrumHandle {
    pub fn frames(&self) -> u64 {
        self.inner.lock().unwrap().frames
    }

    /// `(frequency Hz, power dB)` pairs, DC centered. Power is normalized so
    /// a full-scale tone on a bin reads 0 dB.
    pub fn spectrum_db(&self) -> Vec<(f64, f64)> {
        let st = self.inner.lock().unwrap();
        let n = st.power.len();
        if st.frames == 0 {
            return Vec::new();
        }
        let avg: Vec<f64> = st.power.iter().map(|p| p / st.frames as f64).collect();
        fftshift(&avg)
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let f = (i as f64 - (n / 2) as f64) * self.sample_rate / n as f64;
                (f, 10.0 * p.max(1e-30).log10())
            })
            .collect()
    }

    /// Writes `freq_hz,power_db` rows.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["freq_hz", "power_db"])?;
        for (f, p) in self.spectrum_db() {
            w.write_record([format!("{f:.3}"), format!("{p:.3}")])?;
        }
        w.flush()
    }
}

/// Hann-windowed averaged periodogram over consecutive `N`-sample frames.
pub struct SpectrumSink {
    fft: Fft,
    window: Vec<f32>,
    norm: f64,
    buf: Vec<Complex32>,
    state: Arc<Mutex<SpectrumState>>,
}

impl SpectrumSink {
    pub fn new(n: usize, sample_rate: f64) -> Result<(Self, SpectrumHandle), DspError> {
        let fft = Fft::new(FftPlan::new(n, Direction::Forward)?);
        let window: Vec<f32> = (0..n)
            .map(|i| (0.5 - 0.5 * (TAU * i as f64 / n as f64).cos()) as f32)
            .collect();
        let wsum: f64 = window.iter().map(|&w| w as f64).sum();
        let state = Arc::new(Mutex::new(SpectrumState {
            power: vec![0.0; n],
            frames: 0,
        }));
        Ok((
            Self {
                fft,
                window,
                norm: wsum * wsum,
                buf: vec![Complex32::new(0.0, 0.0); n],
                state: state.clone(),
            },
            SpectrumHandle {
                inner: state,
                sample_rate,
            },
        ))
    }
}

impl Block for SpectrumSink {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![]
    }

    fn min_input_items(&self, _port: usize) -> usize {
        self.window.len()
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let input = &mut io.inputs[0];
        let n = self.window.len();
        let x = input.slice::<Complex32>();
        let frames = input.items() / n;
        let mut st = self.state.lock().unwrap();
        for f in 0..frames {
            let frame = &x[f * n..(f + 1) * n];
            let windowed: Vec<Complex32> =
                frame.iter().zip(&self.window).map(|(v, w)| v * *w).collect();
            self.fft
                .process_into(&windowed, &mut self.buf)
                .map_err(|e| BlockError::new(e.to_string()))?;
            for (acc, v) in st.power.iter_mut().zip(&self.buf) {
                *acc += v.norm_sqr() as f64 / self.norm;
            }
            st.frames += 1;
        }
        input.consume(frames * n);
        Ok(WorkStatus::Ok)
    }
}
