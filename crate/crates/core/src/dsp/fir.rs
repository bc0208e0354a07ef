use super::DspError;
use crate::runtime::{Block, BlockError, ItemKind, WorkIo, WorkStatus};
use num_complex::Complex32;
use std::f64::consts::{PI, TAU};

/// Real FIR coefficients. Length is fixed once built.
#[derive(Debug, Clone, PartialEq)]
pub struct FirTaps {
    coefficients: Vec<f32>,
}

impl FirTaps {
    pub fn new(coefficients: Vec<f32>) -> Result<Self, DspError> {
        if coefficients.is_empty() {
            return Err(DspError::InvalidParameter("FIR needs at least one tap".into()));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(DspError::InvalidParameter("non-finite FIR tap".into()));
        }
        Ok(Self { coefficients })
    }

    pub fn coefficients(&self) -> &[f32] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Q1.15 copy, rounded to nearest and saturated.
    pub fn to_q15(&self) -> Vec<i32> {
        self.coefficients
            .iter()
            .map(|&c| (c as f64 * 32768.0).round().clamp(-32768.0, 32767.0) as i32)
            .collect()
    }
}

/// Hamming-windowed sinc low-pass.
///
/// Length `L = ceil(4 * fs / transition)`, bumped to odd. The sinc corner
/// sits in the middle of the transition band; taps are normalized to unit DC
/// gain.
pub fn design_lowpass(cutoff: f64, transition: f64, sample_rate: f64) -> Result<FirTaps, DspError> {
    let ok = cutoff.is_finite()
        && transition.is_finite()
        && sample_rate.is_finite()
        && cutoff > 0.0
        && transition > 0.0
        && cutoff + transition < sample_rate / 2.0;
    if !ok {
        return Err(DspError::InvalidParameter(format!(
            "low-pass needs 0 < cutoff, 0 < transition, cutoff + transition < fs/2 \
             (cutoff {cutoff}, transition {transition}, fs {sample_rate})"
        )));
    }
    let mut len = (4.0 * sample_rate / transition).ceil() as usize;
    if len.is_multiple_of(2) {
        len += 1;
    }
    let fc = (cutoff + transition / 2.0) / sample_rate;
    let mid = (len - 1) as f64 / 2.0;
    let mut h: Vec<f64> = (0..len)
        .map(|n| {
            let t = n as f64 - mid;
            let sinc = if t == 0.0 {
                2.0 * fc
            } else {
                (TAU * fc * t).sin() / (PI * t)
            };
            let w = if len == 1 {
                1.0
            } else {
                0.54 - 0.46 * (TAU * n as f64 / (len - 1) as f64).cos()
            };
            sinc * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    for v in &mut h {
        *v /= sum;
    }
    FirTaps::new(h.into_iter().map(|v| v as f32).collect())
}

/// Streaming complex FIR with zero initial state.
///
/// Each output is summed in the same order whatever the chunking, so split
/// processing is bit-identical to one-shot processing.
#[derive(Debug, Clone)]
pub struct FirFilter {
    taps: Vec<f32>,
    history: Vec<Complex32>,
    scratch: Vec<Complex32>,
}

impl FirFilter {
    pub fn new(taps: FirTaps) -> Self {
        let k = taps.len();
        Self {
            taps: taps.coefficients,
            history: vec![Complex32::new(0.0, 0.0); k - 1],
            scratch: Vec::new(),
        }
    }

    pub fn taps(&self) -> &[f32] {
        &self.taps
    }

    pub fn process(&mut self, input: &[Complex32]) -> Vec<Complex32> {
        let mut out = vec![Complex32::new(0.0, 0.0); input.len()];
        self.process_into(input, &mut out);
        out
    }

    pub fn process_into(&mut self, input: &[Complex32], out: &mut [Complex32]) {
        let k = self.taps.len();
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.history);
        self.scratch.extend_from_slice(input);
        for (n, y) in out.iter_mut().take(input.len()).enumerate() {
            let window = &self.scratch[n..n + k];
            let mut acc = Complex32::new(0.0, 0.0);
            for (t, x) in self.taps.iter().zip(window.iter().rev()) {
                acc += x * *t;
            }
            *y = acc;
        }
        let total = self.scratch.len();
        self.history.copy_from_slice(&self.scratch[total - (k - 1)..]);
    }

    pub fn reset(&mut self) {
        self.history.iter_mut().for_each(|h| *h = Complex32::new(0.0, 0.0));
    }
}

/// Runtime block around [`FirFilter`]. Tags pass through 1:1.
pub struct FirBlock {
    filter: FirFilter,
}

impl FirBlock {
    pub fn new(taps: FirTaps) -> Self {
        Self {
            filter: FirFilter::new(taps),
        }
    }
}

impl Block for FirBlock {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let n = input.items().min(out.space());
        let x = &input.slice::<Complex32>()[..n];
        self.filter.process_into(x, &mut out.slice_mut::<Complex32>()[..n]);
        out.produce(n);
        crate::runtime::forward_tags(input, out, n);
        input.consume(n);
        Ok(WorkStatus::Ok)
    }
}

/// Integer FIR over Q1.15 taps, as a fixed-point fabric would compute it.
///
/// `channels` independent streams are interleaved sample by sample (2 for
/// I/Q pairs). Each output is `(Σ taps·x + 2^14) >> 15`, saturated to i32.
#[derive(Debug, Clone)]
pub struct IntFir {
    taps: Vec<i32>,
    channels: usize,
    history: Vec<i32>,
    scratch: Vec<i32>,
}

impl IntFir {
    pub fn new(taps: &FirTaps, channels: usize) -> Result<Self, DspError> {
        if channels == 0 {
            return Err(DspError::InvalidParameter("channels must be >= 1".into()));
        }
        let q = taps.to_q15();
        Ok(Self {
            history: vec![0; (q.len() - 1) * channels],
            taps: q,
            channels,
            scratch: Vec::new(),
        })
    }

    pub fn q15_taps(&self) -> &[i32] {
        &self.taps
    }

    /// `input.len()` must be a multiple of `channels`.
    pub fn process(&mut self, input: &[i32]) -> Vec<i32> {
        let c = self.channels;
        assert_eq!(input.len() % c, 0, "partial interleaved frame");
        let k = self.taps.len();
        self.scratch.clear();
        self.scratch.extend_from_slice(&self.history);
        self.scratch.extend_from_slice(input);
        let mut out = Vec::with_capacity(input.len());
        for i in 0..input.len() {
            let base = i + (k - 1) * c;
            let mut acc: i64 = 0;
            for (j, &t) in self.taps.iter().enumerate() {
                acc += t as i64 * self.scratch[base - j * c] as i64;
            }
            let y = (acc + (1 << 14)) >> 15;
            out.push(y.clamp(i32::MIN as i64, i32::MAX as i64) as i32);
        }
        let total = self.scratch.len();
        let keep = self.history.len();
        self.history.copy_from_slice(&self.scratch[total - keep..]);
        out
    }
}

/// Runtime block around [`IntFir`].
pub struct IntFirBlock {
    fir: IntFir,
}

impl IntFirBlock {
    pub fn new(fir: IntFir) -> Self {
        Self { fir }
    }
}

impl Block for IntFirBlock {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Int32]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Int32]
    }

    fn min_input_items(&self, _port: usize) -> usize {
        self.fir.channels
    }

    fn min_output_space(&self, _port: usize) -> usize {
        self.fir.channels
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let c = self.fir.channels;
        let n = input.items().min(out.space()) / c * c;
        let y = self.fir.process(&input.slice::<i32>()[..n]);
        out.push(&y);
        input.consume(n);
        Ok(WorkStatus::Ok)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{Direction, Fft, FftPlan, GaussianRng};
    use proptest::prelude::*;

    fn c(re: f32) -> Complex32 {
        Complex32::new(re, 0.0)
    }

    fn direct_conv(taps: &[f32], x: &[Complex32]) -> Vec<(f64, f64)> {
        (0..x.len())
            .map(|n| {
                let mut re = 0.0;
                let mut im = 0.0;
                for (k, &t) in taps.iter().enumerate() {
                    if n >= k {
                        re += t as f64 * x[n - k].re as f64;
                        im += t as f64 * x[n - k].im as f64;
                    }
                }
                (re, im)
            })
            .collect()
    }

    fn rand_signal(g: &mut GaussianRng, n: usize) -> Vec<Complex32> {
        (0..n).map(|_| g.complex(1.0)).collect()
    }

    #[test]
    fn single_tap_is_identity() {
        let mut f = FirFilter::new(FirTaps::new(vec![1.0]).unwrap());
        let x = vec![c(1.0), c(-2.0), Complex32::new(0.5, 3.0)];
        assert_eq!(f.process(&x), x);
    }

    #[test]
    fn two_tap_average() {
        let mut f = FirFilter::new(FirTaps::new(vec![0.5, 0.5]).unwrap());
        assert_eq!(f.process(&[c(1.0); 4]), vec![c(0.5), c(1.0), c(1.0), c(1.0)]);
    }

    #[test]
    fn matches_direct_convolution() {
        let mut g = GaussianRng::new(11);
        let taps: Vec<f32> = (0..31).map(|_| g.normal_pair().0 as f32 * 0.2).collect();
        let x = rand_signal(&mut g, 1000);
        let y = FirFilter::new(FirTaps::new(taps.clone()).unwrap()).process(&x);
        for (a, b) in y.iter().zip(direct_conv(&taps, &x)) {
            assert!((a.re as f64 - b.0).abs() <= 1e-5 && (a.im as f64 - b.1).abs() <= 1e-5);
        }
    }

    #[test]
    fn rejects_bad_taps() {
        assert!(FirTaps::new(vec![]).is_err());
        assert!(FirTaps::new(vec![1.0, f32::NAN]).is_err());
    }

    #[test]
    fn lowpass_shape() {
        let fs = 32_000.0;
        let taps = design_lowpass(fs / 8.0, fs / 16.0, fs).unwrap();
        let h = taps.coefficients();
        assert_eq!(h.len() % 2, 1);
        let sum: f64 = h.iter().map(|&v| v as f64).sum();
        assert!((sum - 1.0).abs() <= 1e-6);
        for k in 0..h.len() {
            assert_eq!(h[k], h[h.len() - 1 - k]);
        }
    }

    #[test]
    fn lowpass_stopband_attenuation() {
        let fs = 1.0;
        let taps = design_lowpass(fs / 8.0, fs / 16.0, fs).unwrap();
        let n = 4096;
        let mut x = vec![Complex32::new(0.0, 0.0); n];
        for (i, &t) in taps.coefficients().iter().enumerate() {
            x[i] = c(t);
        }
        let spec = Fft::new(FftPlan::new(n, Direction::Forward).unwrap())
            .process(&x)
            .unwrap();
        let stop_start = ((fs / 8.0 + fs / 16.0) * n as f64).ceil() as usize;
        let worst = spec[stop_start..=n / 2]
            .iter()
            .map(|v| v.norm() as f64)
            .fold(0.0, f64::max);
        let atten = -20.0 * worst.log10();
        assert!(atten >= 50.0, "stop-band attenuation {atten:.1} dB");
    }

    #[test]
    fn lowpass_rejects_bad_ranges() {
        assert!(design_lowpass(0.0, 100.0, 1000.0).is_err());
        assert!(design_lowpass(400.0, 200.0, 1000.0).is_err());
        assert!(design_lowpass(100.0, -1.0, 1000.0).is_err());
    }

    #[test]
    fn int_fir_tracks_float_fir() {
        let taps = design_lowpass(0.1, 0.05, 1.0).unwrap();
        let mut fi = IntFir::new(&taps, 2).unwrap();
        let mut ff = FirFilter::new(taps);
        let mut g = GaussianRng::new(5);
        let x: Vec<Complex32> = (0..500).map(|_| g.complex(0.2)).collect();
        let xi: Vec<i32> = x
            .iter()
            .flat_map(|v| [(v.re * 32768.0).round() as i32, (v.im * 32768.0).round() as i32])
            .collect();
        let yi = fi.process(&xi);
        let yf = ff.process(&x);
        for (n, y) in yf.iter().enumerate() {
            assert!((yi[2 * n] as f32 / 32768.0 - y.re).abs() < 2e-3);
            assert!((yi[2 * n + 1] as f32 / 32768.0 - y.im).abs() < 2e-3);
        }
    }

    proptest! {
        #[test]
        fn chunked_equals_one_shot(
            seed in any::<u64>(),
            ntaps in 1usize..40,
            splits in proptest::collection::vec(0usize..300, 0..6),
        ) {
            let mut g = GaussianRng::new(seed);
            let taps: Vec<f32> = (0..ntaps).map(|_| g.normal_pair().0 as f32).collect();
            let x = rand_signal(&mut g, 300);
            let whole = FirFilter::new(FirTaps::new(taps.clone()).unwrap()).process(&x);
            let mut cuts = splits.clone();
            cuts.push(0);
            cuts.push(x.len());
            cuts.sort_unstable();
            let mut f = FirFilter::new(FirTaps::new(taps).unwrap());
            let mut pieces = Vec::new();
            for w in cuts.windows(2) {
                pieces.extend(f.process(&x[w[0]..w[1]]));
            }
            prop_assert_eq!(whole, pieces);
        }

        #[test]
        fn linearity(seed in any::<u64>(), a in -3.0f32..3.0, b in -3.0f32..3.0) {
            let mut g = GaussianRng::new(seed);
            let taps: Vec<f32> = (0..17).map(|_| g.normal_pair().0 as f32 * 0.3).collect();
            let x = rand_signal(&mut g, 128);
            let y = rand_signal(&mut g, 128);
            let mix: Vec<Complex32> = x.iter().zip(&y).map(|(p, q)| p * a + q * b).collect();
            let fx = FirFilter::new(FirTaps::new(taps.clone()).unwrap()).process(&x);
            let fy = FirFilter::new(FirTaps::new(taps.clone()).unwrap()).process(&y);
            let fm = FirFilter::new(FirTaps::new(taps).unwrap()).process(&mix);
            for i in 0..x.len() {
                let expect = fx[i] * a + fy[i] * b;
                prop_assert!((fm[i] - expect).norm() <= 1e-5 * (1.0 + expect.norm()));
            }
        }
    }
}
