use super::*;
use crate::dsp::{dft_reference, Direction, GaussianRng};
use crate::runtime::{FlowGraph, ItemKind, RunConfig, VectorSink, VectorSource};
use num_complex::Complex32;
use proptest::prelude::*;

fn random_vec(g: &mut GaussianRng, n: usize, peak_component: f64) -> Vec<Complex32> {
    (0..n)
        .map(|_| {
            Complex32::new(
                ((2.0 * g.uniform() - 1.0) * peak_component) as f32,
                ((2.0 * g.uniform() - 1.0) * peak_component) as f32,
            )
        })
        .collect()
}

fn snr_db(out: &[Complex32], reference: &[num_complex::Complex64]) -> f64 {
    let (mut s, mut e) = (0.0, 0.0);
    for (o, r) in out.iter().zip(reference) {
        s += r.norm_sqr();
        e += (num_complex::Complex64::new(o.re as f64, o.im as f64) - r).norm_sqr();
    }
    10.0 * (s / e).log10()
}

#[test]
fn register_readback_and_range() {
    let mut d = FftDevice::default();
    d.write_register(REG_NFFT_LOG2, 6).unwrap();
    assert_eq!(d.read_register(REG_NFFT_LOG2).unwrap(), 6);
    assert!(matches!(
        d.write_register(REG_NFFT_LOG2, 12),
        Err(DeviceError::OutOfRange { .. })
    ));
    assert_eq!(d.read_register(REG_NFFT_LOG2).unwrap(), 6);
    assert_ne!(d.read_register(REG_STATUS).unwrap() & STATUS_ERROR, 0);
    d.write_register(REG_STATUS, STATUS_ERROR).unwrap();
    assert_eq!(d.read_register(REG_STATUS).unwrap() & STATUS_ERROR, 0);
    assert_eq!(d.read_register(REG_ID).unwrap(), DEVICE_ID);
    assert!(d.write_register(REG_ID, 1).is_err());
    assert_eq!(d.read_register(REG_ID).unwrap(), DEVICE_ID);
    assert_eq!(d.read_register(0x40), Err(DeviceError::UnknownAddress(0x40)));
    assert!(d.write_register(REG_CP_LEN, 64).is_err());
    d.write_register(REG_CP_LEN, 63).unwrap();
    assert_eq!(d.read_register(REG_CP_LEN).unwrap(), 63);
}

#[test]
fn configure_matches_registers() {
    let mut d = FftDevice::default();
    let cfg = DeviceConfig::new(FftDirection::Forward, 64);
    d.configure(&cfg).unwrap();
    assert_eq!(d.config(), cfg);
    assert_eq!(d.read_register(REG_DIRECTION).unwrap(), 0);
    assert_eq!(d.read_register(REG_SCALE_SCHED).unwrap(), DEFAULT_SCALE_SCHED);
    assert_eq!(
        d.configure(&DeviceConfig::new(FftDirection::Forward, 63)),
        Err(DeviceError::InvalidSize(63))
    );
    let mut bad = cfg;
    bad.cp_len = 64;
    assert!(matches!(d.configure(&bad), Err(DeviceError::CpTooLong { .. })));
}

#[test]
fn inverse_with_cp_emits_prefixed_symbol() {
    let mut d = FftDevice::default();
    let mut cfg = DeviceConfig::new(FftDirection::Inverse, 64);
    cfg.cp_len = 16;
    d.configure(&cfg).unwrap();
    let mut g = GaussianRng::new(3);
    let x = quantize(&random_vec(&mut g, 64, 0.4), 1.0);
    let done = d.submit(x).unwrap();
    assert_eq!(done.output.len(), 80);
    assert_eq!(done.output[..16], done.output[64..]);
    assert_eq!(done.bytes_out, 320);
}

#[test]
fn forward_with_cp_strips_prefix() {
    let mut g = GaussianRng::new(8);
    let body = quantize(&random_vec(&mut g, 64, 0.4), 1.0);
    let mut framed = body[48..].to_vec();
    framed.extend_from_slice(&body);
    let mut a = FftDevice::default();
    let mut cfg = DeviceConfig::new(FftDirection::Forward, 64);
    cfg.cp_len = 16;
    a.configure(&cfg).unwrap();
    let mut b = FftDevice::default();
    b.configure(&DeviceConfig::new(FftDirection::Forward, 64)).unwrap();
    assert_eq!(a.submit(framed).unwrap().output, b.submit(body).unwrap().output);
}

#[test]
fn busy_protocol() {
    let mut d = FftDevice::default();
    assert_eq!(d.submit(vec![Cq15::default(); 64]), Err(DeviceError::Unconfigured));
    d.configure(&DeviceConfig::new(FftDirection::Forward, 64)).unwrap();
    d.start(vec![Cq15::default(); 64]).unwrap();
    assert_ne!(d.read_register(REG_STATUS).unwrap() & STATUS_BUSY, 0);
    assert_eq!(d.submit(vec![Cq15::default(); 64]), Err(DeviceError::Busy));
    assert_eq!(d.write_register(REG_NFFT_LOG2, 5), Err(DeviceError::Busy));
    assert_eq!(d.read_register(REG_NFFT_LOG2).unwrap(), 6);
    let done = d.wait().unwrap();
    assert_eq!(done.output.len(), 64);
    let st = d.read_register(REG_STATUS).unwrap();
    assert_eq!(st & STATUS_BUSY, 0);
    assert_ne!(st & STATUS_DONE, 0);
    assert_eq!(d.wait(), Err(DeviceError::Idle));
    assert!(matches!(
        d.submit(vec![Cq15::default(); 10]),
        Err(DeviceError::LengthMismatch { expected: 64, got: 10 })
    ));
}

#[test]
fn impulse_gives_flat_spectrum() {
    let mut d = FftDevice::default();
    d.configure(&DeviceConfig::new(FftDirection::Forward, 64)).unwrap();
    let mut x = vec![Cq15::default(); 64];
    x[0] = Cq15::new(i16::MAX, 0);
    let out = d.submit(x).unwrap().output;
    let first = out[0];
    for v in &out {
        assert!((v.re as i32 - first.re as i32).abs() <= 1 && v.im.abs() <= 1);
    }
    assert!((first.re as f64 - 32767.0 / 64.0).abs() <= 1.0);
}

#[test]
fn forced_overflow_saturates() {
    let mut d = FftDevice::default();
    let mut cfg = DeviceConfig::new(FftDirection::Forward, 64);
    cfg.scale_sched = 0;
    d.configure(&cfg).unwrap();
    let done = d.submit(vec![Cq15::new(i16::MAX, i16::MAX); 64]).unwrap();
    assert!(done.overflow);
    assert_ne!(d.read_register(REG_STATUS).unwrap() & STATUS_OVERFLOW, 0);
    assert_eq!(done.output[0], Cq15::new(i16::MAX, i16::MAX));
}

#[test]
fn fixed_point_snr_against_float() {
    let mut g = GaussianRng::new(21);
    let mut worst = f64::MAX;
    for dir in [Direction::Forward, Direction::Inverse] {
        for _ in 0..100 {
            let x = random_vec(&mut g, 64, 0.35);
            let mut be = DeviceBackend::new(FftDevice::default());
            let out = be.transform(&x, dir).unwrap().output;
            let mut r = dft_reference(&x, dir);
            if dir == Direction::Inverse {
                r.iter_mut().for_each(|v| *v /= 64.0);
            }
            worst = worst.min(snr_db(&out, &r));
        }
    }
    assert!(worst >= 60.0, "worst SNR {worst:.1} dB");
}

#[test]
fn backends_agree_within_declared_tolerance() {
    let mut g = GaussianRng::new(5);
    let mut backends: Vec<Box<dyn FftBackend>> =
        vec![BackendKind::Software.build(), BackendKind::Device.build()];
    for n in [8usize, 64, 256, 1024] {
        for be in backends.iter_mut() {
            assert!(be.supports(n));
            let x = random_vec(&mut g, n, 0.35);
            let out = be.transform(&x, Direction::Forward).unwrap().output;
            let r = dft_reference(&x, Direction::Forward);
            let err = out
                .iter()
                .zip(&r)
                .map(|(o, r)| (num_complex::Complex64::new(o.re as f64, o.im as f64) - r).norm())
                .fold(0.0, f64::max);
            assert!(err <= be.tolerance(n), "{} n={n} err={err}", be.name());
        }
    }
    assert!(!backends[1].supports(63));
    assert!(!backends[1].supports(4096));
    assert!(matches!(
        backends[1].transform(&[Complex32::new(0.0, 0.0); 63], Direction::Forward),
        Err(BackendError::Unsupported(63))
    ));
}

#[test]
fn transfer_model_values() {
    let m = TransferModel::default();
    assert_eq!(m.peak_bytes_per_s(), 1.2e9);
    assert_eq!(m.estimate_transfer_time(1_200_000_000), 1.0);
    assert_eq!(m.estimate_transfer_time(0), 0.0);
    assert!((m.estimate_transfer_time(512) - 512.0 / 1.2e9).abs() < 1e-18);
    let job = m.job_time(64, 256, 256);
    assert!((job - (512.0 / 1.2e9 + 384.0 / 150e6)).abs() < 1e-15);
    let s = m.with_setup_us(2.0);
    assert!((s.estimate_transfer_time(0) - 2e-6).abs() < 1e-18);
}

#[test]
fn device_job_reports_transfer_term() {
    let mut be = DeviceBackend::new(FftDevice::default());
    let t = be.transform(&[Complex32::new(0.1, 0.0); 64], Direction::Forward).unwrap();
    let expect = TransferModel::default().job_time(64, 256, 256);
    assert_eq!(t.modeled_ns, (expect * 1e9).round() as u64);
    assert!(t.modeled_ns as f64 >= 512.0 / 1.2e9 * 1e9);
}

#[test]
fn fft_block_records_modeled_time() {
    let mut g = GaussianRng::new(2);
    let x = random_vec(&mut g, 64 * 10, 0.3);
    let mut fg = FlowGraph::new();
    let s = fg.add_block("src", VectorSource::vectors(x.clone(), 64)).unwrap();
    let f = fg
        .add_block("fft", FftBlock::new(BackendKind::Device.build(), 64, Direction::Forward).unwrap())
        .unwrap();
    let (sink, h) = VectorSink::<Complex32>::vectors(64);
    let k = fg.add_block("sink", sink).unwrap();
    fg.chain(&[s, f, k]).unwrap();
    let rep = fg.run(&RunConfig::default()).unwrap();
    assert_eq!(h.len(), 640);
    let c = rep.counters.block("fft").unwrap();
    let per_job = (TransferModel::default().job_time(64, 256, 256) * 1e9).round() as u64;
    assert_eq!(c.modeled_ns, 10 * per_job);
    assert!(FftBlock::new(BackendKind::Device.build(), 63, Direction::Forward).is_err());
    let _ = ItemKind::ComplexVector(64);
}

proptest! {
    #[test]
    fn quantize_round_trip_bound(re in -0.99f32..0.99, im in -0.99f32..0.99) {
        let x = [Complex32::new(re, im)];
        let back = dequantize(&quantize(&x, 1.0), 1.0)[0];
        prop_assert!(((back.re - re) as f64).abs() <= 2f64.powi(-16));
        prop_assert!(((back.im - im) as f64).abs() <= 2f64.powi(-16));
    }

    #[test]
    fn transfer_time_monotone_and_bounded(a in 0u64..1u64 << 40, b in 0u64..1u64 << 40, setup in 0.0f64..10.0) {
        let m = TransferModel::default().with_setup_us(setup);
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(m.estimate_transfer_time(lo) <= m.estimate_transfer_time(hi));
        prop_assert!(m.estimate_transfer_time(a) >= a as f64 / 1.2e9);
    }

    #[test]
    fn rejected_writes_keep_value(v in 0u32..64) {
        let mut d = FftDevice::default();
        d.write_register(REG_NFFT_LOG2, 5).unwrap();
        let accepted = d.write_register(REG_NFFT_LOG2, v).is_ok();
        let now = d.read_register(REG_NFFT_LOG2).unwrap();
        prop_assert_eq!(now, if accepted { v } else { 5 });
        prop_assert_eq!(accepted, (3..=11).contains(&v));
    }
}
