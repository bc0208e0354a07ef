use super::*;
use crate::runtime::{
    Block, FlowGraph, ItemKind, RunConfig, RunReport, SinkHandle, VectorSink, VectorSource,
};
use num_complex::Complex32;
use std::time::Instant;

fn cz(re: f32, im: f32) -> Complex32 {
    Complex32::new(re, im)
}

/// source -> block -> sink over complex samples.
fn run_complex(
    input: Vec<Complex32>,
    block: impl Block + 'static,
    cfg: &RunConfig,
) -> (SinkHandle<Complex32>, RunReport) {
    let mut g = FlowGraph::new();
    let s = g.add_block("src", VectorSource::new(input)).unwrap();
    let b = g.add_block("dut", block).unwrap();
    let (sink, h) = VectorSink::<Complex32>::new();
    let k = g.add_block("sink", sink).unwrap();
    g.chain(&[s, b, k]).unwrap();
    let rep = g.run(cfg).unwrap();
    (h, rep)
}

fn take_source(src: CosineSource, n: u64) -> Vec<Complex32> {
    let mut g = FlowGraph::new();
    let s = g.add_block("tone", src.with_limit(n)).unwrap();
    let (sink, h) = VectorSink::<Complex32>::new();
    let k = g.add_block("sink", sink).unwrap();
    g.chain(&[s, k]).unwrap();
    g.run(&RunConfig::default()).unwrap();
    h.data()
}

#[test]
fn cosine_dc_and_quarter_rate() {
    let dc = take_source(CosineSource::new(0.0, 1000.0, 2.5).unwrap(), 10);
    assert!(dc.iter().all(|&v| v == cz(2.5, 0.0)));
    let q = take_source(CosineSource::new(250.0, 1000.0, 1.0).unwrap(), 8);
    let expect = [cz(1.0, 0.0), cz(0.0, 1.0), cz(-1.0, 0.0), cz(0.0, -1.0)];
    for (i, v) in q.iter().enumerate() {
        assert!((v - expect[i % 4]).norm() < 1e-6, "{i}: {v}");
    }
}

#[test]
fn cosine_sample_eight_at_one_khz() {
    let v = take_source(CosineSource::new(1000.0, 32_000.0, 1.5).unwrap(), 9);
    let expect = cz(0.0, 1.5);
    assert!((v[8] - expect).norm() < 1e-6);
}

#[test]
fn cosine_rejects_out_of_range() {
    assert!(CosineSource::new(500.0, 1000.0, 1.0).is_err());
    assert!(CosineSource::new(-1.0, 1000.0, 1.0).is_err());
    assert!(CosineSource::new(10.0, 1000.0, -1.0).is_err());
    assert!(CosineSource::new(f64::NAN, 1000.0, 1.0).is_err());
}

#[test]
fn noise_zero_std_is_identity_and_seeded() {
    let x: Vec<Complex32> = (0..500).map(|i| cz(i as f32, -(i as f32))).collect();
    let (h, _) = run_complex(x.clone(), NoiseAdder::new(1, 0.0).unwrap(), &RunConfig::default());
    assert_eq!(h.data(), x);
    let zeros = vec![cz(0.0, 0.0); 1000];
    let (a, _) = run_complex(zeros.clone(), NoiseAdder::new(9, 1.0).unwrap(), &RunConfig::default());
    let (b, _) = run_complex(zeros, NoiseAdder::new(9, 1.0).unwrap(), &RunConfig::default());
    assert_eq!(a.data(), b.data());
    assert!(NoiseAdder::new(0, -1.0).is_err());
}

#[test]
fn noise_variance_within_one_percent() {
    let mut n = NoiseAdder::new(2024, 1.0).unwrap();
    let y = n.process(&vec![cz(0.0, 0.0); 1_000_000]);
    let len = y.len() as f64;
    for comp in [|v: &Complex32| v.re as f64, |v: &Complex32| v.im as f64] {
        let m: f64 = y.iter().map(comp).sum::<f64>() / len;
        let var: f64 = y.iter().map(|v| (comp(v) - m).powi(2)).sum::<f64>() / (len - 1.0);
        assert!((var - 1.0).abs() < 0.01, "variance {var}");
    }
}

#[test]
fn throttle_preserves_content_and_limits_rate() {
    let x: Vec<Complex32> = (0..5000).map(|i| cz(i as f32, 0.0)).collect();
    let t0 = Instant::now();
    let (h, _) = run_complex(
        x.clone(),
        Throttle::new(ItemKind::Complex32, 10_000.0).unwrap(),
        &RunConfig::default(),
    );
    let el = t0.elapsed().as_secs_f64();
    assert_eq!(h.data(), x);
    assert!(el >= 0.45, "elapsed {el}");
}

#[test]
fn throttle_unbounded_does_not_sleep() {
    let x: Vec<Complex32> = (0..100_000).map(|i| cz(i as f32, 0.0)).collect();
    let t0 = Instant::now();
    let (h, _) = run_complex(x.clone(), Throttle::unbounded(ItemKind::Complex32), &RunConfig::default());
    assert_eq!(h.data(), x);
    assert!(t0.elapsed().as_secs_f64() < 0.4);
    assert!(Throttle::new(ItemKind::Complex32, 0.0).is_err());
}

#[test]
fn fir_block_chunking_is_exact() {
    let taps = design_lowpass(0.1, 0.05, 1.0).unwrap();
    let mut g = GaussianRng::new(77);
    let x: Vec<Complex32> = (0..3000).map(|_| g.complex(1.0)).collect();
    let reference = FirFilter::new(taps.clone()).process(&x);
    for cap in [1usize, 13, 64, 4096] {
        for workers in [1usize, 3] {
            let cfg = RunConfig {
                chunk_cap: cap,
                workers,
                ..RunConfig::default()
            };
            let (h, _) = run_complex(x.clone(), FirBlock::new(taps.clone()), &cfg);
            assert_eq!(h.data(), reference, "cap {cap} workers {workers}");
        }
    }
}

#[test]
fn stream_to_vector_groups_and_keeps_remainder() {
    let x: Vec<Complex32> = (0..128).map(|i| cz(i as f32, 0.0)).collect();
    let mut g = FlowGraph::new();
    let s = g.add_block("src", VectorSource::new(x.clone())).unwrap();
    let v = g.add_block("s2v", StreamToVector::new(64).unwrap()).unwrap();
    let (sink, h) = VectorSink::<Complex32>::vectors(64);
    let k = g.add_block("sink", sink).unwrap();
    g.chain(&[s, v, k]).unwrap();
    g.run(&RunConfig::default()).unwrap();
    assert_eq!(h.len(), 128);
    assert_eq!(h.data(), x);

    let x70: Vec<Complex32> = (0..70).map(|i| cz(i as f32, 0.0)).collect();
    let mut g = FlowGraph::new();
    let s = g.add_block("src", VectorSource::new(x70.clone())).unwrap();
    let v = g.add_block("s2v", StreamToVector::new(64).unwrap()).unwrap();
    let (sink, h) = VectorSink::<Complex32>::vectors(64);
    let k = g.add_block("sink", sink).unwrap();
    g.chain(&[s, v, k]).unwrap();
    let rep = g.run(&RunConfig::default()).unwrap();
    assert_eq!(h.data(), x70[..64].to_vec());
    let e = rep.edge("src:0->s2v:0").unwrap();
    assert_eq!(e.final_occupancy, 6);
    let c = rep.counters.block("s2v").unwrap();
    assert_eq!((c.items_in[0], c.items_out[0]), (64, 1));
}

#[test]
fn vector_round_trip_truncates_to_multiple() {
    let x: Vec<Complex32> = (0..1000).map(|i| cz(i as f32, 1.0)).collect();
    let mut g = FlowGraph::new();
    let s = g.add_block("src", VectorSource::new(x.clone())).unwrap();
    let a = g.add_block("s2v", StreamToVector::new(64).unwrap()).unwrap();
    let b = g.add_block("v2s", VectorToStream::new(64).unwrap()).unwrap();
    let (sink, h) = VectorSink::<Complex32>::new();
    let k = g.add_block("sink", sink).unwrap();
    g.chain(&[s, a, b, k]).unwrap();
    g.run(&RunConfig { chunk_cap: 7, ..RunConfig::default() }).unwrap();
    assert_eq!(h.data(), x[..960].to_vec());
}

#[test]
fn int_float_conversions() {
    assert_eq!(IntToFloat::new(1.0).unwrap().convert(42), 42.0);
    assert_eq!(IntToFloat::new(32768.0).unwrap().convert(16384), 0.5);
    assert!(IntToFloat::new(0.0).is_err());
    let f2i = FloatToInt::new(32768.0).unwrap();
    let i2f = IntToFloat::new(32768.0).unwrap();
    let mut g = GaussianRng::new(4);
    for _ in 0..10_000 {
        let x = (2.0 * g.uniform() - 1.0) as f32 * 0.99;
        let back = i2f.convert(f2i.convert(x));
        assert!((back - x).abs() <= 0.5 / 32768.0 + 1e-7);
    }
}

#[test]
fn integer_fir_demo_chain() {
    // tone -> complex-to-int -> int FIR -> int-to-float -> pairs -> complex
    let taps = design_lowpass(1000.0, 500.0, 32_000.0).unwrap();
    let mut g = FlowGraph::new();
    let s = g
        .add_block("tone", CosineSource::new(500.0, 32_000.0, 0.5).unwrap().with_limit(2000))
        .unwrap();
    let q = g.add_block("c2i", ComplexToInt::new(32768.0).unwrap()).unwrap();
    let f = g
        .add_block("fir", IntFirBlock::new(IntFir::new(&taps, 2).unwrap()))
        .unwrap();
    let d = g.add_block("i2f", IntToFloat::new(32768.0).unwrap()).unwrap();
    let p = g.add_block("pairs", RealPairsToComplex::new()).unwrap();
    let (sink, h) = VectorSink::<Complex32>::new();
    let k = g.add_block("sink", sink).unwrap();
    g.chain(&[s, q, f, d, p, k]).unwrap();
    g.run(&RunConfig { chunk_cap: 33, ..RunConfig::default() }).unwrap();
    let y = h.data();
    assert_eq!(y.len(), 2000);
    // Passband tone comes through at unit gain after the filter settles.
    let tail = &y[1000..];
    let amp = tail.iter().map(|v| v.norm()).sum::<f32>() / tail.len() as f32;
    assert!((amp - 0.5).abs() < 0.01, "amp {amp}");
}

#[test]
fn spectrum_peak_at_tone() {
    let fs = 32_000.0;
    let (sink, h) = SpectrumSink::new(256, fs).unwrap();
    let mut g = FlowGraph::new();
    let s = g
        .add_block("tone", CosineSource::new(4000.0, fs, 1.0).unwrap().with_limit(256 * 20 + 10))
        .unwrap();
    let k = g.add_block("spec", sink).unwrap();
    g.chain(&[s, k]).unwrap();
    g.run(&RunConfig::default()).unwrap();
    assert_eq!(h.frames(), 20);
    let spec = h.spectrum_db();
    let (f, p) = spec
        .iter()
        .copied()
        .fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    assert_eq!(f, 4000.0);
    assert!(p.abs() < 0.01, "peak {p} dB");
    let dir = std::env::temp_dir().join(format!("spec_{}.csv", std::process::id()));
    h.write_csv(&dir).unwrap();
    let text = std::fs::read_to_string(&dir).unwrap();
    assert!(text.starts_with("freq_hz,power_db\n"));
    assert_eq!(text.lines().count(), 257);
    std::fs::remove_file(dir).ok();
}

#[test]
fn fftshift_centers_dc() {
    assert_eq!(fftshift(&[0, 1, 2, 3]), vec![2, 3, 0, 1]);
}
