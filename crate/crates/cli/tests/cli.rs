use num_complex::Complex32;
use proptest::prelude::*;
use sdr_cli::{files, run};
use sdr_core::dsp::GaussianRng;
use sdr_core::wifi::{FrameEvent, Mcs};
use std::path::Path;

/// Runs the CLI in process; returns (exit code, stdout, stderr).
fn sdr(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("sdr").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn round_trip_every_mcs_gives_zero_per() {
    let dir = tempfile::tempdir().unwrap();
    for mcs in Mcs::ALL {
        let cap = dir.path().join("cap.iq");
        let ev = dir.path().join("ev.jsonl");
        let name = mcs.to_string();
        let (c, _, e) = sdr(&["tx", "--mcs", &name, "--count", "4", "--seed", "3", "--out", p(&cap)]);
        assert_eq!(c, 0, "{e}");
        let (c, out, e) = sdr(&["rx", p(&cap), "--events", p(&ev)]);
        assert_eq!(c, 0, "{e}");
        assert_eq!(out.lines().count(), 4);
        assert!(out.lines().all(|l| l.contains("fcs_ok=true") && l.contains(&name)), "{out}");
        let manifest = dir.path().join("cap.iq.manifest");
        let (c, out, _) = sdr(&["per", "--manifest", p(&manifest), "--events", p(&ev)]);
        assert_eq!(c, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["per"], 0.0, "{name}: {out}");
        assert_eq!(v["sent"], 4);
    }
}

#[test]
fn impaired_capture_decodes_and_sidecar_records_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cap = dir.path().join("noisy.iq");
    let (c, _, _) = sdr(&[
        "tx", "--mcs", "qpsk-1/2", "--count", "10", "--snr-db", "20", "--cfo-hz", "-15000",
        "--seed", "11", "--out", p(&cap),
    ]);
    assert_eq!(c, 0);
    let (samples, meta) = files::read_iq(&cap).unwrap();
    let meta = meta.unwrap();
    assert_eq!(meta.seed, Some(11));
    assert_eq!(meta.sample_rate_hz, 10e6);
    assert!(!samples.is_empty());
    let (c, out, _) = sdr(&["rx", p(&cap), "--backend", "device"]);
    assert_eq!(c, 0);
    assert!(out.lines().filter(|l| l.contains("fcs_ok=true")).count() >= 9, "{out}");
}

#[test]
fn same_seed_reproduces_files_and_events() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for i in 0..2 {
        let cap = dir.path().join(format!("r{i}.iq"));
        let ev = dir.path().join(format!("r{i}.jsonl"));
        let args = ["tx", "--mcs", "qam16-1/2", "--count", "5", "--snr-db", "18", "--seed", "99"];
        let (c, _, _) = sdr(&[&args[..], &["--out", p(&cap)]].concat());
        assert_eq!(c, 0);
        let (c, _, _) = sdr(&["rx", p(&cap), "--events", p(&ev), "--workers", "3"]);
        assert_eq!(c, 0);
        let manifest = dir.path().join(format!("r{i}.iq.manifest"));
        outputs.push((
            std::fs::read(&cap).unwrap(),
            std::fs::read(&manifest).unwrap(),
            std::fs::read(&ev).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn psdu_file_is_transmitted_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("psdus.txt");
    std::fs::write(&src, "00\ncafe\n\n0102030405060708\n").unwrap();
    let cap = dir.path().join("f.iq");
    let (c, out, _) = sdr(&["tx", "--mcs", "bpsk-3/4", "--psdu-file", p(&src), "--seed", "1", "--out", p(&cap)]);
    assert_eq!(c, 0);
    assert!(out.contains("wrote 3 frames"), "{out}");
    let ev = dir.path().join("f.jsonl");
    assert_eq!(sdr(&["rx", p(&cap), "--events", p(&ev)]).0, 0);
    let events = files::parse_events(&std::fs::read_to_string(&ev).unwrap()).unwrap();
    let got: Vec<Vec<u8>> = events.into_iter().map(|e| e.psdu).collect();
    assert_eq!(got, vec![vec![0x00], vec![0xca, 0xfe], (1..=8).collect::<Vec<u8>>()]);
}

#[test]
fn zero_count_writes_empty_files() {
    let dir = tempfile::tempdir().unwrap();
    let cap = dir.path().join("empty.iq");
    let (c, _, _) = sdr(&["tx", "--mcs", "bpsk-1/2", "--count", "0", "--seed", "1", "--out", p(&cap)]);
    assert_eq!(c, 0);
    assert_eq!(std::fs::metadata(&cap).unwrap().len(), 0);
    assert_eq!(std::fs::read_to_string(dir.path().join("empty.iq.manifest")).unwrap(), "");
    let (c, out, _) = sdr(&["rx", p(&cap)]);
    assert_eq!((c, out.as_str()), (0, ""));
}

#[test]
fn noise_only_capture_yields_no_events() {
    let dir = tempfile::tempdir().unwrap();
    let cap = dir.path().join("noise.iq");
    let mut g = GaussianRng::new(4);
    let noise: Vec<Complex32> = (0..50_000).map(|_| g.complex(0.1)).collect();
    std::fs::write(&cap, files::encode_iq(&noise)).unwrap();
    let (c, out, _) = sdr(&["rx", p(&cap)]);
    assert_eq!((c, out.as_str()), (0, ""));
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.iq");
    let (c, _, e) = sdr(&["tx", "--mcs", "QAM128", "--out", p(&out)]);
    assert_eq!(c, 1);
    assert!(e.contains("QAM128"), "{e}");
    assert_eq!(sdr(&["tx", "--mcs", "bpsk-1/2", "--length", "0", "--out", p(&out)]).0, 1);
    assert_eq!(sdr(&["tx", "--mcs", "bpsk-1/2", "--length", "4096", "--out", p(&out)]).0, 1);
    assert_eq!(sdr(&["rx"]).0, 1);
    assert_eq!(sdr(&["frobnicate"]).0, 1);
    assert_eq!(sdr(&["rx", p(&out), "--backend", "gpu"]).0, 1);
    assert_eq!(sdr(&["demo-fir", "--frequency", "20000", "--seed", "1"]).0, 1);
    assert_eq!(sdr(&["demo-fir", "--cutoff", "-5", "--seed", "1"]).0, 1);
    assert!(!out.exists());
}

#[test]
fn help_and_version_exit_0() {
    let (c, out, _) = sdr(&["--help"]);
    assert_eq!(c, 0);
    for cmd in ["tx", "rx", "per", "demo-fir", "bench-fft"] {
        assert!(out.contains(cmd), "{out}");
    }
    assert_eq!(sdr(&["--version"]).0, 0);
}

#[test]
fn io_and_format_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let odd = dir.path().join("odd.iq");
    std::fs::write(&odd, [0u8; 13]).unwrap();
    let (c, _, e) = sdr(&["rx", p(&odd)]);
    assert_eq!(c, 2);
    assert!(e.contains("multiple of 8"), "{e}");

    let nan = dir.path().join("nan.iq");
    std::fs::write(&nan, files::encode_iq(&[Complex32::new(f32::NAN, 0.0)])).unwrap();
    assert_eq!(sdr(&["rx", p(&nan)]).0, 2);

    assert_eq!(sdr(&["rx", p(&dir.path().join("missing.iq"))]).0, 2);

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "zz\n").unwrap();
    let ev = dir.path().join("ev.jsonl");
    std::fs::write(&ev, "").unwrap();
    assert_eq!(sdr(&["per", "--manifest", p(&bad), "--events", p(&ev)]).0, 2);
    std::fs::write(&bad, "00\n").unwrap();
    std::fs::write(&ev, "{not json}\n").unwrap();
    assert_eq!(sdr(&["per", "--manifest", p(&bad), "--events", p(&ev)]).0, 2);

    let unwritable = dir.path().join("no/such/dir/cap.iq");
    assert_eq!(sdr(&["tx", "--mcs", "bpsk-1/2", "--seed", "1", "--out", p(&unwritable)]).0, 2);
}

#[test]
fn per_counts_partial_delivery() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.txt");
    let sent: Vec<Vec<u8>> = (0..20u8).map(|i| vec![i; 8]).collect();
    std::fs::write(&manifest, files::format_manifest(&sent)).unwrap();
    let events: Vec<FrameEvent> = sent[..19]
        .iter()
        .enumerate()
        .map(|(i, s)| FrameEvent {
            start: i as u64 * 1000,
            mcs: Mcs::Bpsk12,
            length: s.len(),
            fcs_ok: i != 0,
            cfo_applied: 0.0,
            psdu: s.clone(),
        })
        .collect();
    let ev = dir.path().join("e.jsonl");
    std::fs::write(&ev, files::format_events(&events)).unwrap();
    let (c, out, _) = sdr(&["per", "--manifest", p(&manifest), "--events", p(&ev)]);
    assert_eq!(c, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!((v["sent"].as_u64(), v["detected"].as_u64(), v["passed"].as_u64()), (Some(20), Some(19), Some(18)));
    assert!((v["per"].as_f64().unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn rx_profile_and_comparison_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cap = dir.path().join("c.iq");
    assert_eq!(sdr(&["tx", "--mcs", "qpsk-3/4", "--count", "3", "--seed", "5", "--out", p(&cap)]).0, 0);
    let json = dir.path().join("prof.json");
    let csv = dir.path().join("prof.csv");
    let cmp = dir.path().join("cmp.txt");
    let (c, _, e) = sdr(&["rx", p(&cap), "--profile", p(&json), "--compare", p(&cmp)]);
    assert_eq!(c, 0, "{e}");
    assert!(e.contains("fft+equalizer"), "{e}");
    assert!(e.contains("mismatches: 0"), "{e}");
    let doc = sdr_core::profiler::parse_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let names: Vec<&str> = doc.blocks.iter().map(|b| b.name.as_str()).collect();
    for b in ["src", "detect", "cfo", "align", "s2v", "fft", "equalizer", "decoder", "sink"] {
        assert!(names.contains(&b), "{names:?}");
    }
    let sum: f64 = doc.blocks.iter().map(|b| b.pct).sum();
    assert!((sum - 100.0).abs() < 0.1, "{sum}");
    assert!(std::fs::read_to_string(&cmp).unwrap().lines().any(|l| l.starts_with("block  fft")));

    assert_eq!(sdr(&["rx", p(&cap), "--profile", p(&csv)]).0, 0);
    let doc = sdr_core::profiler::parse_csv(&std::fs::read_to_string(&csv).unwrap(), 1.0).unwrap();
    assert_eq!(doc.edges.len(), 8);
}

#[test]
fn demo_fir_spectrum_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("spec.csv");
    let (c, out, _) = sdr(&[
        "demo-fir", "--frequency", "2000", "--no-throttle", "--duration", "0.5", "--noise-std",
        "0.01", "--seed", "2", "--out", p(&csv),
    ]);
    assert_eq!(c, 0);
    assert!(out.contains("peak 2000.0 Hz"), "{out}");
    assert!(out.contains("seed 2"), "{out}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("freq_hz,power_db"));
    assert_eq!(lines.count(), 1024);
}

#[test]
fn demo_fir_silence_sits_at_the_floor() {
    let r = sdr_cli::cmd_demo_fir(&sdr_cli::DemoFirConfig {
        amplitude: 0.0,
        noise_std: 0.0,
        throttle: false,
        duration_s: 0.1,
        ..Default::default()
    })
    .unwrap();
    assert!(r.spectrum.iter().all(|&(_, db)| db <= -250.0));
}

#[test]
fn demo_fir_throttle_paces_the_run() {
    let t0 = std::time::Instant::now();
    let (c, _, _) = sdr(&["demo-fir", "--duration", "0.2", "--seed", "1"]);
    assert_eq!(c, 0);
    assert!(t0.elapsed().as_secs_f64() >= 0.15);
}

#[test]
fn bench_fft_reports_errors_within_tolerance() {
    let (c, out, _) = sdr(&["bench-fft", "--sizes", "64,256", "--iterations", "20", "--seed", "3"]);
    assert_eq!(c, 0);
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("size,backend,iterations,mean_host_ns,mean_modeled_ns,max_error,tolerance,seed")
    );
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let err: f64 = r[5].parse().unwrap();
        let tol: f64 = r[6].parse().unwrap();
        assert!(err <= tol, "{r:?}");
        assert_eq!(r[7], "3");
    }
    // One 64-point job: 512 bytes over the bus plus 64·6 pipeline cycles.
    let dev64 = rows.iter().find(|r| r[0] == "64" && r[1] == "device").unwrap();
    let modeled: f64 = dev64[4].parse().unwrap();
    let expected = 512.0 / 1.2e9 * 1e9 + 384.0 / 150e6 * 1e9;
    assert!((modeled - expected).abs() <= 1.0, "{modeled} vs {expected}");
}

#[test]
fn bench_fft_rejects_unsupported_sizes() {
    let (c, _, e) = sdr(&["bench-fft", "--sizes", "63", "--seed", "1"]);
    assert_eq!(c, 1);
    assert!(e.contains("63"), "{e}");
    assert_eq!(sdr(&["bench-fft", "--sizes", "4096", "--seed", "1"]).0, 1);
    assert_eq!(sdr(&["bench-fft", "--iterations", "0", "--seed", "1"]).0, 1);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_sdr");
    let status = |args: &[&str]| std::process::Command::new(bin).args(args).output().unwrap();
    assert_eq!(status(&["--help"]).status.code(), Some(0));
    assert_eq!(status(&["tx", "--mcs", "QAM128", "--out", "/dev/null"]).status.code(), Some(1));
    assert_eq!(status(&["rx", "/nonexistent/cap.iq"]).status.code(), Some(2));
}

proptest! {
    #[test]
    fn iq_round_trip(v in prop::collection::vec((-1e6f32..1e6, -1e6f32..1e6), 0..200)) {
        let x: Vec<Complex32> = v.iter().map(|&(a, b)| Complex32::new(a, b)).collect();
        let bytes = files::encode_iq(&x);
        prop_assert_eq!(bytes.len(), 8 * x.len());
        prop_assert_eq!(files::decode_iq(&bytes).unwrap(), x);
    }

    #[test]
    fn manifest_round_trip(v in prop::collection::vec(prop::collection::vec(any::<u8>(), 1..40), 0..20)) {
        prop_assert_eq!(files::parse_manifest(&files::format_manifest(&v)).unwrap(), v);
    }

    #[test]
    fn truncated_iq_is_rejected(n in 0usize..100, cut in 1usize..8) {
        let bytes = vec![0u8; 8 * n + cut];
        prop_assert!(files::decode_iq(&bytes).is_err());
    }
}
