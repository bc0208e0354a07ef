use super::*;
use proptest::prelude::*;
use std::time::Duration;

/// Stateful block: running sum of a real stream.
struct RunningSum {
    acc: f32,
}

impl Block for RunningSum {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Real32]
    }
    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Real32]
    }
    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let n = input.items().min(out.space());
        let x = input.slice::<f32>();
        let y = out.slice_mut::<f32>();
        for i in 0..n {
            self.acc += x[i];
            y[i] = self.acc;
        }
        input.consume(n);
        out.produce(n);
        Ok(WorkStatus::Ok)
    }
}

/// Needs 64-item windows; emits one sum per window.
struct Block64;

impl Block for Block64 {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Real32]
    }
    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Real32]
    }
    fn min_input_items(&self, _port: usize) -> usize {
        64
    }
    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let groups = (input.items() / 64).min(out.space());
        let x = input.slice::<f32>();
        for g in 0..groups {
            let s: f32 = x[g * 64..(g + 1) * 64].iter().sum();
            out.push(&[s]);
        }
        input.consume(groups * 64);
        Ok(WorkStatus::Ok)
    }
}

struct Failing;

impl Block for Failing {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Real32]
    }
    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![]
    }
    fn work(&mut self, _io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        Err(BlockError::new("boom"))
    }
}

fn ramp(n: usize) -> Vec<f32> {
    (0..n).map(|i| ((i * 37) % 101) as f32 - 50.0).collect()
}

fn source_sum_sink(data: Vec<f32>, cap: usize) -> (FlowGraph, SinkHandle<f32>) {
    let mut g = FlowGraph::new();
    let src = g.add_block("src", VectorSource::new(data)).unwrap();
    let sum = g.add_block("sum", RunningSum { acc: 0.0 }).unwrap();
    let pass = g.add_block("pass", PassThrough::new(ItemKind::Real32)).unwrap();
    let (sink, handle) = VectorSink::<f32>::new();
    let snk = g.add_block("sink", sink).unwrap();
    g.connect((src, 0), (sum, 0), cap).unwrap();
    g.connect((sum, 0), (pass, 0), cap).unwrap();
    g.connect((pass, 0), (snk, 0), cap).unwrap();
    (g, handle)
}

#[test]
fn connect_registers_edge_with_requested_capacity() {
    let mut g = FlowGraph::new();
    let a = g.add_block("source", VectorSource::new(vec![0f32; 4])).unwrap();
    let b = g.add_block("sink", NullSink::new(ItemKind::Real32)).unwrap();
    let e = g.connect((a, 0), (b, 0), 4096).unwrap();
    assert_eq!(g.edge_capacity(e), Some(4096));
    assert_eq!(g.edge_names(), vec!["source:0->sink:0".to_string()]);
}

#[test]
fn connect_rounds_capacity_up() {
    let mut g = FlowGraph::new();
    let a = g.add_block("a", VectorSource::new(vec![0f32; 4])).unwrap();
    let b = g.add_block("b", NullSink::new(ItemKind::Real32)).unwrap();
    let e = g.connect((a, 0), (b, 0), 3000).unwrap();
    assert_eq!(g.edge_capacity(e), Some(4096));
}

#[test]
fn second_connection_into_one_input_is_rejected() {
    let mut g = FlowGraph::new();
    let a = g.add_block("a", VectorSource::new(vec![0f32; 4])).unwrap();
    let a2 = g.add_block("a2", VectorSource::new(vec![0f32; 4])).unwrap();
    let b = g.add_block("b", NullSink::new(ItemKind::Real32)).unwrap();
    g.connect((a, 0), (b, 0), 16).unwrap();
    let err = g.connect((a2, 0), (b, 0), 16).unwrap_err();
    assert!(matches!(err, GraphError::DuplicateInput { .. }));
}

#[test]
fn complex_into_byte_is_a_kind_mismatch() {
    let mut g = FlowGraph::new();
    let a = g
        .add_block("a", VectorSource::new(vec![num_complex::Complex32::new(0.0, 0.0)]))
        .unwrap();
    let b = g.add_block("b", NullSink::new(ItemKind::Byte)).unwrap();
    let err = g.connect((a, 0), (b, 0), 16).unwrap_err();
    assert!(matches!(err, GraphError::KindMismatch { .. }));
}

#[test]
fn unknown_port_and_duplicate_name() {
    let mut g = FlowGraph::new();
    let a = g.add_block("a", VectorSource::new(vec![0f32])).unwrap();
    let b = g.add_block("b", NullSink::new(ItemKind::Real32)).unwrap();
    assert!(matches!(
        g.connect((a, 1), (b, 0), 16),
        Err(GraphError::UnknownPort { .. })
    ));
    assert!(matches!(
        g.add_block("a", NullSink::new(ItemKind::Real32)),
        Err(GraphError::DuplicateName(_))
    ));
}

#[test]
fn validate_empty_graph() {
    let r = FlowGraph::new().validate();
    assert!(r.runnable);
    assert_eq!(r.blocks, 0);
    assert!(r.issues.is_empty());
}

#[test]
fn validate_chain_and_unconnected_input() {
    let (g, _) = source_sum_sink(vec![1.0], 16);
    assert!(g.validate().runnable);

    let mut g = FlowGraph::new();
    g.add_block("lonely", NullSink::new(ItemKind::Real32)).unwrap();
    let r = g.validate();
    assert!(!r.runnable);
    assert_eq!(
        r.issues,
        vec![ValidationIssue::UnconnectedInput {
            block: "lonely".into(),
            port: 0
        }]
    );
}

#[test]
fn validate_reports_cycle_members() {
    let mut g = FlowGraph::new();
    let a = g.add_block("a", PassThrough::new(ItemKind::Real32)).unwrap();
    let b = g.add_block("b", PassThrough::new(ItemKind::Real32)).unwrap();
    g.connect((a, 0), (b, 0), 16).unwrap();
    g.connect((b, 0), (a, 0), 16).unwrap();
    let r = g.validate();
    assert!(!r.runnable);
    assert_eq!(
        r.issues,
        vec![ValidationIssue::Cycle {
            blocks: vec!["a".into(), "b".into()]
        }]
    );
    assert!(matches!(
        g.run(&RunConfig::default()),
        Err(RuntimeError::NotRunnable(_))
    ));
}

/// Calls `work` once on a block with hand-built buffers.
fn work_once(
    block: &mut dyn Block,
    input: &[f32],
    space: usize,
) -> (usize, usize, Vec<f32>) {
    let mut inb = RingBuffer::new(ItemKind::Real32, input.len().max(1));
    if let ViewMut::Real(s) = inb.write_view(input.len()) {
        s.copy_from_slice(input);
    }
    inb.commit_write(input.len(), vec![]);
    let mut outb = RingBuffer::new(ItemKind::Real32, space.max(1));
    inb.make_tags_contiguous();
    let mut io = WorkIo {
        inputs: vec![InputWindow {
            view: inb.read_view(input.len()),
            items: input.len(),
            width: 1,
            offset: 0,
            tags: inb.peek_tags(input.len()),
            eos: false,
            consumed: 0,
        }],
        outputs: vec![OutputWindow {
            view: outb.write_view(space),
            space,
            width: 1,
            offset: 0,
            produced: 0,
            tags: vec![],
        }],
        excluded_ns: 0,
        modeled_ns: 0,
    };
    block.work(&mut io).unwrap();
    let (c, p) = (io.inputs[0].consumed(), io.outputs[0].produced());
    let out = io.outputs[0].slice_mut::<f32>()[..p].to_vec();
    (c, p, out)
}

#[test]
fn work_pass_through_moves_everything_offered() {
    let mut b = PassThrough::new(ItemKind::Real32);
    let data = ramp(100);
    let (c, p, out) = work_once(&mut b, &data, 100);
    assert_eq!((c, p), (100, 100));
    assert_eq!(out, data);
}

#[test]
fn work_honors_window_bounds() {
    let mut b = PassThrough::new(ItemKind::Real32);
    let (c, p, _) = work_once(&mut b, &ramp(100), 30);
    assert_eq!((c, p), (30, 30));
    let (c, p, _) = work_once(&mut b, &[], 30);
    assert_eq!((c, p), (0, 0));
}

#[test]
fn source_to_null_sink_consumes_everything() {
    let mut g = FlowGraph::new();
    let src = g.add_block("src", VectorSource::new(ramp(1000))).unwrap();
    let snk = g.add_block("sink", NullSink::new(ItemKind::Real32)).unwrap();
    g.connect((src, 0), (snk, 0), 4096).unwrap();
    let before = g.snapshot_counters();
    assert!(before.is_all_zero());
    let r = g.run(&RunConfig::default()).unwrap();
    assert_eq!(r.counters.block("sink").unwrap().items_in, vec![1000]);
    assert_eq!(g.snapshot_counters().block("sink").unwrap().items_in, vec![1000]);
    let e = &r.edges[0];
    assert_eq!((e.produced, e.consumed, e.final_occupancy), (1000, 1000, 0));
}

#[test]
fn profiling_disabled_keeps_counters_zero() {
    let (g, handle) = source_sum_sink(ramp(500), 64);
    let cfg = RunConfig {
        profiling: false,
        ..RunConfig::default()
    };
    g.run(&cfg).unwrap();
    assert_eq!(handle.len(), 500);
    assert!(g.snapshot_counters().is_all_zero());
}

#[test]
fn output_identical_across_chunk_caps_and_workers() {
    let data = ramp(5000);
    let mut reference: Option<Vec<f32>> = None;
    for workers in [1, 4] {
        for cap in [1, 7, 64, 4096] {
            let (g, handle) = source_sum_sink(data.clone(), 256);
            let cfg = RunConfig {
                chunk_cap: cap,
                workers,
                ..RunConfig::default()
            };
            let r = g.run(&cfg).unwrap();
            for e in &r.edges {
                assert_eq!(e.final_occupancy, 0);
                assert_eq!(e.produced, e.consumed);
                assert!(e.high_water <= e.capacity);
            }
            let out = handle.data();
            assert_eq!(out.len(), 5000);
            match &reference {
                None => reference = Some(out),
                Some(r) => assert_eq!(
                    r.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                    out.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                    "cap {cap} workers {workers}"
                ),
            }
        }
    }
}

#[test]
fn undersized_edge_deadlocks_with_edge_name() {
    let mut g = FlowGraph::new();
    let src = g.add_block("src", VectorSource::new(ramp(1000))).unwrap();
    let big = g.add_block("needs64", Block64).unwrap();
    let snk = g.add_block("sink", NullSink::new(ItemKind::Real32)).unwrap();
    g.connect((src, 0), (big, 0), 2).unwrap();
    g.connect((big, 0), (snk, 0), 16).unwrap();
    match g.run(&RunConfig::default()) {
        Err(RuntimeError::Deadlock { edge }) => assert_eq!(edge, "src:0->needs64:0"),
        other => panic!("expected deadlock, got {other:?}"),
    }
}

#[test]
fn windowed_block_leaves_residual_when_source_ends() {
    let mut g = FlowGraph::new();
    let src = g.add_block("src", VectorSource::new(vec![1.0f32; 130])).unwrap();
    let big = g.add_block("needs64", Block64).unwrap();
    let (sink, h) = VectorSink::<f32>::new();
    let snk = g.add_block("sink", sink).unwrap();
    g.chain(&[src, big, snk]).unwrap();
    let r = g.run(&RunConfig::default()).unwrap();
    assert_eq!(h.data(), vec![64.0, 64.0]);
    assert_eq!(r.edges[0].final_occupancy, 2);
}

#[test]
fn block_failure_names_the_block() {
    let mut g = FlowGraph::new();
    let src = g.add_block("src", VectorSource::new(ramp(10))).unwrap();
    let bad = g.add_block("bad", Failing).unwrap();
    g.chain(&[src, bad]).unwrap();
    match g.run(&RunConfig::default()) {
        Err(RuntimeError::Block { block, .. }) => assert_eq!(block, "bad"),
        other => panic!("{other:?}"),
    }
}

struct Panicking;

impl Block for Panicking {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Real32]
    }
    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![]
    }
    fn work(&mut self, _io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        panic!("boom");
    }
}

#[test]
fn panicking_block_fails_the_run() {
    for workers in [1, 4] {
        let mut g = FlowGraph::new();
        let src = g.add_block("src", VectorSource::new(ramp(10_000))).unwrap();
        let bad = g.add_block("bad", Panicking).unwrap();
        g.chain(&[src, bad]).unwrap();
        let cfg = RunConfig {
            workers,
            ..RunConfig::default()
        };
        match g.run(&cfg) {
            Err(RuntimeError::Block { block, source }) => {
                assert_eq!(block, "bad");
                assert!(source.to_string().contains("boom"));
            }
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn item_budget_stops_sources_and_drains() {
    let (g, handle) = source_sum_sink(ramp(10_000), 64);
    let cfg = RunConfig {
        termination: Termination::ItemBudget(300),
        chunk_cap: 50,
        ..RunConfig::default()
    };
    let r = g.run(&cfg).unwrap();
    assert_eq!(handle.len(), 300);
    assert!(r.edges.iter().all(|e| e.final_occupancy == 0));
}

/// Endless source for the wall-clock test.
struct Zeros;

impl Block for Zeros {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![]
    }
    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Real32]
    }
    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let n = io.outputs[0].space();
        io.outputs[0].slice_mut::<f32>()[..n].fill(0.0);
        io.outputs[0].produce(n);
        Ok(WorkStatus::Ok)
    }
}

#[test]
fn wall_clock_budget_terminates_endless_source() {
    let mut g = FlowGraph::new();
    let src = g.add_block("zeros", Zeros).unwrap();
    let snk = g.add_block("sink", NullSink::new(ItemKind::Real32)).unwrap();
    g.chain(&[src, snk]).unwrap();
    let cfg = RunConfig {
        termination: Termination::WallClock(Duration::from_millis(50)),
        workers: 2,
        ..RunConfig::default()
    };
    let r = g.run(&cfg).unwrap();
    assert!(r.elapsed_ns >= 50_000_000);
    assert!(r.edges[0].produced > 0);
    assert_eq!(r.edges[0].produced, r.edges[0].consumed);
}

#[test]
fn counters_never_decrease_during_a_run() {
    let (g, _h) = source_sum_sink(ramp(400_000), 128);
    let probe = g.counter_probe();
    let cfg = RunConfig {
        chunk_cap: 16,
        workers: 2,
        ..RunConfig::default()
    };
    let snaps = std::thread::scope(|s| {
        let t = s.spawn(|| {
            let mut v = Vec::new();
            for _ in 0..200 {
                v.push(probe.snapshot());
                std::thread::sleep(Duration::from_micros(200));
            }
            v
        });
        g.run(&cfg).unwrap();
        t.join().unwrap()
    });
    for pair in snaps.windows(2) {
        for (a, b) in pair[0].blocks.iter().zip(&pair[1].blocks) {
            assert!(b.calls >= a.calls);
            assert!(b.time_ns >= a.time_ns);
            assert!(b.items_in.iter().zip(&a.items_in).all(|(x, y)| x >= y));
            assert!(b.items_out.iter().zip(&a.items_out).all(|(x, y)| x >= y));
            assert!(b.avg_cycles >= 0.0);
        }
    }
}

#[test]
fn tags_flow_through_with_their_items() {
    let tags = vec![
        Tag::new(3, "a", TagValue::U64(7)),
        Tag::new(900, "b", TagValue::F64(1.5)),
    ];
    let mut g = FlowGraph::new();
    let src = g
        .add_block("src", VectorSource::new(ramp(1000)).with_tags(tags.clone()))
        .unwrap();
    let pass = g.add_block("pass", PassThrough::new(ItemKind::Real32)).unwrap();
    let (sink, h) = VectorSink::<f32>::new();
    let snk = g.add_block("sink", sink).unwrap();
    g.connect((src, 0), (pass, 0), 8).unwrap();
    g.connect((pass, 0), (snk, 0), 8).unwrap();
    g.run(&RunConfig {
        chunk_cap: 3,
        ..RunConfig::default()
    })
    .unwrap();
    assert_eq!(h.tags(), tags);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conservation_and_invariance(len in 0usize..3000, cap in 1usize..300, buf in 1usize..200, workers in 1usize..4) {
        let data = ramp(len);
        let (g, handle) = source_sum_sink(data.clone(), buf);
        let r = g.run(&RunConfig { chunk_cap: cap, workers, ..RunConfig::default() }).unwrap();
        let mut acc = 0.0f32;
        let expect: Vec<f32> = data.iter().map(|x| { acc += x; acc }).collect();
        prop_assert_eq!(handle.data(), expect);
        for e in &r.edges {
            prop_assert_eq!(e.produced, e.consumed + e.final_occupancy as u64);
            prop_assert!(e.high_water <= e.capacity);
        }
    }
}
