use super::block::{Block, BlockError, InputWindow, OutputWindow, WorkIo, WorkStatus};
use super::buffer::RingBuffer;
use super::counters::{CounterProbe, CounterSnapshot, PerfCounters, DEFAULT_NOMINAL_HZ};
use super::item::ItemKind;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};
use thiserror::Error;

pub const DEFAULT_BUFFER_ITEMS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeId(pub usize);

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("duplicate block name '{0}'")]
    DuplicateName(String),
    #[error("unknown block id {0}")]
    UnknownBlock(usize),
    #[error("block '{block}' has no {dir} port {port}")]
    UnknownPort {
        block: String,
        dir: &'static str,
        port: usize,
    },
    #[error("kind mismatch: {src} produces {src_kind}, {dst} expects {dst_kind}")]
    KindMismatch {
        src: String,
        src_kind: ItemKind,
        dst: String,
        dst_kind: ItemKind,
    },
    #[error("input {block}:{port} is already connected")]
    DuplicateInput { block: String, port: usize },
    #[error("output {block}:{port} is already connected")]
    DuplicateOutput { block: String, port: usize },
}

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("graph is not runnable: {0:?}")]
    NotRunnable(Vec<ValidationIssue>),
    #[error("block '{block}' failed: {source}")]
    Block { block: String, source: BlockError },
    #[error("block '{block}' broke the work contract: {detail}")]
    Contract { block: String, detail: String },
    #[error("deadlock: no block can progress, saturated edge {edge}")]
    Deadlock { edge: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidationIssue {
    UnconnectedInput { block: String, port: usize },
    UnconnectedOutput { block: String, port: usize },
    KindMismatch { edge: String },
    Cycle { blocks: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub blocks: usize,
    pub edges: usize,
    pub issues: Vec<ValidationIssue>,
    pub runnable: bool,
}

/// When a run stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// Run until every source reports exhaustion, then drain.
    SourceExhaustion,
    /// Cut sources off after this many items in total, then drain.
    ItemBudget(u64),
    /// Cut sources off after this much wall-clock time, then drain.
    WallClock(Duration),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub termination: Termination,
    /// Upper bound on items offered per port per activation (raised to a
    /// block's own minimum when that is larger).
    pub chunk_cap: usize,
    pub workers: usize,
    pub profiling: bool,
    pub nominal_hz: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            termination: Termination::SourceExhaustion,
            chunk_cap: DEFAULT_BUFFER_ITEMS,
            workers: 1,
            profiling: true,
            nominal_hz: DEFAULT_NOMINAL_HZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    pub name: String,
    pub kind: ItemKind,
    pub capacity: usize,
    pub item_bytes: usize,
    pub high_water: usize,
    pub final_occupancy: usize,
    pub produced: u64,
    pub consumed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub counters: CounterSnapshot,
    pub edges: Vec<EdgeReport>,
    pub elapsed_ns: u64,
    pub workers: usize,
    pub chunk_cap: usize,
}

impl RunReport {
    pub fn edge(&self, name: &str) -> Option<&EdgeReport> {
        self.edges.iter().find(|e| e.name == name)
    }
}

struct Node {
    name: String,
    block: Mutex<Box<dyn Block>>,
    inputs: Vec<ItemKind>,
    outputs: Vec<ItemKind>,
    in_edges: Vec<Option<usize>>,
    out_edges: Vec<Option<usize>>,
    counters: Arc<PerfCounters>,
    done: AtomicBool,
}

struct Edge {
    name: String,
    src: (usize, usize),
    dst: (usize, usize),
    buffer: Mutex<RingBuffer>,
}

/// Directed graph of blocks joined by bounded stream buffers.
pub struct FlowGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    nominal_hz: Arc<AtomicU64>,
}

impl Default for FlowGraph {
    fn default() -> Self {
        Self::new()
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl FlowGraph {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            edges: Vec::new(),
            nominal_hz: Arc::new(AtomicU64::new(DEFAULT_NOMINAL_HZ.to_bits())),
        }
    }

    pub fn add_block(
        &mut self,
        name: impl Into<String>,
        block: impl Block + 'static,
    ) -> Result<BlockId, GraphError> {
        self.add_boxed(name, Box::new(block))
    }

    pub fn add_boxed(
        &mut self,
        name: impl Into<String>,
        block: Box<dyn Block>,
    ) -> Result<BlockId, GraphError> {
        let name = name.into();
        if self.nodes.iter().any(|n| n.name == name) {
            return Err(GraphError::DuplicateName(name));
        }
        let inputs = block.input_kinds();
        let outputs = block.output_kinds();
        self.nodes.push(Node {
            counters: Arc::new(PerfCounters::new(inputs.len(), outputs.len())),
            in_edges: vec![None; inputs.len()],
            out_edges: vec![None; outputs.len()],
            inputs,
            outputs,
            name,
            block: Mutex::new(block),
            done: AtomicBool::new(false),
        });
        Ok(BlockId(self.nodes.len() - 1))
    }

    pub fn block_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn block_name(&self, id: BlockId) -> Option<&str> {
        self.nodes.get(id.0).map(|n| n.name.as_str())
    }

    pub fn edge_names(&self) -> Vec<String> {
        self.edges.iter().map(|e| e.name.clone()).collect()
    }

    pub fn edge_capacity(&self, id: EdgeId) -> Option<usize> {
        self.edges.get(id.0).map(|e| lock(&e.buffer).capacity())
    }

    /// Connects `src` output port to `dst` input port through a buffer of
    /// `capacity` items (rounded up to a power of two).
    pub fn connect(
        &mut self,
        src: (BlockId, usize),
        dst: (BlockId, usize),
        capacity: usize,
    ) -> Result<EdgeId, GraphError> {
        let (s, sp) = (src.0 .0, src.1);
        let (d, dp) = (dst.0 .0, dst.1);
        let sn = self.nodes.get(s).ok_or(GraphError::UnknownBlock(s))?;
        let dn = self.nodes.get(d).ok_or(GraphError::UnknownBlock(d))?;
        let src_kind = *sn.outputs.get(sp).ok_or_else(|| GraphError::UnknownPort {
            block: sn.name.clone(),
            dir: "output",
            port: sp,
        })?;
        let dst_kind = *dn.inputs.get(dp).ok_or_else(|| GraphError::UnknownPort {
            block: dn.name.clone(),
            dir: "input",
            port: dp,
        })?;
        if dn.in_edges[dp].is_some() {
            return Err(GraphError::DuplicateInput {
                block: dn.name.clone(),
                port: dp,
            });
        }
        if sn.out_edges[sp].is_some() {
            return Err(GraphError::DuplicateOutput {
                block: sn.name.clone(),
                port: sp,
            });
        }
        if src_kind != dst_kind {
            return Err(GraphError::KindMismatch {
                src: format!("{}:{}", sn.name, sp),
                src_kind,
                dst: format!("{}:{}", dn.name, dp),
                dst_kind,
            });
        }
        let name = format!("{}:{}->{}:{}", sn.name, sp, dn.name, dp);
        let id = self.edges.len();
        self.edges.push(Edge {
            name,
            src: (s, sp),
            dst: (d, dp),
            buffer: Mutex::new(RingBuffer::new(src_kind, capacity)),
        });
        self.nodes[s].out_edges[sp] = Some(id);
        self.nodes[d].in_edges[dp] = Some(id);
        Ok(EdgeId(id))
    }

    /// Shorthand for `connect` with the default buffer size.
    pub fn chain(&mut self, blocks: &[BlockId]) -> Result<(), GraphError> {
        for pair in blocks.windows(2) {
            self.connect((pair[0], 0), (pair[1], 0), DEFAULT_BUFFER_ITEMS)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        for n in &self.nodes {
            for (port, e) in n.in_edges.iter().enumerate() {
                if e.is_none() {
                    issues.push(ValidationIssue::UnconnectedInput {
                        block: n.name.clone(),
                        port,
                    });
                }
            }
            for (port, e) in n.out_edges.iter().enumerate() {
                if e.is_none() {
                    issues.push(ValidationIssue::UnconnectedOutput {
                        block: n.name.clone(),
                        port,
                    });
                }
            }
        }
        for e in &self.edges {
            let sk = self.nodes[e.src.0].outputs[e.src.1];
            let dk = self.nodes[e.dst.0].inputs[e.dst.1];
            if sk != dk {
                issues.push(ValidationIssue::KindMismatch {
                    edge: e.name.clone(),
                });
            }
        }
        let mut g = DiGraph::<usize, ()>::new();
        let idx: Vec<_> = (0..self.nodes.len()).map(|i| g.add_node(i)).collect();
        for e in &self.edges {
            g.add_edge(idx[e.src.0], idx[e.dst.0], ());
        }
        for scc in petgraph::algo::tarjan_scc(&g) {
            let cyclic = scc.len() > 1 || g.contains_edge(scc[0], scc[0]);
            if cyclic {
                let mut blocks: Vec<String> = scc
                    .iter()
                    .map(|&i| self.nodes[g[i]].name.clone())
                    .collect();
                blocks.sort();
                issues.push(ValidationIssue::Cycle { blocks });
            }
        }
        ValidationReport {
            blocks: self.nodes.len(),
            edges: self.edges.len(),
            runnable: issues.is_empty(),
            issues,
        }
    }

    pub fn counter_probe(&self) -> CounterProbe {
        CounterProbe {
            entries: self
                .nodes
                .iter()
                .map(|n| (n.name.clone(), n.counters.clone()))
                .collect(),
            nominal_hz: self.nominal_hz.clone(),
        }
    }

    pub fn snapshot_counters(&self) -> CounterSnapshot {
        self.counter_probe().snapshot()
    }

    fn edge_reports(&self) -> Vec<EdgeReport> {
        self.edges
            .iter()
            .map(|e| {
                let b = lock(&e.buffer);
                EdgeReport {
                    name: e.name.clone(),
                    kind: b.kind(),
                    capacity: b.capacity(),
                    item_bytes: b.kind().item_bytes(),
                    high_water: b.high_water(),
                    final_occupancy: b.occupancy(),
                    produced: b.items_written(),
                    consumed: b.items_read(),
                }
            })
            .collect()
    }

    /// Executes the graph until `config.termination` is met and all
    /// in-flight data has drained.
    pub fn run(&self, config: &RunConfig) -> Result<RunReport, RuntimeError> {
        let report = self.validate();
        if !report.runnable {
            return Err(RuntimeError::NotRunnable(report.issues));
        }
        self.nominal_hz
            .store(config.nominal_hz.to_bits(), Ordering::Relaxed);
        for n in &self.nodes {
            n.counters.set_enabled(config.profiling);
        }
        let workers = config.workers.max(1).min(self.nodes.len().max(1));
        let sched = Sched {
            graph: self,
            cfg: config,
            start: Instant::now(),
            epoch: AtomicU64::new(0),
            idle_at: (0..workers).map(|_| AtomicU64::new(0)).collect(),
            stop: AtomicBool::new(false),
            sources_cut: AtomicBool::new(false),
            source_items: AtomicU64::new(0),
            failure: Mutex::new(None),
        };
        if workers == 1 {
            sched.worker(0, workers);
        } else {
            std::thread::scope(|s| {
                for w in 0..workers {
                    let sched = &sched;
                    s.spawn(move || sched.worker(w, workers));
                }
            });
        }
        if let Some(err) = lock(&sched.failure).take() {
            return Err(err);
        }
        Ok(RunReport {
            counters: self.snapshot_counters(),
            edges: self.edge_reports(),
            elapsed_ns: sched.start.elapsed().as_nanos() as u64,
            workers,
            chunk_cap: config.chunk_cap,
        })
    }
}

struct Sched<'g> {
    graph: &'g FlowGraph,
    cfg: &'g RunConfig,
    start: Instant,
    /// Bumped after every state change (items moved or a block finished).
    epoch: AtomicU64,
    /// Per worker: 1 + the epoch at which a full pass made no progress.
    idle_at: Vec<AtomicU64>,
    stop: AtomicBool,
    sources_cut: AtomicBool,
    source_items: AtomicU64,
    failure: Mutex<Option<RuntimeError>>,
}

enum Outcome {
    Idle,
    Progress,
}

impl Sched<'_> {
    fn fail(&self, err: RuntimeError) {
        let mut f = lock(&self.failure);
        if f.is_none() {
            *f = Some(err);
        }
        self.stop.store(true, Ordering::SeqCst);
    }

    fn worker(&self, me: usize, workers: usize) {
        let mine: Vec<usize> = (0..self.graph.nodes.len())
            .filter(|i| i % workers == me)
            .collect();
        while !self.stop.load(Ordering::SeqCst) {
            self.check_budget();
            let e0 = self.epoch.load(Ordering::SeqCst);
            let mut progress = false;
            for &i in &mine {
                match self.activate(i) {
                    Ok(Outcome::Progress) => {
                        progress = true;
                        self.epoch.fetch_add(1, Ordering::SeqCst);
                    }
                    Ok(Outcome::Idle) => {}
                    Err(e) => {
                        self.fail(e);
                        return;
                    }
                }
            }
            if progress {
                continue;
            }
            let e1 = self.epoch.load(Ordering::SeqCst);
            if e0 == e1 {
                self.idle_at[me].store(e0 + 1, Ordering::SeqCst);
                let now = self.epoch.load(Ordering::SeqCst) + 1;
                if self.idle_at.iter().all(|a| a.load(Ordering::SeqCst) == now) {
                    self.quiesce();
                    return;
                }
            }
            if workers > 1 {
                std::thread::yield_now();
            }
        }
    }

    fn is_source(&self, i: usize) -> bool {
        self.graph.nodes[i].inputs.is_empty()
    }

    fn check_budget(&self) {
        if self.sources_cut.load(Ordering::SeqCst) {
            return;
        }
        let cut = match self.cfg.termination {
            Termination::SourceExhaustion => false,
            Termination::ItemBudget(n) => self.source_items.load(Ordering::SeqCst) >= n,
            Termination::WallClock(d) => self.start.elapsed() >= d,
        };
        if cut {
            self.sources_cut.store(true, Ordering::SeqCst);
            self.epoch.fetch_add(1, Ordering::SeqCst);
        }
    }

    /// Reached when no worker can progress: either drained or deadlocked.
    fn quiesce(&self) {
        let g = self.graph;
        let cut = self.sources_cut.load(Ordering::SeqCst);
        let starved = (0..g.nodes.len())
            .any(|i| self.is_source(i) && !cut && !g.nodes[i].done.load(Ordering::SeqCst));
        if starved {
            let edge = g
                .edges
                .iter()
                .find(|e| {
                    let b = lock(&e.buffer);
                    b.occupancy() == b.capacity()
                })
                .or_else(|| g.edges.first())
                .map(|e| e.name.clone())
                .unwrap_or_default();
            self.fail(RuntimeError::Deadlock { edge });
        } else {
            self.stop.store(true, Ordering::SeqCst);
        }
    }

    fn upstream_finished(&self, edge: usize) -> bool {
        let src = self.graph.edges[edge].src.0;
        self.graph.nodes[src].done.load(Ordering::SeqCst)
            || (self.is_source(src) && self.sources_cut.load(Ordering::SeqCst))
    }

    fn activate(&self, i: usize) -> Result<Outcome, RuntimeError> {
        let g = self.graph;
        let node = &g.nodes[i];
        if node.done.load(Ordering::SeqCst) {
            return Ok(Outcome::Idle);
        }
        let source = self.is_source(i);
        if source && self.sources_cut.load(Ordering::SeqCst) {
            node.done.store(true, Ordering::SeqCst);
            return Ok(Outcome::Progress);
        }
        let mut block = lock(&node.block);

        // Lock every attached edge in ascending id order.
        let mut ids: Vec<(usize, bool, usize)> = Vec::new();
        for (p, e) in node.in_edges.iter().enumerate() {
            ids.push((e.expect("validated"), true, p));
        }
        for (p, e) in node.out_edges.iter().enumerate() {
            ids.push((e.expect("validated"), false, p));
        }
        ids.sort_unstable();
        // Upstream done-ness must be sampled before the buffers are locked so
        // that a finished producer's final items are always visible.
        let eos: Vec<bool> = node
            .in_edges
            .iter()
            .map(|e| self.upstream_finished(e.unwrap()))
            .collect();
        let mut guards: Vec<MutexGuard<'_, RingBuffer>> =
            ids.iter().map(|(e, _, _)| lock(&g.edges[*e].buffer)).collect();
        let mut ins: Vec<Option<&mut RingBuffer>> = (0..node.inputs.len()).map(|_| None).collect();
        let mut outs: Vec<Option<&mut RingBuffer>> =
            (0..node.outputs.len()).map(|_| None).collect();
        for (guard, &(_, is_in, port)) in guards.iter_mut().zip(&ids) {
            if is_in {
                ins[port] = Some(&mut **guard);
            } else {
                outs[port] = Some(&mut **guard);
            }
        }
        let mut ins: Vec<&mut RingBuffer> = ins.into_iter().map(|b| b.unwrap()).collect();
        let mut outs: Vec<&mut RingBuffer> = outs.into_iter().map(|b| b.unwrap()).collect();

        let cap = self.cfg.chunk_cap.max(1);
        let mut normal = true;
        let mut in_items = Vec::with_capacity(ins.len());
        for (p, b) in ins.iter().enumerate() {
            let need = block.min_input_items(p);
            let avail = b.occupancy();
            if avail < need {
                normal = false;
            }
            in_items.push(avail.min(cap.max(need)));
        }
        let mut out_space = Vec::with_capacity(outs.len());
        let mut have_space = true;
        for (p, b) in outs.iter().enumerate() {
            let need = block.min_output_space(p);
            let space = b.space();
            if space < need {
                have_space = false;
            }
            out_space.push(space.min(cap.max(need)));
        }
        if source {
            if let Termination::ItemBudget(n) = self.cfg.termination {
                let left = n.saturating_sub(self.source_items.load(Ordering::SeqCst)) as usize;
                for s in &mut out_space {
                    *s = (*s).min(left);
                }
            }
        }
        let all_eos = !ins.is_empty() && eos.iter().all(|&e| e);
        let flushing = !normal && all_eos;
        if !have_space || (!normal && !flushing) {
            return Ok(Outcome::Idle);
        }
        // Windows on finished inputs hold everything that is left.
        if flushing {
            for (p, b) in ins.iter().enumerate() {
                in_items[p] = b.occupancy();
            }
        }

        let mut io = WorkIo {
            inputs: Vec::with_capacity(ins.len()),
            outputs: Vec::with_capacity(outs.len()),
            excluded_ns: 0,
            modeled_ns: 0,
        };
        for b in ins.iter_mut() {
            b.make_tags_contiguous();
        }
        for (p, b) in ins.iter().enumerate() {
            let n = in_items[p];
            let b: &RingBuffer = b;
            let offset = b.items_read();
            let width = b.kind().width();
            let window_eos = eos[p] && n == b.occupancy();
            let tags = b.peek_tags(n);
            io.inputs.push(InputWindow {
                view: b.read_view(n),
                items: n,
                width,
                offset,
                tags,
                eos: window_eos,
                consumed: 0,
            });
        }
        for (p, b) in outs.iter_mut().enumerate() {
            let n = out_space[p];
            let offset = b.items_written();
            let width = b.kind().width();
            io.outputs.push(OutputWindow {
                view: b.write_view(n),
                space: n,
                width,
                offset,
                produced: 0,
                tags: Vec::new(),
            });
        }

        let t0 = Instant::now();
        // A panicking block fails the run instead of stalling its peers.
        let status = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| block.work(&mut io)))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "unknown panic".into());
                Err(BlockError::new(format!("panicked: {msg}")))
            })
            .map_err(|source| RuntimeError::Block {
                block: node.name.clone(),
                source,
            })?;
        let elapsed = t0.elapsed().as_nanos() as u64;

        let consumed: Vec<usize> = io.inputs.iter().map(|w| w.consumed).collect();
        let produced: Vec<usize> = io.outputs.iter().map(|w| w.produced).collect();
        let excluded = io.excluded_ns;
        let modeled = io.modeled_ns;
        let mut out_tags: Vec<Vec<_>> = io.outputs.iter_mut().map(|w| std::mem::take(&mut w.tags)).collect();
        drop(io);

        for (p, tags) in out_tags.iter_mut().enumerate() {
            let lo = outs[p].items_written();
            let hi = lo + produced[p] as u64;
            if let Some(t) = tags.iter().find(|t| t.offset < lo || t.offset >= hi) {
                return Err(RuntimeError::Contract {
                    block: node.name.clone(),
                    detail: format!("tag '{}' at {} outside produced range {lo}..{hi}", t.key, t.offset),
                });
            }
        }
        for (p, b) in ins.iter_mut().enumerate() {
            b.consume(consumed[p]);
        }
        for (p, b) in outs.iter_mut().enumerate() {
            b.commit_write(produced[p], std::mem::take(&mut out_tags[p]));
        }
        drop(guards);

        node.counters
            .record(&consumed, &produced, elapsed.saturating_sub(excluded), modeled);
        if source {
            let n: usize = produced.iter().sum();
            self.source_items.fetch_add(n as u64, Ordering::SeqCst);
        }

        let moved = consumed.iter().any(|&c| c > 0) || produced.iter().any(|&p| p > 0);
        let finished = status == WorkStatus::Done || (flushing && !moved);
        if finished {
            node.done.store(true, Ordering::SeqCst);
        }
        Ok(if moved || finished {
            Outcome::Progress
        } else {
            Outcome::Idle
        })
    }
}

