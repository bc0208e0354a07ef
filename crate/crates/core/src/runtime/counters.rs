use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

/// Nominal processor clock used to turn work time into cycle estimates.
pub const DEFAULT_NOMINAL_HZ: f64 = 666.0e6;

/// Live per-block counters. Every field is an independent atomic, so readers
/// never see a torn value; fields only ever grow while a graph runs.
#[derive(Debug)]
pub struct PerfCounters {
    enabled: AtomicBool,
    calls: AtomicU64,
    items_in: Vec<AtomicU64>,
    items_out: Vec<AtomicU64>,
    time_ns: AtomicU64,
    modeled_ns: AtomicU64,
}

impl PerfCounters {
    pub(crate) fn new(inputs: usize, outputs: usize) -> Self {
        Self {
            enabled: AtomicBool::new(false),
            calls: AtomicU64::new(0),
            items_in: (0..inputs).map(|_| AtomicU64::new(0)).collect(),
            items_out: (0..outputs).map(|_| AtomicU64::new(0)).collect(),
            time_ns: AtomicU64::new(0),
            modeled_ns: AtomicU64::new(0),
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled.load(Ordering::Relaxed)
    }

    pub(crate) fn set_enabled(&self, on: bool) {
        self.enabled.store(on, Ordering::Relaxed);
    }

    pub(crate) fn record(
        &self,
        consumed: &[usize],
        produced: &[usize],
        time_ns: u64,
        modeled_ns: u64,
    ) {
        if !self.is_enabled() {
            return;
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        for (c, &n) in self.items_in.iter().zip(consumed) {
            c.fetch_add(n as u64, Ordering::Relaxed);
        }
        for (c, &n) in self.items_out.iter().zip(produced) {
            c.fetch_add(n as u64, Ordering::Relaxed);
        }
        self.time_ns.fetch_add(time_ns, Ordering::Relaxed);
        self.modeled_ns.fetch_add(modeled_ns, Ordering::Relaxed);
    }

    fn read(&self, name: &str, nominal_hz: f64) -> BlockCounters {
        let calls = self.calls.load(Ordering::Relaxed);
        let time_ns = self.time_ns.load(Ordering::Relaxed);
        let cycles = (time_ns as f64 * nominal_hz / 1e9).round() as u64;
        BlockCounters {
            name: name.to_string(),
            calls,
            items_in: self
                .items_in
                .iter()
                .map(|c| c.load(Ordering::Relaxed))
                .collect(),
            items_out: self
                .items_out
                .iter()
                .map(|c| c.load(Ordering::Relaxed))
                .collect(),
            time_ns,
            cycles,
            avg_cycles: if calls > 0 {
                cycles as f64 / calls as f64
            } else {
                0.0
            },
            modeled_ns: self.modeled_ns.load(Ordering::Relaxed),
        }
    }
}

/// Counter values of one block at snapshot time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockCounters {
    pub name: String,
    pub calls: u64,
    pub items_in: Vec<u64>,
    pub items_out: Vec<u64>,
    /// Host time inside `work`, excluding emulated-device time.
    pub time_ns: u64,
    /// `time_ns` scaled by the nominal clock.
    pub cycles: u64,
    pub avg_cycles: f64,
    /// Modeled accelerator time reported by the block.
    pub modeled_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterSnapshot {
    pub nominal_hz: f64,
    /// Nanoseconds since the Unix epoch.
    pub timestamp_ns: u128,
    pub blocks: Vec<BlockCounters>,
}

impl CounterSnapshot {
    pub fn block(&self, name: &str) -> Option<&BlockCounters> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn total_cycles(&self) -> u64 {
        self.blocks.iter().map(|b| b.cycles).sum()
    }

    pub fn is_all_zero(&self) -> bool {
        self.blocks.iter().all(|b| {
            b.calls == 0
                && b.time_ns == 0
                && b.cycles == 0
                && b.modeled_ns == 0
                && b.items_in.iter().all(|&v| v == 0)
                && b.items_out.iter().all(|&v| v == 0)
        })
    }
}

/// Cloneable read handle onto a graph's counters; usable from other threads
/// while the graph runs.
#[derive(Debug, Clone)]
pub struct CounterProbe {
    pub(crate) entries: Vec<(String, Arc<PerfCounters>)>,
    pub(crate) nominal_hz: Arc<AtomicU64>,
}

impl CounterProbe {
    pub fn snapshot(&self) -> CounterSnapshot {
        let nominal_hz = f64::from_bits(self.nominal_hz.load(Ordering::Relaxed));
        CounterSnapshot {
            nominal_hz,
            timestamp_ns: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_nanos())
                .unwrap_or(0),
            blocks: self
                .entries
                .iter()
                .map(|(name, c)| c.read(name, nominal_hz))
                .collect(),
        }
    }
}
