//! Measurement reports over runtime counters: per-block utilization, edge
//! buffer occupancy, A/B comparison and JSON/CSV export.
//!
//! Cycles are derived from measured work time and the nominal clock carried
//! in every snapshot (`cycles = time_ns · nominal_hz / 1e9`).

mod export;

pub use export::{
    export_csv, export_json, parse_csv, parse_json, BlockRow, EdgeRow, ProfileDocument,
    CSV_HEADER, SCHEMA_VERSION,
};

use crate::runtime::{CounterSnapshot, RunReport};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfilerError {
    #[error("reports differ in names: only in A {only_a:?}, only in B {only_b:?}")]
    NameMismatch {
        only_a: Vec<String>,
        only_b: Vec<String>,
    },
    #[error("unknown block '{0}' in group")]
    UnknownBlock(String),
    #[error("block '{0}' appears in more than one group")]
    OverlappingGroups(String),
    #[error("malformed report: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationRow {
    pub name: String,
    pub calls: u64,
    pub time_ns: u64,
    pub cycles: u64,
    pub avg_cycles: f64,
    /// Share of total cycles, percent.
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationReport {
    pub nominal_hz: f64,
    pub total_cycles: u64,
    /// Set when nothing was measured; every share is then zero.
    pub zero_total: bool,
    /// Ordered by share descending, then name ascending.
    pub rows: Vec<UtilizationRow>,
}

impl UtilizationReport {
    pub fn row(&self, name: &str) -> Option<&UtilizationRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn pct_sum(&self) -> f64 {
        self.rows.iter().map(|r| r.pct).sum()
    }

    /// Fixed-width text table.
    pub fn render(&self) -> String {
        let mut s = format!(
            "{:<24} {:>10} {:>14} {:>16} {:>8}\n",
            "block", "calls", "time_ns", "cycles", "pct"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<24} {:>10} {:>14} {:>16} {:>7.2}%",
                r.name, r.calls, r.time_ns, r.cycles, r.pct
            );
        }
        let _ = writeln!(
            s,
            "total cycles {} at nominal {:.0} Hz (cycles = work time x nominal clock)",
            self.total_cycles, self.nominal_hz
        );
        s
    }
}

fn by_share(a: &UtilizationRow, b: &UtilizationRow) -> Ordering {
    b.pct
        .partial_cmp(&a.pct)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.name.cmp(&b.name))
}

fn finish(nominal_hz: f64, mut rows: Vec<UtilizationRow>) -> UtilizationReport {
    let total: u64 = rows.iter().map(|r| r.cycles).sum();
    for r in &mut rows {
        r.pct = if total > 0 {
            r.cycles as f64 * 100.0 / total as f64
        } else {
            0.0
        };
    }
    rows.sort_by(by_share);
    UtilizationReport {
        nominal_hz,
        total_cycles: total,
        zero_total: total == 0,
        rows,
    }
}

/// Cycle shares of every block in the snapshot.
pub fn utilization(snapshot: &CounterSnapshot) -> UtilizationReport {
    let rows = snapshot
        .blocks
        .iter()
        .map(|b| UtilizationRow {
            name: b.name.clone(),
            calls: b.calls,
            time_ns: b.time_ns,
            cycles: b.cycles,
            avg_cycles: b.avg_cycles,
            pct: 0.0,
        })
        .collect();
    finish(snapshot.nominal_hz, rows)
}

/// A set of blocks reported as one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub name: String,
    pub members: Vec<String>,
}

impl Group {
    pub fn new(name: impl Into<String>, members: &[&str]) -> Self {
        Self {
            name: name.into(),
            members: members.iter().map(|m| m.to_string()).collect(),
        }
    }
}

/// FFT and equalizer fused into one receiver stage.
pub fn receiver_groups() -> Vec<Group> {
    vec![Group::new("fft+equalizer", &["fft", "equalizer"])]
}

/// Like [`utilization`], with each group's members fused into one row.
/// Ungrouped blocks keep their own rows.
pub fn utilization_grouped(
    snapshot: &CounterSnapshot,
    groups: &[Group],
) -> Result<UtilizationReport, ProfilerError> {
    let mut seen = BTreeSet::new();
    for g in groups {
        for m in &g.members {
            if snapshot.block(m).is_none() {
                return Err(ProfilerError::UnknownBlock(m.clone()));
            }
            if !seen.insert(m.as_str()) {
                return Err(ProfilerError::OverlappingGroups(m.clone()));
            }
        }
    }
    let mut rows: Vec<UtilizationRow> = Vec::new();
    for g in groups {
        let members: Vec<_> = g.members.iter().filter_map(|m| snapshot.block(m)).collect();
        let calls = members.iter().map(|b| b.calls).sum();
        let cycles = members.iter().map(|b| b.cycles).sum();
        rows.push(UtilizationRow {
            name: g.name.clone(),
            calls,
            time_ns: members.iter().map(|b| b.time_ns).sum(),
            cycles,
            avg_cycles: if calls > 0 { cycles as f64 / calls as f64 } else { 0.0 },
            pct: 0.0,
        });
    }
    for b in snapshot.blocks.iter().filter(|b| !seen.contains(b.name.as_str())) {
        rows.push(UtilizationRow {
            name: b.name.clone(),
            calls: b.calls,
            time_ns: b.time_ns,
            cycles: b.cycles,
            avg_cycles: b.avg_cycles,
            pct: 0.0,
        });
    }
    Ok(finish(snapshot.nominal_hz, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferRow {
    pub name: String,
    pub capacity: usize,
    pub high_water: usize,
    /// `high_water / capacity · 100`.
    pub pct: f64,
    pub bytes_at_high_water: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferReport {
    /// In edge creation order.
    pub rows: Vec<BufferRow>,
}

impl BufferReport {
    pub fn row(&self, name: &str) -> Option<&BufferRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn total_bytes_at_high_water(&self) -> u64 {
        self.rows.iter().map(|r| r.bytes_at_high_water).sum()
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "{:<32} {:>10} {:>10} {:>8} {:>14}\n",
            "edge", "capacity", "high", "pct", "bytes"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<32} {:>10} {:>10} {:>7.2}% {:>14}",
                r.name, r.capacity, r.high_water, r.pct, r.bytes_at_high_water
            );
        }
        s
    }
}

/// High-water occupancy of every edge in a finished run.
pub fn buffers(run: &RunReport) -> BufferReport {
    BufferReport {
        rows: run
            .edges
            .iter()
            .map(|e| BufferRow {
                name: e.name.clone(),
                capacity: e.capacity,
                high_water: e.high_water,
                pct: if e.capacity > 0 {
                    e.high_water as f64 * 100.0 / e.capacity as f64
                } else {
                    0.0
                },
                bytes_at_high_water: (e.high_water * e.item_bytes) as u64,
            })
            .collect(),
    }
}

/// Counters and buffers of one run, the input to [`compare`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub counters: CounterSnapshot,
    pub buffers: BufferReport,
}

impl Profile {
    pub fn from_run(run: &RunReport) -> Self {
        Self {
            counters: run.counters.clone(),
            buffers: buffers(run),
        }
    }

    pub fn utilization(&self) -> UtilizationReport {
        utilization(&self.counters)
    }

    pub fn document(&self) -> ProfileDocument {
        ProfileDocument::new(&self.utilization(), &self.buffers)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Block,
    Edge,
}

/// One key of a comparison. Blocks compare cycles, edges compare bytes at
/// high water. `delta = b − a`, so negative means B is cheaper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub kind: RowKind,
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    /// `delta / a · 100`; `None` when `a` is zero.
    pub delta_pct: Option<f64>,
    /// Modeled accelerator time per side (blocks only).
    pub a_modeled_ns: u64,
    pub b_modeled_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<CompareRow>,
    pub total_cycles: CompareRow,
    pub total_buffer_bytes: CompareRow,
}

impl ComparisonReport {
    pub fn block(&self, name: &str) -> Option<&CompareRow> {
        self.rows
            .iter()
            .find(|r| r.kind == RowKind::Block && r.name == name)
    }

    pub fn edge(&self, name: &str) -> Option<&CompareRow> {
        self.rows
            .iter()
            .find(|r| r.kind == RowKind::Edge && r.name == name)
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "{:<6} {:<32} {:>16} {:>16} {:>16} {:>9} {:>14} {:>14}\n",
            "kind", "name", "a", "b", "delta", "delta%", "a_modeled_ns", "b_modeled_ns"
        );
        for r in self.rows.iter().chain([&self.total_cycles, &self.total_buffer_bytes]) {
            let pct = r
                .delta_pct
                .map_or_else(|| "-".to_string(), |p| format!("{p:.2}"));
            let kind = match r.kind {
                RowKind::Block => "block",
                RowKind::Edge => "edge",
            };
            let _ = writeln!(
                s,
                "{:<6} {:<32} {:>16.0} {:>16.0} {:>16.0} {:>9} {:>14} {:>14}",
                kind, r.name, r.a, r.b, r.delta, pct, r.a_modeled_ns, r.b_modeled_ns
            );
        }
        s
    }
}

fn row(kind: RowKind, name: &str, a: f64, b: f64, am: u64, bm: u64) -> CompareRow {
    let delta = b - a;
    CompareRow {
        kind,
        name: name.to_string(),
        a,
        b,
        delta,
        delta_pct: (a != 0.0).then(|| delta / a * 100.0),
        a_modeled_ns: am,
        b_modeled_ns: bm,
    }
}

fn check_names<'a>(
    a: impl Iterator<Item = &'a str>,
    b: impl Iterator<Item = &'a str>,
) -> Result<(), ProfilerError> {
    let a: BTreeSet<&str> = a.collect();
    let b: BTreeSet<&str> = b.collect();
    if a == b {
        return Ok(());
    }
    Err(ProfilerError::NameMismatch {
        only_a: a.difference(&b).map(|s| s.to_string()).collect(),
        only_b: b.difference(&a).map(|s| s.to_string()).collect(),
    })
}

/// Pairs every block and edge of two runs of the same graph. Rows follow
/// A's block order, then A's edge order.
pub fn compare(a: &Profile, b: &Profile) -> Result<ComparisonReport, ProfilerError> {
    check_names(
        a.counters.blocks.iter().map(|x| x.name.as_str()),
        b.counters.blocks.iter().map(|x| x.name.as_str()),
    )?;
    check_names(
        a.buffers.rows.iter().map(|x| x.name.as_str()),
        b.buffers.rows.iter().map(|x| x.name.as_str()),
    )?;
    let mut rows = Vec::new();
    for x in &a.counters.blocks {
        let y = b.counters.block(&x.name).expect("name sets checked");
        rows.push(row(
            RowKind::Block,
            &x.name,
            x.cycles as f64,
            y.cycles as f64,
            x.modeled_ns,
            y.modeled_ns,
        ));
    }
    for x in &a.buffers.rows {
        let y = b.buffers.row(&x.name).expect("name sets checked");
        rows.push(row(
            RowKind::Edge,
            &x.name,
            x.bytes_at_high_water as f64,
            y.bytes_at_high_water as f64,
            0,
            0,
        ));
    }
    let modeled = |p: &Profile| p.counters.blocks.iter().map(|x| x.modeled_ns).sum();
    Ok(ComparisonReport {
        rows,
        total_cycles: row(
            RowKind::Block,
            "total",
            a.counters.total_cycles() as f64,
            b.counters.total_cycles() as f64,
            modeled(a),
            modeled(b),
        ),
        total_buffer_bytes: row(
            RowKind::Edge,
            "total",
            a.buffers.total_bytes_at_high_water() as f64,
            b.buffers.total_bytes_at_high_water() as f64,
            0,
            0,
        ),
    })
}
