//! Versioned JSON and fixed-column CSV forms of a profile.
//!
//! JSON: `{schema_version, nominal_hz, blocks:[{name, calls, time_ns,
//! cycles, pct}], edges:[{name, capacity, high_water, pct}]}`.
//! CSV columns: `kind,name,calls,time_ns,cycles,capacity,high_water,pct`;
//! block rows leave the edge columns empty and vice versa.
//! Percentages always carry exactly two decimals.

use super::{BufferReport, ProfilerError, UtilizationReport};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: [&str; 8] = [
    "kind",
    "name",
    "calls",
    "time_ns",
    "cycles",
    "capacity",
    "high_water",
    "pct",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BlockRow {
    pub name: String,
    pub calls: u64,
    pub time_ns: u64,
    pub cycles: u64,
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRow {
    pub name: String,
    pub capacity: usize,
    pub high_water: usize,
    pub pct: f64,
}

/// Canonical exported profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileDocument {
    pub schema_version: u32,
    pub nominal_hz: f64,
    pub blocks: Vec<BlockRow>,
    pub edges: Vec<EdgeRow>,
}

/// Rounds to the two decimals that will be written.
fn pct2(p: f64) -> f64 {
    format!("{p:.2}").parse().unwrap_or(0.0)
}

impl ProfileDocument {
    pub fn new(util: &UtilizationReport, buffers: &BufferReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            nominal_hz: util.nominal_hz,
            blocks: util
                .rows
                .iter()
                .map(|r| BlockRow {
                    name: r.name.clone(),
                    calls: r.calls,
                    time_ns: r.time_ns,
                    cycles: r.cycles,
                    pct: pct2(r.pct),
                })
                .collect(),
            edges: buffers
                .rows
                .iter()
                .map(|r| EdgeRow {
                    name: r.name.clone(),
                    capacity: r.capacity,
                    high_water: r.high_water,
                    pct: pct2(r.pct),
                })
                .collect(),
        }
    }

    pub fn empty(nominal_hz: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            nominal_hz,
            blocks: Vec::new(),
            edges: Vec::new(),
        }
    }
}

fn raw_pct(p: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{p:.2}")).expect("a decimal literal is valid JSON")
}

#[derive(Serialize)]
struct BlockOut<'a> {
    name: &'a str,
    calls: u64,
    time_ns: u64,
    cycles: u64,
    pct: Box<RawValue>,
}

#[derive(Serialize)]
struct EdgeOut<'a> {
    name: &'a str,
    capacity: usize,
    high_water: usize,
    pct: Box<RawValue>,
}

#[derive(Serialize)]
struct DocOut<'a> {
    schema_version: u32,
    nominal_hz: f64,
    blocks: Vec<BlockOut<'a>>,
    edges: Vec<EdgeOut<'a>>,
}

#[derive(Deserialize)]
struct BlockIn {
    name: String,
    calls: u64,
    time_ns: u64,
    cycles: u64,
    pct: f64,
}

#[derive(Deserialize)]
struct EdgeIn {
    name: String,
    capacity: usize,
    high_water: usize,
    pct: f64,
}

#[derive(Deserialize)]
struct DocIn {
    schema_version: u32,
    nominal_hz: f64,
    blocks: Vec<BlockIn>,
    edges: Vec<EdgeIn>,
}

pub fn export_json(doc: &ProfileDocument) -> String {
    let out = DocOut {
        schema_version: doc.schema_version,
        nominal_hz: doc.nominal_hz,
        blocks: doc
            .blocks
            .iter()
            .map(|b| BlockOut {
                name: &b.name,
                calls: b.calls,
                time_ns: b.time_ns,
                cycles: b.cycles,
                pct: raw_pct(b.pct),
            })
            .collect(),
        edges: doc
            .edges
            .iter()
            .map(|e| EdgeOut {
                name: &e.name,
                capacity: e.capacity,
                high_water: e.high_water,
                pct: raw_pct(e.pct),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&out).expect("profile serializes")
}

pub fn parse_json(text: &str) -> Result<ProfileDocument, ProfilerError> {
    let d: DocIn = serde_json::from_str(text).map_err(|e| ProfilerError::Format(e.to_string()))?;
    if d.schema_version != SCHEMA_VERSION {
        return Err(ProfilerError::Format(format!(
            "unsupported schema_version {}",
            d.schema_version
        )));
    }
    Ok(ProfileDocument {
        schema_version: d.schema_version,
        nominal_hz: d.nominal_hz,
        blocks: d
            .blocks
            .into_iter()
            .map(|b| BlockRow {
                name: b.name,
                calls: b.calls,
                time_ns: b.time_ns,
                cycles: b.cycles,
                pct: b.pct,
            })
            .collect(),
        edges: d
            .edges
            .into_iter()
            .map(|e| EdgeRow {
                name: e.name,
                capacity: e.capacity,
                high_water: e.high_water,
                pct: e.pct,
            })
            .collect(),
    })
}

pub fn export_csv(doc: &ProfileDocument) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| e.to_string();
    let mut write = || -> Result<(), String> {
        w.write_record(CSV_HEADER).map_err(io)?;
        for b in &doc.blocks {
            w.write_record([
                "block".to_string(),
                b.name.clone(),
                b.calls.to_string(),
                b.time_ns.to_string(),
                b.cycles.to_string(),
                String::new(),
                String::new(),
                format!("{:.2}", b.pct),
            ])
            .map_err(io)?;
        }
        for e in &doc.edges {
            w.write_record([
                "edge".to_string(),
                e.name.clone(),
                String::new(),
                String::new(),
                String::new(),
                e.capacity.to_string(),
                e.high_water.to_string(),
                format!("{:.2}", e.pct),
            ])
            .map_err(io)?;
        }
        Ok(())
    };
    write().expect("writing to memory cannot fail");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV output is UTF-8")
}

/// Parses [`export_csv`] output. CSV carries no clock, so `nominal_hz` is
/// taken from the caller.
pub fn parse_csv(text: &str, nominal_hz: f64) -> Result<ProfileDocument, ProfilerError> {
    let fmt = |m: String| ProfilerError::Format(m);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| fmt(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(fmt(format!("unexpected header {header:?}")));
    }
    let mut doc = ProfileDocument::empty(nominal_hz);
    for rec in r.records() {
        let rec = rec.map_err(|e| fmt(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<u64, ProfilerError> {
            field(i)
                .parse()
                .map_err(|_| fmt(format!("bad number '{}' in column {}", field(i), CSV_HEADER[i])))
        };
        let pct: f64 = field(7)
            .parse()
            .map_err(|_| fmt(format!("bad pct '{}'", field(7))))?;
        match field(0) {
            "block" => doc.blocks.push(BlockRow {
                name: field(1).to_string(),
                calls: num(2)?,
                time_ns: num(3)?,
                cycles: num(4)?,
                pct,
            }),
            "edge" => doc.edges.push(EdgeRow {
                name: field(1).to_string(),
                capacity: num(5)? as usize,
                high_water: num(6)? as usize,
                pct,
            }),
            other => return Err(fmt(format!("unknown row kind '{other}'"))),
        }
    }
    Ok(doc)
}
