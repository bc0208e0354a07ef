//! Block flow-graph runtime: typed ports, bounded SPSC edge buffers, a
//! round-robin scheduler that can spread blocks over several workers, and
//! per-block performance counters.
//!
//! A block only ever sees windows: the items currently readable on each input
//! and the space currently writable on each output. It reports how much it
//! consumed and produced; the scheduler commits that and moves on.

mod block;
mod blocks;
mod buffer;
mod counters;
mod graph;
mod item;
mod tag;

pub use block::{Block, BlockError, InputWindow, OutputWindow, WorkIo, WorkStatus};
pub(crate) use blocks::{copy_items, forward_tags};
pub use blocks::{NullSink, PassThrough, SinkHandle, VectorSink, VectorSource};
pub use buffer::RingBuffer;
pub use counters::{BlockCounters, CounterProbe, CounterSnapshot, PerfCounters, DEFAULT_NOMINAL_HZ};
pub use graph::{
    BlockId, EdgeId, EdgeReport, FlowGraph, GraphError, RunConfig, RunReport, RuntimeError,
    Termination, ValidationIssue, ValidationReport, DEFAULT_BUFFER_ITEMS,
};
pub use item::{Item, ItemKind, View, ViewMut};
pub use tag::{Tag, TagValue};

#[cfg(test)]
mod tests;
