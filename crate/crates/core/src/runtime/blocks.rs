//! General-purpose sources and sinks.

use super::block::{Block, BlockError, InputWindow, OutputWindow, WorkIo, WorkStatus};
use super::item::{Item, ItemKind, View};
use super::tag::Tag;
use std::sync::{Arc, Mutex};

/// Emits a fixed sequence of items, then finishes.
pub struct VectorSource<T: Item> {
    data: Vec<T>,
    kind: ItemKind,
    pos: usize,
    tags: Vec<Tag>,
}

impl<T: Item> VectorSource<T> {
    pub fn new(data: Vec<T>) -> Self {
        Self {
            data,
            kind: T::KIND,
            pos: 0,
            tags: Vec::new(),
        }
    }

    /// Source of fixed-arity vectors taken from a flat scalar sequence.
    pub fn vectors(data: Vec<T>, width: usize) -> Self
    where
        T: Item,
    {
        assert_eq!(T::KIND, ItemKind::Complex32, "only complex vectors exist");
        assert!(width >= 1 && data.len().is_multiple_of(width));
        Self {
            data,
            kind: ItemKind::ComplexVector(width),
            pos: 0,
            tags: Vec::new(),
        }
    }

    /// Adds tags to emit alongside the data (absolute item offsets).
    pub fn with_tags(mut self, mut tags: Vec<Tag>) -> Self {
        tags.sort_by_key(|t| t.offset);
        self.tags = tags;
        self
    }
}

impl<T: Item> Block for VectorSource<T> {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![self.kind]
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let out = &mut io.outputs[0];
        let w = out.width();
        let total = self.data.len() / w;
        let n = out.space().min(total - self.pos);
        let start = out.offset();
        out.push(&self.data[self.pos * w..(self.pos + n) * w]);
        let end = start + n as u64;
        while let Some(t) = self.tags.first() {
            if t.offset >= end {
                break;
            }
            let t = self.tags.remove(0);
            out.add_tag(t.offset, t.key, t.value);
        }
        self.pos += n;
        Ok(if self.pos == total {
            WorkStatus::Done
        } else {
            WorkStatus::Ok
        })
    }
}

/// Shared capture written by a [`VectorSink`].
#[derive(Debug, Clone)]
pub struct SinkHandle<T> {
    inner: Arc<Mutex<(Vec<T>, Vec<Tag>)>>,
}

impl<T: Clone> SinkHandle<T> {
    pub fn data(&self) -> Vec<T> {
        self.inner.lock().unwrap().0.clone()
    }

    pub fn tags(&self) -> Vec<Tag> {
        self.inner.lock().unwrap().1.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Records every item (and tag) it receives.
pub struct VectorSink<T: Item> {
    kind: ItemKind,
    inner: Arc<Mutex<(Vec<T>, Vec<Tag>)>>,
}

impl<T: Item> VectorSink<T> {
    pub fn new() -> (Self, SinkHandle<T>) {
        Self::with_kind(T::KIND)
    }

    pub fn vectors(width: usize) -> (Self, SinkHandle<T>) {
        Self::with_kind(ItemKind::ComplexVector(width))
    }

    fn with_kind(kind: ItemKind) -> (Self, SinkHandle<T>) {
        let inner = Arc::new(Mutex::new((Vec::new(), Vec::new())));
        (
            Self {
                kind,
                inner: inner.clone(),
            },
            SinkHandle { inner },
        )
    }
}

impl<T: Item> Block for VectorSink<T> {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![self.kind]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![]
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let input = &mut io.inputs[0];
        let mut guard = self.inner.lock().unwrap();
        guard.0.extend_from_slice(input.slice::<T>());
        guard.1.extend_from_slice(input.tags());
        input.consume(input.items());
        Ok(WorkStatus::Ok)
    }
}

/// Discards its input.
pub struct NullSink {
    kind: ItemKind,
}

impl NullSink {
    pub fn new(kind: ItemKind) -> Self {
        Self { kind }
    }
}

impl Block for NullSink {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![self.kind]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![]
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let n = io.inputs[0].items();
        io.inputs[0].consume(n);
        Ok(WorkStatus::Ok)
    }
}

/// Copies input to output unchanged, tags included.
pub struct PassThrough {
    kind: ItemKind,
}

impl PassThrough {
    pub fn new(kind: ItemKind) -> Self {
        Self { kind }
    }
}

impl Block for PassThrough {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![self.kind]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![self.kind]
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let n = input.items().min(out.space());
        copy_items(input, out, n);
        forward_tags(input, out, n);
        input.consume(n);
        Ok(WorkStatus::Ok)
    }
}

/// Copies the first `n` unconsumed items of `input` to the unproduced part of
/// `out` and marks them produced.
pub(crate) fn copy_items(input: &InputWindow<'_>, out: &mut OutputWindow<'_>, n: usize) {
    use num_complex::Complex32;
    let w = input.width();
    let start = input.consumed() * w;
    let range = start..start + n * w;
    match input.view {
        View::Complex(_) => out.push(&input.slice::<Complex32>()[range]),
        View::Real(_) => out.push(&input.slice::<f32>()[range]),
        View::Int(_) => out.push(&input.slice::<i32>()[range]),
        View::Byte(_) => out.push(&input.slice::<u8>()[range]),
    }
}

/// Re-attaches tags of the next `n` unconsumed input items at the matching
/// output positions (1:1 rate). Call before `consume`/after `copy_items`.
pub(crate) fn forward_tags(input: &InputWindow<'_>, out: &mut OutputWindow<'_>, n: usize) {
    let in_lo = input.offset() + input.consumed() as u64;
    let out_lo = out.offset() + (out.produced() - n) as u64;
    for t in input.tags() {
        if t.offset >= in_lo && t.offset < in_lo + n as u64 {
            out.add_tag(out_lo + (t.offset - in_lo), t.key.clone(), t.value.clone());
        }
    }
}
