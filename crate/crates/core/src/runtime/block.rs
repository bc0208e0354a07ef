use super::item::{Item, ItemKind, View, ViewMut};
use super::tag::{Tag, TagValue};
use thiserror::Error;

/// Failure raised from inside a block's work function.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("{message}")]
pub struct BlockError {
    pub message: String,
}

impl BlockError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkStatus {
    /// Call again when inputs or output space change.
    Ok,
    /// The block will never produce again (sources: stream exhausted).
    Done,
}

/// A processing node. Port kinds are read once when the block is added to a
/// graph and never change afterwards.
pub trait Block: Send {
    fn input_kinds(&self) -> Vec<ItemKind>;
    fn output_kinds(&self) -> Vec<ItemKind>;

    /// Smallest input window (in items) the block can work with.
    fn min_input_items(&self, _port: usize) -> usize {
        1
    }

    /// Smallest output space (in items) the block needs to make progress.
    fn min_output_space(&self, _port: usize) -> usize {
        1
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError>;
}

/// Read-only view of the items available on one input port.
pub struct InputWindow<'a> {
    pub(crate) view: View<'a>,
    pub(crate) items: usize,
    pub(crate) width: usize,
    pub(crate) offset: u64,
    pub(crate) tags: &'a [Tag],
    pub(crate) eos: bool,
    pub(crate) consumed: usize,
}

impl<'a> InputWindow<'a> {
    /// Items offered in this window.
    pub fn items(&self) -> usize {
        self.items
    }

    /// Items offered and not yet consumed during this call.
    pub fn remaining(&self) -> usize {
        self.items - self.consumed
    }

    /// Absolute stream offset of the first offered item.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// True when upstream has finished and this window holds everything left.
    pub fn is_eos(&self) -> bool {
        self.eos
    }

    /// Scalar vector arity of each item.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Flat scalar slice: `items() * width()` elements.
    pub fn slice<T: Item>(&self) -> &'a [T] {
        T::from_view(self.view)
            .unwrap_or_else(|| panic!("input window is not {:?}", T::KIND))
    }

    /// Tags whose offsets fall inside the window, ascending by offset.
    pub fn tags(&self) -> &'a [Tag] {
        self.tags
    }

    pub fn consume(&mut self, items: usize) {
        assert!(
            self.consumed + items <= self.items,
            "consume({items}) past window of {} (already {})",
            self.items,
            self.consumed
        );
        self.consumed += items;
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }
}

/// Writable space on one output port.
pub struct OutputWindow<'a> {
    pub(crate) view: ViewMut<'a>,
    pub(crate) space: usize,
    pub(crate) width: usize,
    pub(crate) offset: u64,
    pub(crate) produced: usize,
    pub(crate) tags: Vec<Tag>,
}

impl<'a> OutputWindow<'a> {
    pub fn space(&self) -> usize {
        self.space
    }

    pub fn remaining(&self) -> usize {
        self.space - self.produced
    }

    /// Absolute stream offset of the first writable item.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Whole writable region: `space() * width()` scalars.
    pub fn slice_mut<T: Item>(&mut self) -> &mut [T] {
        let view = match &mut self.view {
            ViewMut::Complex(s) => ViewMut::Complex(s),
            ViewMut::Real(s) => ViewMut::Real(s),
            ViewMut::Int(s) => ViewMut::Int(s),
            ViewMut::Byte(s) => ViewMut::Byte(s),
        };
        T::from_view_mut(view).unwrap_or_else(|| panic!("output window is not {:?}", T::KIND))
    }

    /// Writes `items` (flat scalars) after what was already produced and
    /// commits them.
    pub fn push<T: Item>(&mut self, items: &[T]) {
        let w = self.width;
        assert_eq!(items.len() % w, 0, "partial vector item");
        let n = items.len() / w;
        assert!(n <= self.remaining(), "push past output space");
        let start = self.produced * w;
        self.slice_mut::<T>()[start..start + items.len()].copy_from_slice(items);
        self.produced += n;
    }

    pub fn produce(&mut self, items: usize) {
        assert!(
            self.produced + items <= self.space,
            "produce({items}) past space {} (already {})",
            self.space,
            self.produced
        );
        self.produced += items;
    }

    pub fn produced(&self) -> usize {
        self.produced
    }

    /// Attaches a tag at an absolute stream offset.
    pub fn add_tag(&mut self, offset: u64, key: impl Into<String>, value: TagValue) {
        self.tags.push(Tag::new(offset, key, value));
    }
}

/// Everything a block sees during one activation.
pub struct WorkIo<'a> {
    pub inputs: Vec<InputWindow<'a>>,
    pub outputs: Vec<OutputWindow<'a>>,
    pub(crate) excluded_ns: u64,
    pub(crate) modeled_ns: u64,
}

impl<'a> WorkIo<'a> {
    /// Reports device latency modeled during this call (offload time).
    pub fn record_modeled_ns(&mut self, ns: u64) {
        self.modeled_ns += ns;
    }

    /// Removes host time spent emulating a device from the block's
    /// measured work time.
    pub fn exclude_ns(&mut self, ns: u64) {
        self.excluded_ns += ns;
    }
}
