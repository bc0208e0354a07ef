use super::item::{ItemKind, Storage, View, ViewMut};
use super::tag::Tag;
use std::collections::VecDeque;

/// Bounded single-producer single-consumer item buffer.
///
/// Items live in a linear store twice the capacity long; readable data is
/// always contiguous and is compacted to the front when the writer would run
/// past the end. `read` and `write` count items since creation.
#[derive(Debug)]
pub struct RingBuffer {
    kind: ItemKind,
    capacity: usize,
    width: usize,
    storage: Storage,
    head: usize,
    read: u64,
    write: u64,
    high_water: usize,
    tags: VecDeque<Tag>,
}

impl RingBuffer {
    /// `capacity` is rounded up to a power of two (minimum 1).
    pub fn new(kind: ItemKind, capacity: usize) -> Self {
        let capacity = capacity.max(1).next_power_of_two();
        let width = kind.width();
        Self {
            kind,
            capacity,
            width,
            storage: Storage::new(kind.scalar(), 2 * capacity * width),
            head: 0,
            read: 0,
            write: 0,
            high_water: 0,
            tags: VecDeque::new(),
        }
    }

    pub fn kind(&self) -> ItemKind {
        self.kind
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn occupancy(&self) -> usize {
        (self.write - self.read) as usize
    }

    pub fn space(&self) -> usize {
        self.capacity - self.occupancy()
    }

    pub fn high_water(&self) -> usize {
        self.high_water
    }

    pub fn items_written(&self) -> u64 {
        self.write
    }

    pub fn items_read(&self) -> u64 {
        self.read
    }

    pub(crate) fn read_view(&self, items: usize) -> View<'_> {
        debug_assert!(items <= self.occupancy());
        let start = self.head * self.width;
        self.storage.view(start..start + items * self.width)
    }

    pub(crate) fn make_tags_contiguous(&mut self) {
        self.tags.make_contiguous();
    }

    /// Tags inside `[read, read + items)`; call `make_tags_contiguous` first.
    pub(crate) fn peek_tags(&self, items: usize) -> &[Tag] {
        let end = self.read + items as u64;
        let (tags, rest) = self.tags.as_slices();
        debug_assert!(rest.is_empty());
        let n = tags.partition_point(|t| t.offset < end);
        &tags[..n]
    }

    #[cfg(test)]
    fn read_tags(&mut self, items: usize) -> &[Tag] {
        self.make_tags_contiguous();
        self.peek_tags(items)
    }

    pub(crate) fn write_view(&mut self, items: usize) -> ViewMut<'_> {
        debug_assert!(items <= self.space());
        let occ = self.occupancy();
        if self.head + occ + items > 2 * self.capacity {
            let w = self.width;
            self.storage
                .copy_within(self.head * w..(self.head + occ) * w, 0);
            self.head = 0;
        }
        let start = (self.head + occ) * self.width;
        self.storage.view_mut(start..start + items * self.width)
    }

    /// Commits `items` written through the last `write_view`, plus tags
    /// (absolute offsets, must fall inside the committed range).
    pub(crate) fn commit_write(&mut self, items: usize, mut tags: Vec<Tag>) {
        debug_assert!(items <= self.space());
        tags.sort_by_key(|t| t.offset);
        self.write += items as u64;
        self.tags.extend(tags);
        self.high_water = self.high_water.max(self.occupancy());
    }

    pub(crate) fn consume(&mut self, items: usize) {
        debug_assert!(items <= self.occupancy());
        self.read += items as u64;
        self.head += items;
        if self.read == self.write {
            self.head = 0;
        }
        while self.tags.front().is_some_and(|t| t.offset < self.read) {
            self.tags.pop_front();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex32;

    fn push(buf: &mut RingBuffer, vals: &[f32]) {
        match buf.write_view(vals.len()) {
            ViewMut::Real(s) => s.copy_from_slice(vals),
            _ => unreachable!(),
        }
        buf.commit_write(vals.len(), vec![]);
    }

    fn peek(buf: &RingBuffer, n: usize) -> Vec<f32> {
        match buf.read_view(n) {
            View::Real(s) => s.to_vec(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn capacity_rounds_to_power_of_two() {
        assert_eq!(RingBuffer::new(ItemKind::Real32, 4096).capacity(), 4096);
        assert_eq!(RingBuffer::new(ItemKind::Real32, 1000).capacity(), 1024);
        assert_eq!(RingBuffer::new(ItemKind::Real32, 0).capacity(), 1);
    }

    #[test]
    fn compaction_keeps_data_contiguous() {
        let mut buf = RingBuffer::new(ItemKind::Real32, 4);
        let mut next = 0.0f32;
        let mut expect = VecDeque::new();
        for round in 0..50 {
            let n = 1 + round % buf.space().max(1);
            let n = n.min(buf.space());
            let vals: Vec<f32> = (0..n).map(|i| next + i as f32).collect();
            next += n as f32;
            push(&mut buf, &vals);
            expect.extend(vals);
            let take = (round % 3).min(buf.occupancy());
            let got = peek(&buf, buf.occupancy());
            assert_eq!(got, expect.iter().copied().collect::<Vec<_>>());
            buf.consume(take);
            for _ in 0..take {
                expect.pop_front();
            }
            assert!(buf.occupancy() <= buf.capacity());
        }
        assert!(buf.high_water() <= 4);
    }

    #[test]
    fn vector_items_count_once() {
        let mut buf = RingBuffer::new(ItemKind::ComplexVector(3), 2);
        match buf.write_view(2) {
            ViewMut::Complex(s) => {
                assert_eq!(s.len(), 6);
                s[5] = Complex32::new(5.0, 0.0);
            }
            _ => unreachable!(),
        }
        buf.commit_write(2, vec![]);
        assert_eq!(buf.occupancy(), 2);
        assert_eq!(buf.space(), 0);
    }

    #[test]
    fn tags_are_dropped_once_consumed() {
        use super::super::tag::TagValue;
        let mut buf = RingBuffer::new(ItemKind::Real32, 8);
        let _ = buf.write_view(4);
        buf.commit_write(
            4,
            vec![
                Tag::new(3, "b", TagValue::U64(1)),
                Tag::new(1, "a", TagValue::U64(0)),
            ],
        );
        assert_eq!(buf.read_tags(2).len(), 1);
        assert_eq!(buf.read_tags(4)[1].key, "b");
        buf.consume(2);
        assert_eq!(buf.read_tags(2).len(), 1);
        buf.consume(2);
        assert!(buf.read_tags(0).is_empty());
    }
}
