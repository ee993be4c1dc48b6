use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

use crate::units::Cost;

/// Frontier entry ordered by cost ascending, then depth descending, then
/// generation order.
#[derive(Debug)]
pub struct Entry<N> {
    pub cost: Cost,
    pub depth: u32,
    pub seq: u64,
    pub node: N,
}

impl<N> Entry<N> {
    fn rank(&self) -> (Cost, core::cmp::Reverse<u32>, u64) {
        (self.cost, core::cmp::Reverse(self.depth), self.seq)
    }
}

impl<N> PartialEq for Entry<N> {
    fn eq(&self, other: &Self) -> bool {
        self.rank() == other.rank()
    }
}

impl<N> Eq for Entry<N> {}

impl<N> PartialOrd for Entry<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<N> Ord for Entry<N> {
    // BinaryHeap is a max-heap; the best entry must compare greatest.
    fn cmp(&self, other: &Self) -> Ordering {
        other.rank().cmp(&self.rank())
    }
}

/// Min-priority queue of search nodes.
#[derive(Debug)]
pub struct Frontier<N> {
    heap: BinaryHeap<Entry<N>>,
}

impl<N> Default for Frontier<N> {
    fn default() -> Self {
        Frontier {
            heap: BinaryHeap::new(),
        }
    }
}

impl<N> Frontier<N> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, cost: Cost, depth: u32, seq: u64, node: N) {
        self.heap.push(Entry {
            cost,
            depth,
            seq,
            node,
        });
    }

    pub fn push_entry(&mut self, entry: Entry<N>) {
        self.heap.push(entry);
    }

    pub fn pop(&mut self) -> Option<Entry<N>> {
        self.heap.pop()
    }

    pub fn peek(&self) -> Option<&Entry<N>> {
        self.heap.peek()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn drain(&mut self) -> impl Iterator<Item = Entry<N>> + '_ {
        self.heap.drain()
    }
}
