use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::scalarize::BoxCorners;

/// Exploration method attached to a box by the mixed algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Weighted sum restricted to the open box.
    Hybrid,
    /// Augmented weighted Tchebycheff.
    Tchebycheff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueuedBox {
    pub corners: BoxCorners,
    pub tag: Option<Method>,
}

impl QueuedBox {
    pub fn new(corners: BoxCorners) -> Self {
        QueuedBox { corners, tag: None }
    }

    pub fn tagged(corners: BoxCorners, tag: Method) -> Self {
        QueuedBox { corners, tag: Some(tag) }
    }
}

/// Extraction order of a [`BoxQueue`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Discipline {
    /// Largest area first, FIFO among equal areas.
    LargestArea,
    /// Largest squared diagonal first, FIFO among ties.
    LargestDiagonal,
    /// Most recently pushed first.
    DepthFirst,
}

impl Discipline {
    pub fn priority(&self, b: &BoxCorners) -> i128 {
        match self {
            Discipline::LargestArea => b.area(),
            Discipline::LargestDiagonal => b.diagonal_sq(),
            Discipline::DepthFirst => 0,
        }
    }
}

struct Entry {
    priority: i128,
    seq: u64,
    item: QueuedBox,
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.cmp(&other.priority).then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

/// Boxes awaiting exploration. Boxes without integer interior are refused.
pub struct BoxQueue {
    discipline: Discipline,
    heap: BinaryHeap<Entry>,
    stack: Vec<QueuedBox>,
    seq: u64,
}

impl BoxQueue {
    pub fn new(discipline: Discipline) -> Self {
        BoxQueue { discipline, heap: BinaryHeap::new(), stack: Vec::new(), seq: 0 }
    }

    pub fn discipline(&self) -> Discipline {
        self.discipline
    }

    /// Enqueues the box if it can hold an integer point; returns whether it did.
    pub fn push(&mut self, item: QueuedBox) -> bool {
        if !item.corners.has_interior() {
            return false;
        }
        match self.discipline {
            Discipline::DepthFirst => self.stack.push(item),
            d => {
                self.seq += 1;
                self.heap.push(Entry { priority: d.priority(&item.corners), seq: self.seq, item });
            }
        }
        true
    }

    pub fn pop(&mut self) -> Option<QueuedBox> {
        match self.discipline {
            Discipline::DepthFirst => self.stack.pop(),
            _ => self.heap.pop().map(|e| e.item),
        }
    }

    /// Highest priority currently queued.
    pub fn peek_priority(&self) -> Option<i128> {
        match self.discipline {
            Discipline::DepthFirst => self.stack.last().map(|_| 0),
            _ => self.heap.peek().map(|e| e.priority),
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len() + self.stack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Point;
    use proptest::prelude::*;

    fn bx(a: i64, b: i64, c: i64, d: i64) -> QueuedBox {
        QueuedBox::new(BoxCorners::new(Point::new(a, b), Point::new(c, d)).unwrap())
    }

    #[test]
    fn refuses_boxes_without_interior() {
        let mut q = BoxQueue::new(Discipline::LargestArea);
        assert!(!q.push(bx(0, 1, 5, 0)));
        assert!(!q.push(bx(0, 5, 1, 0)));
        assert!(q.push(bx(0, 2, 2, 0)));
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn area_ties_are_fifo() {
        let mut q = BoxQueue::new(Discipline::LargestArea);
        let first = bx(0, 4, 3, 0);
        let second = bx(10, 3, 14, 0);
        let big = bx(0, 10, 10, 0);
        q.push(first);
        q.push(second);
        q.push(big);
        assert_eq!(q.pop(), Some(big));
        assert_eq!(q.pop(), Some(first));
        assert_eq!(q.pop(), Some(second));
        assert_eq!(q.pop(), None);
    }

    #[test]
    fn diagonal_and_depth_first() {
        let mut q = BoxQueue::new(Discipline::LargestDiagonal);
        let thin = bx(0, 2, 20, 0); // area 40, diagonal² 404
        let square = bx(0, 7, 7, 0); // area 49, diagonal² 98
        q.push(square);
        q.push(thin);
        assert_eq!(q.pop(), Some(thin));

        let mut s = BoxQueue::new(Discipline::DepthFirst);
        s.push(square);
        s.push(thin);
        assert_eq!(s.pop(), Some(thin));
        assert_eq!(s.pop(), Some(square));
    }

    proptest! {
        #[test]
        fn extraction_is_maximal(sizes in proptest::collection::vec((2i64..30, 2i64..30), 1..40)) {
            let mut q = BoxQueue::new(Discipline::LargestArea);
            for (w, h) in &sizes {
                q.push(bx(0, *h, *w, 0));
            }
            let mut last = i128::MAX;
            while let Some(b) = q.pop() {
                let a = b.corners.area();
                prop_assert!(a <= last);
                if let Some(rest) = q.peek_priority() {
                    prop_assert!(a >= rest);
                }
                last = a;
            }
        }
    }
}
