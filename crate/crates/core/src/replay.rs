//! FIFO replay buffer of exploration batches.

use std::collections::VecDeque;

use crate::sample::{EvalPoint, ExplorationBatch};

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    batches: VecDeque<ExplorationBatch>,
    capacity: usize,
}

impl ReplayBuffer {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        Self {
            batches: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Appends `batch` as the newest entry, evicting the oldest one when full.
    /// Empty batches are ignored.
    pub fn push_batch(&mut self, batch: ExplorationBatch) {
        if batch.is_empty() {
            return;
        }
        if self.batches.len() == self.capacity {
            self.batches.pop_front();
        }
        self.batches.push_back(batch);
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn clear(&mut self) {
        self.batches.clear();
    }

    pub fn batches(&self) -> impl ExactSizeIterator<Item = &ExplorationBatch> + '_ {
        self.batches.iter()
    }

    pub fn batches_mut(&mut self) -> impl Iterator<Item = &mut ExplorationBatch> + '_ {
        self.batches.iter_mut()
    }

    pub fn total_points(&self) -> usize {
        self.batches.iter().map(|b| b.len()).sum()
    }

    pub fn points(&self) -> impl Iterator<Item = &EvalPoint> + '_ {
        self.batches.iter().flat_map(|b| b.points.iter())
    }

    /// Number of ordered within-batch pairs `(i, j)`, `i != j`.
    pub fn pair_count(&self) -> usize {
        self.batches
            .iter()
            .map(|b| b.len() * b.len().saturating_sub(1))
            .sum()
    }

    /// All ordered pairs `(i, j)` with `i != j` taken from the same batch.
    /// Points of different batches are never paired.
    pub fn all_pairs_within_batches(&self) -> impl Iterator<Item = (&EvalPoint, &EvalPoint)> + '_ {
        self.batches.iter().flat_map(|b| {
            let pts = &b.points;
            (0..pts.len()).flat_map(move |i| {
                (0..pts.len())
                    .filter(move |&j| j != i)
                    .map(move |j| (&pts[i], &pts[j]))
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::PointKind;

    fn batch(tag: f64, size: usize) -> ExplorationBatch {
        let mut b = ExplorationBatch::new(vec![tag], 1.0);
        for i in 0..size {
            b.push(
                EvalPoint::new(vec![tag + i as f64 * 0.1], tag).unwrap(),
                PointKind::Box,
            );
        }
        b
    }

    #[test]
    fn fifo_eviction() {
        let mut rb = ReplayBuffer::new(2);
        for tag in [1.0, 2.0, 3.0] {
            rb.push_batch(batch(tag, 2));
        }
        let centers: Vec<f64> = rb.batches().map(|b| b.center[0]).collect();
        assert_eq!(centers, vec![2.0, 3.0]);
    }

    #[test]
    fn capacity_one_holds_latest() {
        let mut rb = ReplayBuffer::new(1);
        rb.push_batch(batch(1.0, 2));
        rb.push_batch(batch(5.0, 2));
        assert_eq!(rb.len(), 1);
        assert_eq!(rb.batches().next().unwrap().center, vec![5.0]);
    }

    #[test]
    fn push_to_empty() {
        let mut rb = ReplayBuffer::new(4);
        rb.push_batch(batch(1.0, 3));
        assert_eq!(rb.len(), 1);
    }

    #[test]
    fn pair_enumeration() {
        let mut rb = ReplayBuffer::new(4);
        rb.push_batch(batch(1.0, 3));
        assert_eq!(rb.all_pairs_within_batches().count(), 6);

        let mut rb = ReplayBuffer::new(4);
        rb.push_batch(batch(1.0, 2));
        rb.push_batch(batch(10.0, 2));
        let pairs: Vec<_> = rb.all_pairs_within_batches().collect();
        assert_eq!(pairs.len(), 4);
        // Every pair shares its batch tag (stored in y).
        assert!(pairs.iter().all(|(a, b)| a.y == b.y));

        let mut rb = ReplayBuffer::new(4);
        rb.push_batch(batch(1.0, 1));
        assert_eq!(rb.all_pairs_within_batches().count(), 0);
        assert_eq!(rb.pair_count(), 0);
    }

    #[test]
    fn empty_buffer_has_no_pairs() {
        let rb = ReplayBuffer::new(3);
        assert_eq!(rb.all_pairs_within_batches().count(), 0);
    }

    proptest::proptest! {
        #[test]
        fn never_exceeds_capacity(cap in 1usize..6, sizes in proptest::collection::vec(1usize..5, 0..20)) {
            let mut rb = ReplayBuffer::new(cap);
            for (k, s) in sizes.iter().enumerate() {
                rb.push_batch(batch(k as f64, *s));
                proptest::prop_assert!(rb.len() <= cap);
                proptest::prop_assert!(rb.total_points() <= cap * 4);
            }
            // Retained batches are exactly the newest ones, in order.
            let expected: Vec<f64> = (0..sizes.len()).rev().take(cap).rev().map(|k| k as f64).collect();
            let got: Vec<f64> = rb.batches().map(|b| b.center[0]).collect();
            proptest::prop_assert_eq!(got, expected);
        }
    }
}
