//! Dynamic weighted index: O(log n) draw, single-entry update and append.
//!
//! A complete binary sum tree stored in an array; leaves live at
//! `[capacity, 2 * capacity)`. Capacity doubles when full.

use rand::Rng;

#[derive(Debug, Clone)]
pub struct SumTree {
    capacity: usize,
    len: usize,
    storage: Vec<f64>,
}

impl Default for SumTree {
    fn default() -> Self {
        Self::with_capacity(1)
    }
}

impl SumTree {
    pub fn with_capacity(capacity: usize) -> Self {
        let capacity = capacity.max(1).next_power_of_two();
        SumTree {
            capacity,
            len: 0,
            storage: vec![0.0; 2 * capacity],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn total(&self) -> f64 {
        self.storage[1]
    }

    pub fn get(&self, index: usize) -> f64 {
        assert!(index < self.len);
        self.storage[self.capacity + index]
    }

    pub fn push(&mut self, weight: f64) -> usize {
        if self.len == self.capacity {
            self.grow();
        }
        let index = self.len;
        self.len += 1;
        self.set(index, weight);
        index
    }

    pub fn set(&mut self, index: usize, weight: f64) {
        assert!(index < self.len, "index {index} out of bounds");
        debug_assert!(weight >= 0.0 && weight.is_finite());
        let mut node = self.capacity + index;
        self.storage[node] = weight;
        while node > 1 {
            node /= 2;
            self.storage[node] = self.storage[2 * node] + self.storage[2 * node + 1];
        }
    }

    fn grow(&mut self) {
        let old = self.capacity;
        let capacity = old * 2;
        let mut storage = vec![0.0; 2 * capacity];
        storage[capacity..capacity + old].copy_from_slice(&self.storage[old..2 * old]);
        for node in (1..capacity).rev() {
            storage[node] = storage[2 * node] + storage[2 * node + 1];
        }
        self.capacity = capacity;
        self.storage = storage;
    }

    /// Index whose cumulative weight interval contains `target`, for
    /// `target` in `[0, total)`. Never lands on a zero-weight leaf.
    pub fn find(&self, mut target: f64) -> usize {
        let mut node = 1;
        while node < self.capacity {
            let left = self.storage[2 * node];
            let right = self.storage[2 * node + 1];
            if (target < left && left > 0.0) || right <= 0.0 {
                node *= 2;
            } else {
                target -= left;
                node = 2 * node + 1;
            }
        }
        node - self.capacity
    }

    /// Draws an index with probability proportional to its weight.
    /// Returns `None` when every weight is zero.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        let total = self.total();
        if total <= 0.0 {
            return None;
        }
        let target = rng.random::<f64>() * total;
        Some(self.find(target))
    }

    /// Exact recomputation of every internal node from the leaves.
    pub fn rebuild(&mut self) {
        for node in (1..self.capacity).rev() {
            self.storage[node] = self.storage[2 * node] + self.storage[2 * node + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn totals_track_updates() {
        let mut tree = SumTree::default();
        assert_eq!(tree.total(), 0.0);
        for i in 0..10 {
            tree.push(i as f64);
        }
        assert_eq!(tree.total(), 45.0);
        tree.set(3, 10.0);
        assert_eq!(tree.total(), 52.0);
        assert_eq!(tree.get(3), 10.0);
    }

    #[test]
    fn find_maps_prefix_sums() {
        let mut tree = SumTree::default();
        for w in [1.0, 0.0, 2.0, 3.0] {
            tree.push(w);
        }
        assert_eq!(tree.find(0.5), 0);
        assert_eq!(tree.find(1.0), 2);
        assert_eq!(tree.find(2.99), 2);
        assert_eq!(tree.find(3.0), 3);
        assert_eq!(tree.find(5.999), 3);
    }

    #[test]
    fn never_draws_zero_weight() {
        let mut tree = SumTree::default();
        for i in 0..100 {
            tree.push(if i % 3 == 0 { 0.0 } else { 1e-3 * i as f64 });
        }
        let mut rng = stream(4);
        for _ in 0..100_000 {
            let i = tree.sample(&mut rng).unwrap();
            assert!(tree.get(i) > 0.0);
        }
        assert_eq!(tree.find(tree.total()), 98);
    }

    #[test]
    fn all_zero_yields_none() {
        let mut tree = SumTree::default();
        tree.push(0.0);
        tree.push(0.0);
        let mut rng = stream(1);
        assert_eq!(tree.sample(&mut rng), None);
    }
}
