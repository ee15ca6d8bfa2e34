//! Fenwick tree over bond rates with O(log N) rate-proportional sampling.

/// Prefix-sum tree specialized to nonnegative f64 weights.
///
/// Indices are 0-based externally. The tree is padded to a power of two so
/// that weighted sampling can descend level by level.
#[derive(Debug, Clone)]
pub struct RateTree {
    size: usize,
    cap: usize,
    tree: Vec<f64>,
    values: Vec<f64>,
}

impl RateTree {
    pub fn new(values: Vec<f64>) -> Self {
        let size = values.len();
        let cap = size.next_power_of_two().max(1);
        let mut t = RateTree { size, cap, tree: vec![0.0; cap + 1], values: vec![0.0; size] };
        for (i, &v) in values.iter().enumerate() {
            t.set(i, v);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Set the weight at `i` to `v`.
    pub fn set(&mut self, i: usize, v: f64) {
        let delta = v - self.values[i];
        if delta == 0.0 {
            return;
        }
        self.values[i] = v;
        let mut idx = i + 1;
        while idx <= self.cap {
            self.tree[idx] += delta;
            idx += idx & idx.wrapping_neg();
        }
    }

    pub fn total(&self) -> f64 {
        self.prefix_sum(self.size)
    }

    /// Sum of weights with index < `len`.
    pub fn prefix_sum(&self, len: usize) -> f64 {
        let mut idx = len.min(self.size);
        let mut acc = 0.0;
        while idx > 0 {
            acc += self.tree[idx];
            idx -= idx & idx.wrapping_neg();
        }
        acc
    }

    /// Largest index whose prefix sum is <= `target`; assumes
    /// `0 <= target < total()`. Repeated float subtraction can land on a
    /// zero-weight slot, so the result is nudged to the nearest live one.
    pub fn sample(&self, target: f64) -> usize {
        let mut idx = 0usize; // 1-based node cursor
        let mut remaining = target;
        let mut half = self.cap;
        while half > 0 {
            let next = idx + half;
            if next <= self.cap && self.tree[next] <= remaining {
                remaining -= self.tree[next];
                idx = next;
            }
            half >>= 1;
        }
        let mut i = idx.min(self.size - 1);
        if self.values[i] <= 0.0 {
            // Rounding pushed us onto a dead bond: scan for a live neighbor.
            let fwd = (i + 1..self.size).find(|&j| self.values[j] > 0.0);
            i = fwd.or_else(|| (0..i).rev().find(|&j| self.values[j] > 0.0)).unwrap_or(i);
        }
        i
    }

    /// Recompute the tree from the stored values, clearing float drift.
    pub fn rebuild(&mut self) {
        let values = self.values.clone();
        *self = RateTree::new(values);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_sums_match_naive() {
        let vals = vec![2.0, 4.0, 1.0, 0.0, 1.25, 3.5, 0.0];
        let t = RateTree::new(vals.clone());
        let mut acc = 0.0;
        for (i, v) in vals.iter().enumerate() {
            assert!((t.prefix_sum(i) - acc).abs() < 1e-12);
            acc += v;
        }
        assert!((t.total() - acc).abs() < 1e-12);
    }

    #[test]
    fn sampling_hits_every_positive_slot() {
        let vals = vec![1.0, 0.0, 2.0, 0.5];
        let t = RateTree::new(vals);
        assert_eq!(t.sample(0.5), 0);
        assert_eq!(t.sample(1.5), 2);
        assert_eq!(t.sample(2.999), 2);
        assert_eq!(t.sample(3.2), 3);
    }

    #[test]
    fn updates_propagate() {
        let mut t = RateTree::new(vec![1.0; 8]);
        t.set(3, 0.0);
        t.set(5, 4.0);
        assert!((t.total() - 10.0).abs() < 1e-12);
        assert_eq!(t.sample(6.5), 5);
    }

    #[test]
    fn non_power_of_two_sizes() {
        let vals = vec![0.5, 0.5, 0.5, 0.5, 0.5, 0.5];
        let mut t = RateTree::new(vals);
        assert!((t.total() - 3.0).abs() < 1e-12);
        assert_eq!(t.sample(2.9), 5);
        t.rebuild();
        assert!((t.total() - 3.0).abs() < 1e-12);
    }
}
