//! Binary sum tree over leaf priorities: O(log n) proportional lookup and
//! updates.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Nodes are stored 1-based: node `i` has children `2i` and `2i + 1`; leaves
/// occupy `[leaf_count, 2 * leaf_count)`. Parents are recomputed as the exact
/// sum of their children on every update.
#[derive(Clone, Debug)]
pub struct SumTree<S: Scalar> {
    leaf_count: usize,
    nodes: Vec<S>,
}

impl<S: Scalar> SumTree<S> {
    /// Tree with at least `capacity` leaves (rounded up to a power of two).
    pub fn new(capacity: usize) -> Self {
        let leaf_count = capacity.max(1).next_power_of_two();
        SumTree {
            leaf_count,
            nodes: vec![S::zero(); 2 * leaf_count],
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    /// Sum of all leaf values.
    pub fn total(&self) -> S {
        self.nodes[1]
    }

    pub fn get(&self, leaf: usize) -> S {
        self.nodes[self.leaf_count + leaf]
    }

    /// Set a leaf value and refresh the sums on its path to the root.
    pub fn set(&mut self, leaf: usize, value: S) -> Result<()> {
        if leaf >= self.leaf_count {
            return Err(Error::IndexOutOfRange {
                index: leaf,
                size: self.leaf_count,
            });
        }
        if !(value >= S::zero()) || !value.is_finite() {
            return Err(Error::invalid(format!("leaf value must be finite and >= 0, got {value}")));
        }
        let mut i = self.leaf_count + leaf;
        self.nodes[i] = value;
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
        Ok(())
    }

    /// Leaf whose half-open cumulative-priority interval contains `mass`.
    /// Requires 0 <= mass < total.
    pub fn lookup(&self, mass: S) -> Result<usize> {
        let root = self.total();
        if !(mass >= S::zero()) || mass >= root {
            return Err(Error::MassOutOfRange {
                mass: mass.to_f(),
                root: root.to_f(),
            });
        }
        let mut i = 1;
        let mut m = mass;
        while i < self.leaf_count {
            let left = 2 * i;
            if m < self.nodes[left] {
                i = left;
            } else {
                m = m - self.nodes[left];
                i = left + 1;
            }
        }
        let mut leaf = i - self.leaf_count;
        // Floating-point boundary drift can land on an empty leaf; fall back
        // to the nearest occupied one on the left.
        while leaf > 0 && self.nodes[self.leaf_count + leaf] == S::zero() {
            leaf -= 1;
        }
        Ok(leaf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree_from(leaves: &[f64]) -> SumTree<f64> {
        let mut t = SumTree::new(leaves.len());
        for (i, &v) in leaves.iter().enumerate() {
            t.set(i, v).unwrap();
        }
        t
    }

    #[test]
    fn root_is_sum_of_leaves() {
        let t = tree_from(&[1.0, 2.0, 3.0]);
        assert_eq!(t.total(), 6.0);
    }

    #[test]
    fn update_reflected_in_root() {
        let mut t = tree_from(&[1.0, 2.0, 3.0]);
        t.set(0, 5.0).unwrap();
        assert_eq!(t.total(), 10.0);
        // no-op update leaves the tree unchanged
        let before = t.nodes.clone();
        t.set(1, 2.0).unwrap();
        assert_eq!(t.nodes, before);
    }

    #[test]
    fn lookup_prefix_intervals() {
        // leaves [1,2,3,4]: intervals [0,1), [1,3), [3,6), [6,10)
        let t = tree_from(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(t.lookup(0.0).unwrap(), 0);
        assert_eq!(t.lookup(2.5).unwrap(), 1);
        assert_eq!(t.lookup(1.0).unwrap(), 1);
        assert_eq!(t.lookup(9.999).unwrap(), 3);
        assert!(t.lookup(10.0).is_err());
        assert!(t.lookup(-0.1).is_err());
    }

    #[test]
    fn lookup_skips_zero_leaves() {
        let t = tree_from(&[1.0, 0.0, 3.0]);
        assert_eq!(t.lookup(0.5).unwrap(), 0);
        assert_eq!(t.lookup(1.0).unwrap(), 2);
        assert_eq!(t.lookup(3.9).unwrap(), 2);
    }

    #[test]
    fn rejects_invalid_values() {
        let mut t = SumTree::<f64>::new(2);
        assert!(t.set(0, -1.0).is_err());
        assert!(t.set(0, f64::NAN).is_err());
        assert!(t.set(5, 1.0).is_err());
    }
}
