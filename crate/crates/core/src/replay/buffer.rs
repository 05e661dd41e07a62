//! Fixed-capacity sliding-window replay buffers: a plain uniform ring and the
//! prioritized buffer with proportional sampling and annealed
//! importance-sampling weights.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::replay::sum_tree::SumTree;
use crate::scalar::Scalar;

/// Importance-sampling exponent schedule: linear from `start` to `end` over
/// `anneal_steps`, then fixed at `end`.
#[derive(Clone, Copy, Debug)]
pub struct BetaSchedule<S: Scalar> {
    pub start: S,
    pub end: S,
    pub anneal_steps: u64,
}

impl<S: Scalar> Default for BetaSchedule<S> {
    fn default() -> Self {
        BetaSchedule {
            start: S::from_f(0.4),
            end: S::one(),
            anneal_steps: 40_000,
        }
    }
}

impl<S: Scalar> BetaSchedule<S> {
    pub fn beta_at(&self, step: u64) -> S {
        if self.anneal_steps == 0 || step >= self.anneal_steps {
            return self.end;
        }
        let frac = S::from_f(step as f64) / S::from_f(self.anneal_steps as f64);
        self.start + (self.end - self.start) * frac
    }
}

/// p = |error| + epsilon: keeps every stored priority positive.
pub fn priority_from_error<S: Scalar>(error: S, epsilon: S) -> Result<S> {
    if epsilon <= S::zero() {
        return Err(Error::invalid(format!("epsilon must be > 0, got {epsilon}")));
    }
    Ok(error.abs() + epsilon)
}

/// p = screener weight + epsilon, for sampling driven by the screener output.
pub fn priority_from_screener<S: Scalar>(weight: S, epsilon: S) -> Result<S> {
    if epsilon <= S::zero() {
        return Err(Error::invalid(format!("epsilon must be > 0, got {epsilon}")));
    }
    if weight <= S::zero() || weight >= S::one() {
        return Err(Error::invalid(format!(
            "screener weight must lie strictly in (0, 1), got {weight}"
        )));
    }
    Ok(weight + epsilon)
}

#[derive(Clone, Debug)]
pub struct ReplayConfig<S: Scalar> {
    pub capacity: usize,
    /// Prioritization exponent: sampling mass is priority^alpha.
    pub alpha: S,
    /// Additive floor applied by the priority helpers.
    pub epsilon: S,
    pub beta: BetaSchedule<S>,
}

impl<S: Scalar> Default for ReplayConfig<S> {
    fn default() -> Self {
        ReplayConfig {
            capacity: 50_000,
            alpha: S::from_f(0.6),
            epsilon: S::from_f(0.01),
            beta: BetaSchedule::default(),
        }
    }
}

/// One prioritized sample of `batch` items.
#[derive(Clone, Debug)]
pub struct PrioritizedBatch<T, S: Scalar> {
    pub items: Vec<T>,
    pub indices: Vec<usize>,
    /// Exact selection probability of each drawn item.
    pub probabilities: Vec<S>,
    /// Max-normalized importance-sampling weights; the batch maximum is
    /// exactly 1.
    pub is_weights: Vec<S>,
}

/// Sliding-window buffer indexed by a sum tree over priority^alpha. Slot `i`
/// of the ring maps to leaf `i` of the tree; a parallel max-tree tracks the
/// largest raw priority currently stored.
#[derive(Clone, Debug)]
pub struct PrioritizedBuffer<T, S: Scalar> {
    cfg: ReplayConfig<S>,
    items: Vec<T>,
    raw_priority: Vec<S>,
    tree: SumTree<S>,
    max_nodes: Vec<S>,
    write: usize,
    size: usize,
}

impl<T: Clone, S: Scalar> PrioritizedBuffer<T, S> {
    pub fn new(cfg: ReplayConfig<S>) -> Self {
        let leaf_count = cfg.capacity.max(1).next_power_of_two();
        PrioritizedBuffer {
            tree: SumTree::new(cfg.capacity),
            max_nodes: vec![S::zero(); 2 * leaf_count],
            items: Vec::with_capacity(cfg.capacity),
            raw_priority: vec![S::zero(); cfg.capacity],
            cfg,
            write: 0,
            size: 0,
        }
    }

    pub fn config(&self) -> &ReplayConfig<S> {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn capacity(&self) -> usize {
        self.cfg.capacity
    }

    pub fn get(&self, index: usize) -> &T {
        &self.items[index]
    }

    /// Largest raw priority currently stored; 1 for an empty buffer so that
    /// the first item enters with a sane default.
    pub fn max_priority(&self) -> S {
        if self.size == 0 {
            S::one()
        } else {
            self.max_nodes[1]
        }
    }

    fn set_priority(&mut self, slot: usize, priority: S) -> Result<()> {
        if !(priority > S::zero()) || !priority.is_finite() {
            return Err(Error::invalid(format!(
                "priority must be finite and > 0, got {priority}"
            )));
        }
        self.raw_priority[slot] = priority;
        self.tree.set(slot, priority.powf(self.cfg.alpha))?;
        let leaf_count = self.tree.leaf_count();
        let mut i = leaf_count + slot;
        self.max_nodes[i] = priority;
        while i > 1 {
            i /= 2;
            self.max_nodes[i] = self.max_nodes[2 * i].max(self.max_nodes[2 * i + 1]);
        }
        Ok(())
    }

    /// Store an item with the given priority, evicting the oldest entry once
    /// the window is full. Returns the slot used.
    pub fn push(&mut self, item: T, priority: S) -> Result<usize> {
        let slot = self.write;
        if self.size < self.cfg.capacity {
            self.items.push(item);
        } else {
            self.items[slot] = item;
        }
        self.set_priority(slot, priority)?;
        self.write = (self.write + 1) % self.cfg.capacity;
        self.size = (self.size + 1).min(self.cfg.capacity);
        Ok(slot)
    }

    /// Store an item at the current maximum priority, the convention that
    /// guarantees new entries are sampled at least once before their error is
    /// known.
    pub fn push_with_max(&mut self, item: T) -> Result<usize> {
        let p = self.max_priority();
        self.push(item, p)
    }

    /// Replace the priorities at `indices`.
    pub fn update_priorities(&mut self, indices: &[usize], priorities: &[S]) -> Result<()> {
        if indices.len() != priorities.len() {
            return Err(Error::LengthMismatch {
                what: "indices vs priorities",
                left: indices.len(),
                right: priorities.len(),
            });
        }
        for (&i, &p) in indices.iter().zip(priorities) {
            if i >= self.size {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    size: self.size,
                });
            }
            self.set_priority(i, p)?;
        }
        Ok(())
    }

    /// Exact selection probability of slot `index` under the current
    /// priorities: priority^alpha / sum.
    pub fn probability(&self, index: usize) -> S {
        self.tree.get(index) / self.tree.total()
    }

    /// Stratified proportional sample: the total mass is split into `batch`
    /// equal segments with one uniform draw each, mapped through the tree.
    /// `step` selects the annealed beta for the IS weights.
    pub fn sample_batch(
        &self,
        rng: &mut ChaCha8Rng,
        batch: usize,
        step: u64,
    ) -> Result<PrioritizedBatch<T, S>> {
        if self.size < batch {
            return Err(Error::InsufficientOccupancy {
                size: self.size,
                requested: batch,
            });
        }
        let beta = self.cfg.beta.beta_at(step);
        let total = self.tree.total();
        if !(total > S::zero()) {
            return Err(Error::invalid("sampling from a zero-mass buffer"));
        }
        let seg = total / S::from_us(batch);
        let mut indices = Vec::with_capacity(batch);
        let mut probabilities = Vec::with_capacity(batch);
        for k in 0..batch {
            let u = S::from_f(rng.gen::<f64>());
            let mass = (S::from_us(k) + u) * seg;
            // Guard against the k = batch-1 segment rounding up to the root.
            let idx = match self.tree.lookup(mass) {
                Ok(i) => i,
                Err(_) => self.tree.lookup(mass.min(prev_below(total)))?,
            };
            indices.push(idx);
            probabilities.push(self.probability(idx));
        }
        let is_weights = self.normalized_is_weights(&probabilities, beta);
        Ok(PrioritizedBatch {
            items: indices.iter().map(|&i| self.items[i].clone()).collect(),
            indices,
            probabilities,
            is_weights,
        })
    }

    /// Independent proportional draw of a single index. This is the
    /// distribution-law path used by the sampling statistics tests; the
    /// training path uses stratified segments.
    pub fn sample_index(&self, rng: &mut ChaCha8Rng) -> Result<usize> {
        let total = self.tree.total();
        if !(total > S::zero()) {
            return Err(Error::invalid("sampling from a zero-mass buffer"));
        }
        let mass = S::from_f(rng.gen::<f64>()) * total;
        self.tree.lookup(mass.min(prev_below(total)))
    }

    /// w_i = ((1/N) * (1/P(i)))^beta, max-normalized over the batch.
    fn normalized_is_weights(&self, probabilities: &[S], beta: S) -> Vec<S> {
        let n = S::from_us(self.size);
        let one = S::one();
        let raw: Vec<S> = probabilities
            .iter()
            .map(|&p| (one / (n * p)).powf(beta))
            .collect();
        let max = raw.iter().cloned().fold(S::zero(), S::max);
        raw.into_iter().map(|w| w / max).collect()
    }

    pub fn tree(&self) -> &SumTree<S> {
        &self.tree
    }
}

/// Largest representable value strictly below `x` (x > 0), used to clamp
/// sampling masses into the half-open interval.
fn prev_below<S: Scalar>(x: S) -> S {
    x - x * S::epsilon()
}

/// Uniform sliding-window ring buffer used by the non-prioritized modes.
#[derive(Clone, Debug)]
pub struct RingBuffer<T> {
    items: Vec<T>,
    capacity: usize,
    write: usize,
    size: usize,
}

impl<T: Clone> RingBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        RingBuffer {
            items: Vec::with_capacity(capacity),
            capacity: capacity.max(1),
            write: 0,
            size: 0,
        }
    }

    pub fn push(&mut self, item: T) -> usize {
        let slot = self.write;
        if self.size < self.capacity {
            self.items.push(item);
        } else {
            self.items[slot] = item;
        }
        self.write = (self.write + 1) % self.capacity;
        self.size = (self.size + 1).min(self.capacity);
        slot
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn get(&self, index: usize) -> &T {
        &self.items[index]
    }

    /// Independent uniform index draws (with replacement).
    pub fn sample_indices(&self, rng: &mut ChaCha8Rng, batch: usize) -> Result<Vec<usize>> {
        if self.size < batch {
            return Err(Error::InsufficientOccupancy {
                size: self.size,
                requested: batch,
            });
        }
        Ok((0..batch).map(|_| rng.gen_range(0..self.size)).collect())
    }
}
