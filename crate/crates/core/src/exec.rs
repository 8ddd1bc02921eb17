//! Local partitioned dataflow engine.
//!
//! A [`PartitionedCollection`] is an ordered list of partitions processed by
//! a fixed-size [`WorkerPool`]. Elements are immutable during a transform;
//! per-partition accumulator partials are the only mutable state and are
//! merged at stage boundaries, in partition order. Every operation is
//! deterministic for a fixed input order and partitioning, whatever the
//! worker count — stage results are materialized eagerly, there is no
//! lineage and no caching. Broadcast values need no machinery here: workers
//! are scoped threads, so read-only state is shared by closure capture.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExecError {
    #[error("partition count must be at least 1 (got {0})")]
    InvalidPartitionCount(usize),
    #[error("worker count must be at least 1 (got {0})")]
    InvalidWorkerCount(usize),
}

/// Fixed-size pool of workers. Jobs are claimed off a shared counter, so
/// scheduling varies between runs; results are always delivered in job order.
#[derive(Debug, Clone)]
pub struct WorkerPool {
    workers: usize,
}

impl WorkerPool {
    pub fn new(workers: usize) -> Result<Self, ExecError> {
        if workers < 1 {
            return Err(ExecError::InvalidWorkerCount(workers));
        }
        Ok(WorkerPool { workers })
    }

    /// Pool sized to the available hardware parallelism.
    pub fn with_default_parallelism() -> Self {
        let workers = thread::available_parallelism().map_or(1, |n| n.get());
        WorkerPool { workers }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// Runs `job(0..jobs)` across the pool and returns results in job order.
    pub fn run_indexed<R, F>(&self, jobs: usize, job: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync,
    {
        if jobs == 0 {
            return Vec::new();
        }
        let threads = self.workers.min(jobs);
        if threads == 1 {
            return (0..jobs).map(job).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<R>>> = (0..jobs).map(|_| Mutex::new(None)).collect();
        thread::scope(|scope| {
            for _ in 0..threads {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= jobs {
                        break;
                    }
                    let result = job(i);
                    *slots[i].lock().unwrap() = Some(result);
                });
            }
        });
        slots
            .into_iter()
            .map(|slot| slot.into_inner().unwrap().expect("job completed"))
            .collect()
    }
}

/// Per-partition accumulator partial that can be merged into another.
/// The merge must be associative and commutative; the engine merges partials
/// in partition order, tests merge them in random orders.
pub trait AccumValue: Send {
    fn merge(&mut self, other: Self);
}

impl AccumValue for u64 {
    fn merge(&mut self, other: Self) {
        *self += other;
    }
}

/// Insertion-ordered map used by the key-grouping shuffles, so that output
/// order depends only on the logical input order, never on hasher internals.
struct OrderedMap<K, V> {
    index: HashMap<K, usize>,
    entries: Vec<(K, V)>,
}

impl<K: Hash + Eq + Clone, V> OrderedMap<K, V> {
    fn new() -> Self {
        OrderedMap {
            index: HashMap::new(),
            entries: Vec::new(),
        }
    }

    fn entry_mut(&mut self, key: K, default: impl FnOnce() -> V) -> &mut V {
        let idx = match self.index.get(&key) {
            Some(&idx) => idx,
            None => {
                let idx = self.entries.len();
                self.index.insert(key.clone(), idx);
                self.entries.push((key, default()));
                idx
            }
        };
        &mut self.entries[idx].1
    }

    fn into_entries(self) -> Vec<(K, V)> {
        self.entries
    }
}

fn key_partition<K: Hash>(key: &K, partitions: usize) -> usize {
    let mut hasher = DefaultHasher::new();
    key.hash(&mut hasher);
    (hasher.finish() % partitions as u64) as usize
}

/// An ordered list of element lists; concatenating the partitions in order
/// yields the logical collection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionedCollection<T> {
    parts: Vec<Vec<T>>,
}

impl<T> PartitionedCollection<T> {
    /// Single-partition collection holding `items` in order.
    pub fn from_vec(items: Vec<T>) -> Self {
        PartitionedCollection { parts: vec![items] }
    }

    pub fn from_partitions(parts: Vec<Vec<T>>) -> Result<Self, ExecError> {
        if parts.is_empty() {
            return Err(ExecError::InvalidPartitionCount(0));
        }
        Ok(PartitionedCollection { parts })
    }

    pub fn partition_count(&self) -> usize {
        self.parts.len()
    }

    pub fn partitions(&self) -> &[Vec<T>] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.iter().all(Vec::is_empty)
    }

    pub fn iter_logical(&self) -> impl Iterator<Item = &T> {
        self.parts.iter().flatten()
    }

    /// Flattens into the logical order: partition 0's elements, then
    /// partition 1's, and so on.
    pub fn into_vec(self) -> Vec<T> {
        self.parts.into_iter().flatten().collect()
    }

    /// Redistributes the logical collection round-robin into `k` partitions:
    /// the element at logical index `i` lands in partition `i % k`.
    pub fn repartition(self, k: usize) -> Result<Self, ExecError> {
        if k < 1 {
            return Err(ExecError::InvalidPartitionCount(k));
        }
        let mut parts: Vec<Vec<T>> = (0..k).map(|_| Vec::new()).collect();
        for (i, item) in self.into_vec().into_iter().enumerate() {
            parts[i % k].push(item);
        }
        Ok(PartitionedCollection { parts })
    }

    /// Collapses to a single partition holding the logical order.
    pub fn coalesce_to_one(self) -> Self {
        PartitionedCollection {
            parts: vec![self.into_vec()],
        }
    }
}

impl<T: Sync> PartitionedCollection<T> {
    /// Applies `f` to every element, partitions processed in parallel,
    /// within-partition order preserved. Output partitioning matches input.
    pub fn map<U, F>(&self, pool: &WorkerPool, f: F) -> PartitionedCollection<U>
    where
        U: Send,
        F: Fn(&T) -> U + Sync,
    {
        let parts = pool.run_indexed(self.parts.len(), |p| {
            self.parts[p].iter().map(&f).collect::<Vec<U>>()
        });
        PartitionedCollection { parts }
    }

    /// Maps every element to zero or more outputs, flattened per partition.
    pub fn flat_map<U, F>(&self, pool: &WorkerPool, f: F) -> PartitionedCollection<U>
    where
        U: Send,
        F: Fn(&T) -> Vec<U> + Sync,
    {
        let parts = pool.run_indexed(self.parts.len(), |p| {
            self.parts[p].iter().flat_map(&f).collect::<Vec<U>>()
        });
        PartitionedCollection { parts }
    }

    /// Fallible [`Self::flat_map`]: if any element fails, the job aborts with
    /// the error from the lowest partition index (earliest element within it).
    pub fn try_flat_map<U, E, F>(
        &self,
        pool: &WorkerPool,
        f: F,
    ) -> Result<PartitionedCollection<U>, E>
    where
        U: Send,
        E: Send,
        F: Fn(&T) -> Result<Vec<U>, E> + Sync,
    {
        let results: Vec<Result<Vec<U>, E>> = pool.run_indexed(self.parts.len(), |p| {
            let mut out = Vec::new();
            for item in &self.parts[p] {
                out.extend(f(item)?);
            }
            Ok(out)
        });
        let mut parts = Vec::with_capacity(results.len());
        for result in results {
            parts.push(result?);
        }
        Ok(PartitionedCollection { parts })
    }

    /// Folds every partition into a fresh partial and returns the partials
    /// in partition order.
    pub fn accumulate_partials<A, I, F>(&self, pool: &WorkerPool, init: I, fold: F) -> Vec<A>
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, &T) + Sync,
    {
        pool.run_indexed(self.parts.len(), |p| {
            let mut acc = init();
            for item in &self.parts[p] {
                fold(&mut acc, item);
            }
            acc
        })
    }

    /// Accumulator over all partitions: per-partition partials merged in
    /// partition order.
    pub fn accumulate<A, I, F>(&self, pool: &WorkerPool, init: I, fold: F) -> A
    where
        A: AccumValue,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, &T) + Sync,
    {
        let mut partials = self.accumulate_partials(pool, &init, fold).into_iter();
        let mut merged = partials.next().unwrap_or_else(init);
        for partial in partials {
            merged.merge(partial);
        }
        merged
    }
}

impl<K, V> PartitionedCollection<(K, V)>
where
    K: Hash + Eq + Clone,
{
    /// Groups values by key. One output element per distinct key; its value
    /// list holds all values for that key in logical input order. Keys are
    /// hash-assigned to output partitions (as many as the input had), in
    /// first-encounter order within each partition.
    pub fn group_by_key(self) -> PartitionedCollection<(K, Vec<V>)> {
        let out_partitions = self.parts.len();
        let mut groups: OrderedMap<K, Vec<V>> = OrderedMap::new();
        for (key, value) in self.parts.into_iter().flatten() {
            groups.entry_mut(key, Vec::new).push(value);
        }
        distribute_by_key(groups.into_entries(), out_partitions)
    }
}

impl<K, V> PartitionedCollection<(K, V)>
where
    K: Hash + Eq + Clone + Send + Sync,
    V: Clone + Send + Sync,
{
    /// Per-key fold with `op`, equal to [`Self::group_by_key`] followed by a
    /// list fold. `op` must be associative and commutative. Partitions are
    /// pre-aggregated in parallel, partials merged in partition order.
    pub fn reduce_by_key<F>(&self, pool: &WorkerPool, op: F) -> PartitionedCollection<(K, V)>
    where
        F: Fn(V, V) -> V + Sync,
    {
        let out_partitions = self.parts.len();
        let partials: Vec<Vec<(K, V)>> = pool.run_indexed(self.parts.len(), |p| {
            let mut local: OrderedMap<K, Option<V>> = OrderedMap::new();
            for (key, value) in &self.parts[p] {
                let slot = local.entry_mut(key.clone(), || None);
                *slot = Some(match slot.take() {
                    Some(acc) => op(acc, value.clone()),
                    None => value.clone(),
                });
            }
            local
                .into_entries()
                .into_iter()
                .map(|(k, v)| (k, v.expect("folded value")))
                .collect()
        });
        let mut merged: OrderedMap<K, Option<V>> = OrderedMap::new();
        for partial in partials {
            for (key, value) in partial {
                let slot = merged.entry_mut(key, || None);
                *slot = Some(match slot.take() {
                    Some(acc) => op(acc, value),
                    None => value,
                });
            }
        }
        let entries = merged
            .into_entries()
            .into_iter()
            .map(|(k, v)| (k, v.expect("folded value")))
            .collect();
        distribute_by_key(entries, out_partitions)
    }
}

fn distribute_by_key<K: Hash, V>(
    entries: Vec<(K, V)>,
    partitions: usize,
) -> PartitionedCollection<(K, V)> {
    let mut parts: Vec<Vec<(K, V)>> = (0..partitions).map(|_| Vec::new()).collect();
    for (key, value) in entries {
        let p = key_partition(&key, partitions);
        parts[p].push((key, value));
    }
    PartitionedCollection { parts }
}
