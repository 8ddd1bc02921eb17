//! The five pipeline variants.
//!
//! `v1` builds the vertical database over a single partition (so tids can be
//! assigned without coordination), counts pairs over the raw transactions,
//! and mines one class per partition. `v2` adds transaction filtering and
//! rebuilds the vertical database from the filtered transactions after
//! coalescing them to one partition. `v3` replaces the coalesce with a
//! per-partition map accumulator using global-offset tids. `v4` and `v5`
//! keep `v3`'s phases but place the classes with the hash and reverse-hash
//! partitioners.

use std::collections::HashMap;
use std::time::Instant;

use crate::dataset::{FrequentItemTable, Transaction, TransactionDB};
use crate::equivclass::{
    balance_metric, build_classes, default_partitioner, hash_partitioner,
    reverse_hash_partitioner, BalanceMetric, EquivalenceClass,
};
use crate::exec::{AccumValue, PartitionedCollection, WorkerPool};
use crate::trimatrix::TriangularMatrix;
use crate::vertical::{Tidset, VerticalDb};
use crate::{ItemId, Support, Tid};

use super::{bottom_up, Itemset, MinerError, PipelineOutput};

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn one_itemsets(freq: &FrequentItemTable) -> Vec<Itemset> {
    freq.entries()
        .iter()
        .map(|&(item, support)| Itemset::new(vec![item], support))
        .collect()
}

/// Frequent 2-itemsets fall out of class construction: every atom is one.
fn two_itemsets(classes: &[EquivalenceClass]) -> Vec<Itemset> {
    classes
        .iter()
        .flat_map(|c| {
            c.atoms()
                .iter()
                .map(|(suffix, tidset)| Itemset::new(vec![c.prefix(), *suffix], tidset.support()))
        })
        .collect()
}

pub(super) enum VerticalStrategy {
    /// Coalesce the filtered transactions to one partition, assign tids
    /// positionally, then group (item, tid) pairs by key.
    CoalesceGroup,
    /// Build per-partition (item, tidset) maps with global-offset tids and
    /// merge them in partition order.
    AccumulatorMap,
}

pub(super) enum ClassPartitioner {
    Default,
    Hash(usize),
    ReverseHash(usize),
}

/// Shared final phase: construct classes, place them, and mine every
/// partition in parallel. Emits the 2-itemsets (from the atoms) and
/// everything the bottom-up recursion finds.
fn mine_classes(
    vertical: &VerticalDb,
    min_count: Support,
    matrix: Option<&TriangularMatrix>,
    partitioner: &ClassPartitioner,
    pool: &WorkerPool,
    depth_limit: usize,
) -> Result<(Vec<Itemset>, Option<BalanceMetric>), MinerError> {
    let class_set = build_classes(vertical, min_count, matrix, pool);
    let classes = class_set.into_classes();
    let mut itemsets = two_itemsets(&classes);
    if classes.is_empty() {
        return Ok((itemsets, None));
    }
    let assignment = match *partitioner {
        ClassPartitioner::Default => default_partitioner(&classes, vertical.num_items()),
        ClassPartitioner::Hash(p) => hash_partitioner(&classes, p),
        ClassPartitioner::ReverseHash(p) => reverse_hash_partitioner(&classes, p),
    }
    .map_err(|e| MinerError::Config(e.to_string()))?;
    let metric = balance_metric(&assignment);

    let mut parts: Vec<Vec<EquivalenceClass>> =
        (0..assignment.num_partitions()).map(|_| Vec::new()).collect();
    for class in classes {
        let p = assignment
            .partition_of(class.prefix_rank())
            .expect("every class was assigned");
        parts[p].push(class);
    }
    let coll = PartitionedCollection::from_partitions(parts).expect("at least one partition");
    let mined = coll.try_flat_map(pool, |ec| bottom_up(ec, min_count, depth_limit))?;
    itemsets.extend(mined.into_vec());
    Ok((itemsets, Some(metric)))
}

/// Single-partition vertical build, pair counting over the raw transactions,
/// one class per partition.
pub(super) fn run_v1(
    db: &TransactionDB,
    min_count: Support,
    tri_on: bool,
    pool: &WorkerPool,
    depth_limit: usize,
) -> Result<PipelineOutput, MinerError> {
    let mut phase_ms = [0.0; 4];

    // Phase 1: (item, tid) pairs over one partition, grouped into tidsets,
    // filtered by support, sorted support-ascending.
    let t = Instant::now();
    let indexed: Vec<(Tid, &Transaction)> = db
        .transactions()
        .iter()
        .enumerate()
        .map(|(i, tr)| (i as Tid + 1, tr))
        .collect();
    let pairs = PartitionedCollection::from_vec(indexed).flat_map(pool, |(tid, tr)| {
        tr.items().iter().map(|&item| (item, *tid)).collect()
    });
    // Values arrive in tid order, so every group is already ascending.
    let entries: Vec<(ItemId, Tidset)> = pairs
        .group_by_key()
        .into_vec()
        .into_iter()
        .filter(|(_, tids)| tids.len() as Support >= min_count)
        .map(|(item, tids)| (item, Tidset::new(tids)))
        .collect();
    let freq = FrequentItemTable::from_counts(
        entries.iter().map(|(item, ts)| (*item, ts.support())),
        min_count,
    );
    let vertical = VerticalDb::from_parts(
        entries.into_iter().collect(),
        freq.items_in_order().collect(),
    );
    let mut itemsets = one_itemsets(&freq);
    phase_ms[0] = ms_since(t);

    // Phase 2: pair counts over the raw transactions.
    let t = Instant::now();
    let matrix = if tri_on && freq.len() >= 2 {
        let raw = PartitionedCollection::from_vec(db.transactions().iter().collect::<Vec<_>>())
            .repartition(pool.workers())
            .expect("worker count >= 1");
        Some(TriangularMatrix::count_pairs(&raw, &freq, pool))
    } else {
        None
    };
    phase_ms[1] = ms_since(t);

    // Phase 3 of this variant is the shared class-construction + mining
    // stage, reported in the last slot so runs line up across variants.
    let t = Instant::now();
    let (mined, balance) = mine_classes(
        &vertical,
        min_count,
        matrix.as_ref(),
        &ClassPartitioner::Default,
        pool,
        depth_limit,
    )?;
    itemsets.extend(mined);
    phase_ms[3] = ms_since(t);

    Ok(PipelineOutput {
        itemsets,
        phase_ms,
        balance,
    })
}

struct VerticalPartial(HashMap<ItemId, Vec<Tid>>);

impl AccumValue for VerticalPartial {
    fn merge(&mut self, other: Self) {
        // Merged in partition order; a later partition's tids are all larger.
        for (item, tids) in other.0 {
            self.0.entry(item).or_default().extend(tids);
        }
    }
}

/// Common skeleton of `v2`..`v5`: parallel item counting, transaction
/// filtering, pair counting over the filtered transactions, vertical build
/// per `strategy`, then the shared mining phase under `partitioner`.
pub(super) fn run_filtered(
    db: &TransactionDB,
    min_count: Support,
    tri_on: bool,
    strategy: VerticalStrategy,
    partitioner: ClassPartitioner,
    pool: &WorkerPool,
    depth_limit: usize,
) -> Result<PipelineOutput, MinerError> {
    let mut phase_ms = [0.0; 4];

    // Phase 1: word-count the items in parallel and keep the frequent ones.
    let t = Instant::now();
    let transactions =
        PartitionedCollection::from_vec(db.transactions().iter().collect::<Vec<_>>())
            .repartition(pool.workers())
            .expect("worker count >= 1");
    let counts = transactions
        .flat_map(pool, |tr| {
            tr.items()
                .iter()
                .map(|&item| (item, 1 as Support))
                .collect()
        })
        .reduce_by_key(pool, |a, b| a + b);
    let freq = FrequentItemTable::from_counts(counts.into_vec(), min_count);
    let mut itemsets = one_itemsets(&freq);
    phase_ms[0] = ms_since(t);

    // Phase 2: project transactions onto the frequent items (dropping the
    // ones that become empty), then count pairs over the filtered set.
    let t = Instant::now();
    let filtered = transactions.flat_map(pool, |tr| {
        let items: Vec<ItemId> = tr
            .items()
            .iter()
            .copied()
            .filter(|&item| freq.contains(item))
            .collect();
        if items.is_empty() {
            Vec::new()
        } else {
            vec![Transaction::new(items)]
        }
    });
    let matrix = if tri_on && freq.len() >= 2 {
        Some(TriangularMatrix::count_pairs(&filtered, &freq, pool))
    } else {
        None
    };
    phase_ms[1] = ms_since(t);

    // Phase 3: vertical database over the filtered transactions. Tids are
    // positions in the coalesced order either way; the accumulator path
    // computes them as global offsets without moving the data.
    let t = Instant::now();
    let vertical = match strategy {
        VerticalStrategy::CoalesceGroup => {
            let one = filtered.coalesce_to_one();
            let indexed: Vec<(Tid, Transaction)> = one
                .into_vec()
                .into_iter()
                .enumerate()
                .map(|(i, tr)| (i as Tid + 1, tr))
                .collect();
            let pairs = PartitionedCollection::from_vec(indexed).flat_map(pool, |(tid, tr)| {
                tr.items().iter().map(|&item| (item, *tid)).collect()
            });
            let tidsets: HashMap<ItemId, Tidset> = pairs
                .group_by_key()
                .into_vec()
                .into_iter()
                .map(|(item, tids)| (item, Tidset::new(tids)))
                .collect();
            VerticalDb::from_parts(tidsets, freq.items_in_order().collect())
        }
        VerticalStrategy::AccumulatorMap => {
            let parts = filtered.partitions();
            let mut offsets = Vec::with_capacity(parts.len());
            let mut acc: Tid = 0;
            for part in parts {
                offsets.push(acc);
                acc += part.len() as Tid;
            }
            let partials: Vec<VerticalPartial> = pool.run_indexed(parts.len(), |p| {
                let mut map: HashMap<ItemId, Vec<Tid>> = HashMap::new();
                for (local, tr) in parts[p].iter().enumerate() {
                    let tid = offsets[p] + local as Tid + 1;
                    for &item in tr.items() {
                        map.entry(item).or_default().push(tid);
                    }
                }
                VerticalPartial(map)
            });
            let mut merged = VerticalPartial(HashMap::new());
            for partial in partials {
                merged.merge(partial);
            }
            let tidsets: HashMap<ItemId, Tidset> = merged
                .0
                .into_iter()
                .map(|(item, tids)| (item, Tidset::new(tids)))
                .collect();
            VerticalDb::from_parts(tidsets, freq.items_in_order().collect())
        }
    };
    phase_ms[2] = ms_since(t);

    // Phase 4: shared class construction and mining.
    let t = Instant::now();
    let (mined, balance) = mine_classes(
        &vertical,
        min_count,
        matrix.as_ref(),
        &partitioner,
        pool,
        depth_limit,
    )?;
    itemsets.extend(mined);
    phase_ms[3] = ms_since(t);

    Ok(PipelineOutput {
        itemsets,
        phase_ms,
        balance,
    })
}
