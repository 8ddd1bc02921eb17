//! Candidate 2-itemset support counting in one parallel pass over the
//! transactions, into an upper-triangular count array.
//!
//! Cells are indexed by frequent-item *rank* (position in the
//! support-ascending order), not by raw item id, so the array is bounded by
//! n·(n−1)/2 regardless of how large the item ids get. Items without a rank
//! (infrequent) are skipped entirely.

use std::collections::HashMap;

use thiserror::Error;

use crate::dataset::{FrequentItemTable, Transaction};
use crate::exec::{AccumValue, PartitionedCollection, WorkerPool};
use crate::{ItemId, Support};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TriMatrixError {
    #[error("item {0} has no rank (not frequent)")]
    UnknownItem(ItemId),
    #[error("pair support is undefined for an item with itself ({0})")]
    SameItem(ItemId),
}

/// Upper-triangular co-occurrence counts over frequent-item ranks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangularMatrix {
    dim: usize,
    counts: Vec<Support>,
    rank_of: HashMap<ItemId, usize>,
}

/// Flat index of cell `(r1, r2)` with `r1 < r2` in row-major upper-triangular
/// layout without the diagonal.
fn cell_index(dim: usize, r1: usize, r2: usize) -> usize {
    debug_assert!(r1 < r2 && r2 < dim);
    r1 * dim - r1 * (r1 + 1) / 2 + (r2 - r1 - 1)
}

#[derive(Clone)]
struct PairCounts(Vec<Support>);

impl AccumValue for PairCounts {
    fn merge(&mut self, other: Self) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }
}

impl TriangularMatrix {
    /// Counts all frequent-item pairs in the partitioned transactions:
    /// per-worker partial matrices, merged by element-wise addition at the
    /// end of the stage. Works over owned or borrowed transactions.
    pub fn count_pairs<T>(
        transactions: &PartitionedCollection<T>,
        freq: &FrequentItemTable,
        pool: &WorkerPool,
    ) -> TriangularMatrix
    where
        T: std::borrow::Borrow<Transaction> + Sync,
    {
        let dim = freq.len();
        let cells = dim * dim.saturating_sub(1) / 2;
        let counts = transactions.accumulate(
            pool,
            || PairCounts(vec![0; cells]),
            |acc, t| {
                let ranks: Vec<usize> = t
                    .borrow()
                    .items()
                    .iter()
                    .filter_map(|&item| freq.rank(item))
                    .collect();
                for i in 0..ranks.len() {
                    for j in i + 1..ranks.len() {
                        let (lo, hi) = if ranks[i] < ranks[j] {
                            (ranks[i], ranks[j])
                        } else {
                            (ranks[j], ranks[i])
                        };
                        acc.0[cell_index(dim, lo, hi)] += 1;
                    }
                }
            },
        );
        TriangularMatrix {
            dim,
            counts: counts.0,
            rank_of: freq
                .entries()
                .iter()
                .enumerate()
                .map(|(rank, &(item, _))| (item, rank))
                .collect(),
        }
    }

    /// Convenience for counting straight off a database: partitions by the
    /// pool's worker count first.
    pub fn from_db(
        db: &crate::dataset::TransactionDB,
        freq: &FrequentItemTable,
        pool: &WorkerPool,
    ) -> TriangularMatrix {
        let coll = PartitionedCollection::from_vec(db.transactions().iter().collect::<Vec<_>>())
            .repartition(pool.workers())
            .expect("worker count >= 1");
        Self::count_pairs(&coll, freq, pool)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Co-occurrence count of two distinct frequent items; argument order
    /// is irrelevant.
    pub fn pair_support(&self, item_i: ItemId, item_j: ItemId) -> Result<Support, TriMatrixError> {
        if item_i == item_j {
            return Err(TriMatrixError::SameItem(item_i));
        }
        let r1 = *self
            .rank_of
            .get(&item_i)
            .ok_or(TriMatrixError::UnknownItem(item_i))?;
        let r2 = *self
            .rank_of
            .get(&item_j)
            .ok_or(TriMatrixError::UnknownItem(item_j))?;
        Ok(self.support_by_rank(r1.min(r2), r1.max(r2)))
    }

    /// Count for a rank pair; `r1` and `r2` may come in either order.
    pub fn support_by_rank(&self, r1: usize, r2: usize) -> Support {
        let (lo, hi) = (r1.min(r2), r1.max(r2));
        self.counts[cell_index(self.dim, lo, hi)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{count_items, TransactionDB};
    use crate::testutil::d1;
    use crate::vertical::build_vertical;

    fn matrix_for(db: &TransactionDB, min_count: Support, workers: usize) -> TriangularMatrix {
        let freq = count_items(db, min_count);
        let pool = WorkerPool::new(workers).unwrap();
        TriangularMatrix::from_db(db, &freq, &pool)
    }

    #[test]
    fn d1_all_pair_cells_equal_three() {
        let m = matrix_for(&d1(), 3, 2);
        for i in 1..=4u32 {
            for j in i + 1..=4 {
                assert_eq!(m.pair_support(i, j).unwrap(), 3, "pair ({i},{j})");
            }
        }
    }

    #[test]
    fn single_transaction_counts() {
        let db = TransactionDB::new(vec![crate::dataset::Transaction::new(vec![1, 2, 3])]);
        let m = matrix_for(&db, 1, 1);
        assert_eq!(m.pair_support(1, 2).unwrap(), 1);
        assert_eq!(m.pair_support(1, 3).unwrap(), 1);
        assert_eq!(m.pair_support(2, 3).unwrap(), 1);
    }

    #[test]
    fn worker_count_does_not_change_matrix() {
        let db = crate::dataset::generate_synthetic(400, 30, 6, 3, 5).unwrap();
        assert_eq!(matrix_for(&db, 10, 1), matrix_for(&db, 10, 8));
    }

    #[test]
    fn diagonal_is_rejected() {
        let m = matrix_for(&d1(), 3, 1);
        assert_eq!(m.pair_support(2, 2), Err(TriMatrixError::SameItem(2)));
    }

    #[test]
    fn unknown_item_is_rejected() {
        let m = matrix_for(&d1(), 3, 1);
        assert_eq!(m.pair_support(1, 77), Err(TriMatrixError::UnknownItem(77)));
    }

    #[test]
    fn access_is_symmetric() {
        let m = matrix_for(&d1(), 3, 1);
        assert_eq!(m.pair_support(2, 1).unwrap(), m.pair_support(1, 2).unwrap());
    }

    /// Counting over raw and over filtered transactions produces the same
    /// matrix, since unranked items are skipped either way.
    #[test]
    fn raw_and_filtered_transactions_agree() {
        let db = crate::dataset::generate_synthetic(300, 25, 5, 3, 9).unwrap();
        let freq = count_items(&db, 20);
        if freq.len() < 2 {
            panic!("fixture too sparse for the test");
        }
        let pool = WorkerPool::new(3).unwrap();
        let raw = TriangularMatrix::from_db(&db, &freq, &pool);
        let filtered_db = crate::dataset::filter_transactions(&db, &freq);
        let filtered = TriangularMatrix::from_db(&filtered_db, &freq, &pool);
        assert_eq!(raw, filtered);
    }

    /// Cross-module oracle: every pair cell equals the intersection
    /// cardinality of the two tidsets.
    #[test]
    fn pair_support_matches_tidset_intersection() {
        let db = crate::dataset::generate_synthetic(250, 20, 5, 3, 13).unwrap();
        let freq = count_items(&db, 15);
        let pool = WorkerPool::new(2).unwrap();
        let m = TriangularMatrix::from_db(&db, &freq, &pool);
        let v = build_vertical(&db, &freq);
        for (a_idx, &(item_a, _)) in freq.entries().iter().enumerate() {
            for &(item_b, _) in &freq.entries()[a_idx + 1..] {
                let expected = v
                    .tidset(item_a)
                    .unwrap()
                    .intersect(v.tidset(item_b).unwrap())
                    .support();
                assert_eq!(m.pair_support(item_a, item_b).unwrap(), expected);
            }
        }
    }

    /// Additivity: counting two disjoint transaction subsets separately and
    /// merging the partials equals counting the union.
    #[test]
    fn partial_merge_is_additive() {
        let db = crate::dataset::generate_synthetic(200, 15, 5, 3, 21).unwrap();
        let freq = count_items(&db, 10);
        let pool = WorkerPool::new(1).unwrap();
        let (first, second) = db.transactions().split_at(db.num_transactions() / 2);
        let half_a = TransactionDB::new(first.to_vec());
        let half_b = TransactionDB::new(second.to_vec());
        let mut merged = TriangularMatrix::from_db(&half_a, &freq, &pool);
        let other = TriangularMatrix::from_db(&half_b, &freq, &pool);
        for (a, b) in merged.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        assert_eq!(merged, TriangularMatrix::from_db(&db, &freq, &pool));
    }
}
