//! Frequent itemset mining with Eclat variants over a local partitioned
//! dataflow executor.
//!
//! The crate is organized around the mining pipeline:
//!
//! - [`dataset`]: transaction database ingestion (FIMI files), item counting,
//!   transaction filtering, and a synthetic generator.
//! - [`exec`]: a local partitioned collection engine with a fixed worker pool,
//!   providing the map/flatMap, groupByKey, reduceByKey, coalesce, and
//!   accumulator operations the pipelines are built from.
//! - [`vertical`]: tidset construction and intersection.
//! - [`trimatrix`]: one-pass candidate 2-itemset counting in an upper
//!   triangular matrix.
//! - [`equivclass`]: prefix equivalence classes and the partitioners that
//!   assign them to workers.
//! - [`miner`]: the bottom-up recursion, the `v1`..`v5` pipeline variants,
//!   an Apriori baseline, and a brute-force oracle.
//!
//! All algorithms produce the same frequent itemset set for the same input
//! and minimum support; they differ in how the work is organized.

pub mod dataset;
pub mod equivclass;
pub mod exec;
pub mod miner;
pub mod trimatrix;
pub mod vertical;

/// Item identifier. All datasets are integer-coded.
pub type ItemId = u32;

/// Transaction identifier, 1-based.
pub type Tid = u32;

/// Support count of an item or itemset.
pub type Support = u32;

#[cfg(test)]
pub(crate) mod testutil {
    use crate::dataset::{Transaction, TransactionDB};

    /// Five-transaction fixture over items 1..=4: every item has support 4,
    /// every pair support 3, every triple support 2, the quad support 1.
    pub fn d1() -> TransactionDB {
        TransactionDB::new(vec![
            Transaction::new(vec![1, 2, 3]),
            Transaction::new(vec![1, 2, 4]),
            Transaction::new(vec![1, 3, 4]),
            Transaction::new(vec![2, 3, 4]),
            Transaction::new(vec![1, 2, 3, 4]),
        ])
    }
}
