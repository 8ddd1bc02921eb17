//! Prefix equivalence classes and the partitioners that place them.
//!
//! A class is a frequent item (the prefix) plus its atoms: the frequent
//! 2-itemsets `{prefix, suffix}` with the suffix later in the
//! support-ascending item order. Itemsets of length ≥ 2 belong to exactly one
//! class (their two smallest items in item order determine it), so classes
//! can be mined independently on different partitions.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::exec::WorkerPool;
use crate::trimatrix::TriangularMatrix;
use crate::vertical::{Tidset, VerticalDb};
use crate::{ItemId, Support};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EquivClassError {
    #[error("default partitioner needs at least 2 frequent items (got {0})")]
    TooFewItems(usize),
    #[error("partition count must be at least 1 (got {0})")]
    InvalidPartitionCount(usize),
}

/// A 1-length-prefix equivalence class; every atom is a frequent 2-itemset
/// carried with its tidset, listed in item-order sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceClass {
    prefix: ItemId,
    prefix_rank: usize,
    atoms: Vec<(ItemId, Tidset)>,
}

impl EquivalenceClass {
    pub fn prefix(&self) -> ItemId {
        self.prefix
    }

    pub fn prefix_rank(&self) -> usize {
        self.prefix_rank
    }

    pub fn atoms(&self) -> &[(ItemId, Tidset)] {
        &self.atoms
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }
}

/// Output of class construction. Prefixes whose every candidate pair fell
/// below the threshold produce no class; they are recorded here so the build
/// remains auditable.
#[derive(Debug, Clone)]
pub struct ClassSet {
    classes: Vec<EquivalenceClass>,
    empty_prefixes: Vec<ItemId>,
}

impl ClassSet {
    pub fn classes(&self) -> &[EquivalenceClass] {
        &self.classes
    }

    pub fn into_classes(self) -> Vec<EquivalenceClass> {
        self.classes
    }

    pub fn empty_prefixes(&self) -> &[ItemId] {
        &self.empty_prefixes
    }

    pub fn total_atoms(&self) -> usize {
        self.classes.iter().map(EquivalenceClass::num_atoms).sum()
    }
}

/// Builds one class per item-order position `i` in `[0, n−2]`. The atom for
/// suffix position `j > i` is included iff the 2-itemset support reaches
/// `min_count`; the matrix, when given, short-circuits the intersection for
/// infrequent pairs and never changes the outcome. Intersections are
/// parallelized per prefix.
pub fn build_classes(
    v: &VerticalDb,
    min_count: Support,
    matrix: Option<&TriangularMatrix>,
    pool: &WorkerPool,
) -> ClassSet {
    let order = v.item_order();
    let n = order.len();
    if n < 2 {
        return ClassSet {
            classes: Vec::new(),
            empty_prefixes: Vec::new(),
        };
    }
    let built: Vec<EquivalenceClass> = pool.run_indexed(n - 1, |i| {
        let prefix = order[i];
        let prefix_tidset = v.tidset(prefix).expect("item in order");
        let mut atoms = Vec::new();
        for (j, &suffix) in order.iter().enumerate().skip(i + 1) {
            if let Some(m) = matrix {
                if m.support_by_rank(i, j) < min_count {
                    continue;
                }
            }
            let tidset = prefix_tidset.intersect(v.tidset(suffix).expect("item in order"));
            if tidset.support() >= min_count {
                atoms.push((suffix, tidset));
            }
        }
        EquivalenceClass {
            prefix,
            prefix_rank: i,
            atoms,
        }
    });
    let mut classes = Vec::with_capacity(built.len());
    let mut empty_prefixes = Vec::new();
    for class in built {
        if class.atoms.is_empty() {
            empty_prefixes.push(class.prefix);
        } else {
            classes.push(class);
        }
    }
    ClassSet {
        classes,
        empty_prefixes,
    }
}

/// Placement of classes onto mining partitions, with the per-partition atom
/// totals the balance experiments measure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionAssignment {
    num_partitions: usize,
    mapping: BTreeMap<usize, usize>,
    balance: Vec<u64>,
}

impl PartitionAssignment {
    pub fn num_partitions(&self) -> usize {
        self.num_partitions
    }

    /// Partition id for a class identified by its prefix rank.
    pub fn partition_of(&self, prefix_rank: usize) -> Option<usize> {
        self.mapping.get(&prefix_rank).copied()
    }

    pub fn mapping(&self) -> &BTreeMap<usize, usize> {
        &self.mapping
    }

    /// Per-partition total atom counts.
    pub fn balance(&self) -> &[u64] {
        &self.balance
    }
}

fn assign(
    classes: &[EquivalenceClass],
    num_partitions: usize,
    rule: impl Fn(usize) -> usize,
) -> PartitionAssignment {
    let mut mapping = BTreeMap::new();
    let mut balance = vec![0u64; num_partitions];
    for class in classes {
        let p = rule(class.prefix_rank);
        debug_assert!(p < num_partitions);
        mapping.insert(class.prefix_rank, p);
        balance[p] += class.num_atoms() as u64;
    }
    PartitionAssignment {
        num_partitions,
        mapping,
        balance,
    }
}

/// One partition per class: `n − 1` partitions for `n` frequent items, the
/// class at prefix rank `r` on partition `r`.
pub fn default_partitioner(
    classes: &[EquivalenceClass],
    n: usize,
) -> Result<PartitionAssignment, EquivClassError> {
    if n < 2 {
        return Err(EquivClassError::TooFewItems(n));
    }
    Ok(assign(classes, n - 1, |r| r))
}

/// Modulo placement: rank `r` goes to partition `r mod p`.
pub fn hash_partitioner(
    classes: &[EquivalenceClass],
    p: usize,
) -> Result<PartitionAssignment, EquivClassError> {
    if p < 1 {
        return Err(EquivClassError::InvalidPartitionCount(p));
    }
    Ok(assign(classes, p, |r| r % p))
}

/// Modulo placement with the direction reversed once ranks reach `p`:
/// rank `r < p` goes to partition `r`, rank `r ≥ p` to `(p−1) − (r mod p)`.
/// Ranks follow the support-ascending order, so low ranks carry the longest
/// atom lists; the reversal pairs them with the shortest ones.
pub fn reverse_hash_partitioner(
    classes: &[EquivalenceClass],
    p: usize,
) -> Result<PartitionAssignment, EquivClassError> {
    if p < 1 {
        return Err(EquivClassError::InvalidPartitionCount(p));
    }
    Ok(assign(classes, p, |r| {
        if r < p {
            r
        } else {
            (p - 1) - (r % p)
        }
    }))
}

/// Alternative reading of the reversed placement: a full zigzag sweep,
/// alternating direction every `p` ranks. Kept for experimentation; the
/// pipelines use [`reverse_hash_partitioner`].
pub fn boustrophedon_partitioner(
    classes: &[EquivalenceClass],
    p: usize,
) -> Result<PartitionAssignment, EquivClassError> {
    if p < 1 {
        return Err(EquivClassError::InvalidPartitionCount(p));
    }
    Ok(assign(classes, p, |r| {
        if (r / p) % 2 == 0 {
            r % p
        } else {
            (p - 1) - (r % p)
        }
    }))
}

/// Per-partition atom totals plus their coefficient of variation.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceMetric {
    pub totals: Vec<u64>,
    pub cv: f64,
}

/// CV = population standard deviation over mean of the per-partition totals;
/// zero for a single partition or an all-zero assignment.
pub fn balance_metric(assignment: &PartitionAssignment) -> BalanceMetric {
    let totals = assignment.balance.clone();
    let p = totals.len();
    let sum: u64 = totals.iter().sum();
    if p <= 1 || sum == 0 {
        return BalanceMetric { totals, cv: 0.0 };
    }
    let mean = sum as f64 / p as f64;
    let variance = totals
        .iter()
        .map(|&t| {
            let d = t as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / p as f64;
    BalanceMetric {
        totals,
        cv: variance.sqrt() / mean,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::count_items;
    use crate::testutil::d1;
    use crate::trimatrix::TriangularMatrix;
    use crate::vertical::build_vertical;

    fn d1_classes(min_count: Support, with_matrix: bool) -> ClassSet {
        let db = d1();
        let freq = count_items(&db, min_count);
        let v = build_vertical(&db, &freq);
        let pool = WorkerPool::new(2).unwrap();
        let matrix = with_matrix.then(|| TriangularMatrix::from_db(&db, &freq, &pool));
        build_classes(&v, min_count, matrix.as_ref(), &pool)
    }

    #[test]
    fn d1_min3_classes_with_matrix() {
        let set = d1_classes(3, true);
        let suffixes: Vec<(ItemId, Vec<ItemId>)> = set
            .classes()
            .iter()
            .map(|c| (c.prefix(), c.atoms().iter().map(|(s, _)| *s).collect()))
            .collect();
        assert_eq!(
            suffixes,
            vec![(1, vec![2, 3, 4]), (2, vec![3, 4]), (3, vec![4])]
        );
        assert_eq!(set.total_atoms(), 6);
        assert!(set.empty_prefixes().is_empty());
    }

    #[test]
    fn d1_min3_matrix_toggle_is_invisible() {
        let with = d1_classes(3, true);
        let without = d1_classes(3, false);
        assert_eq!(with.classes(), without.classes());
    }

    #[test]
    fn d1_min4_all_pairs_infrequent() {
        let set = d1_classes(4, true);
        assert!(set.classes().is_empty());
        assert_eq!(set.empty_prefixes(), &[1, 2, 3]);
    }

    #[test]
    fn single_frequent_item_has_no_classes() {
        let db = crate::dataset::TransactionDB::new(vec![crate::dataset::Transaction::new(
            vec![7],
        )]);
        let freq = count_items(&db, 1);
        let v = build_vertical(&db, &freq);
        let pool = WorkerPool::new(1).unwrap();
        let set = build_classes(&v, 1, None, &pool);
        assert!(set.classes().is_empty());
        assert!(set.empty_prefixes().is_empty());
    }

    #[test]
    fn default_partitioner_d1() {
        let set = d1_classes(3, true);
        let a = default_partitioner(set.classes(), 4).unwrap();
        assert_eq!(a.num_partitions(), 3);
        let expected: BTreeMap<usize, usize> = [(0, 0), (1, 1), (2, 2)].into();
        assert_eq!(a.mapping(), &expected);
        assert_eq!(a.balance(), &[3, 2, 1]);
    }

    #[test]
    fn default_partitioner_two_items() {
        let set = d1_classes(3, true);
        let a = default_partitioner(&set.classes()[..1], 2).unwrap();
        assert_eq!(a.num_partitions(), 1);
    }

    #[test]
    fn default_partitioner_rejects_single_item() {
        assert_eq!(
            default_partitioner(&[], 1).unwrap_err(),
            EquivClassError::TooFewItems(1)
        );
    }

    #[test]
    fn hash_partitioner_wraps_ranks() {
        let set = d1_classes(3, true);
        let a = hash_partitioner(set.classes(), 2).unwrap();
        let expected: BTreeMap<usize, usize> = [(0, 0), (1, 1), (2, 0)].into();
        assert_eq!(a.mapping(), &expected);
    }

    #[test]
    fn hash_partitioner_injective_when_p_large() {
        let set = d1_classes(3, true);
        let a = hash_partitioner(set.classes(), 10).unwrap();
        for (&rank, &part) in a.mapping() {
            assert_eq!(rank, part);
        }
    }

    #[test]
    fn hash_partitioner_single_partition() {
        let set = d1_classes(3, true);
        let a = hash_partitioner(set.classes(), 1).unwrap();
        assert!(a.mapping().values().all(|&p| p == 0));
    }

    #[test]
    fn reverse_hash_folds_high_ranks_back() {
        let set = d1_classes(3, true);
        let a = reverse_hash_partitioner(set.classes(), 2).unwrap();
        let expected: BTreeMap<usize, usize> = [(0, 0), (1, 1), (2, 1)].into();
        assert_eq!(a.mapping(), &expected);
    }

    #[test]
    fn reverse_hash_rule_table() {
        // Ranks 0..=5 at p = 3.
        let rule = |r: usize| if r < 3 { r } else { 2 - (r % 3) };
        let got: Vec<usize> = (0..6).map(rule).collect();
        assert_eq!(got, vec![0, 1, 2, 2, 1, 0]);
    }

    #[test]
    fn reverse_hash_single_partition() {
        let set = d1_classes(3, true);
        let a = reverse_hash_partitioner(set.classes(), 1).unwrap();
        assert!(a.mapping().values().all(|&p| p == 0));
    }

    #[test]
    fn boustrophedon_differs_beyond_two_bands() {
        // Rank 6 at p = 3: the fold rule sends it to 2, the zigzag back to 0.
        let fold = |r: usize| if r < 3 { r } else { 2 - (r % 3) };
        let zigzag = |r: usize| if (r / 3) % 2 == 0 { r % 3 } else { 2 - (r % 3) };
        assert_eq!(fold(6), 2);
        assert_eq!(zigzag(6), 0);
        assert_eq!((0..6).map(fold).collect::<Vec<_>>(), (0..6).map(zigzag).collect::<Vec<_>>());
    }

    #[test]
    fn balance_cv_d1_default() {
        let set = d1_classes(3, true);
        let a = default_partitioner(set.classes(), 4).unwrap();
        let m = balance_metric(&a);
        assert_eq!(m.totals, vec![3, 2, 1]);
        assert!((m.cv - 0.408_248).abs() < 1e-3, "cv {}", m.cv);
    }

    #[test]
    fn balance_cv_single_partition_is_zero() {
        let set = d1_classes(3, true);
        let a = hash_partitioner(set.classes(), 1).unwrap();
        assert_eq!(balance_metric(&a).cv, 0.0);
    }

    #[test]
    fn balance_cv_equal_totals_is_zero() {
        let a = PartitionAssignment {
            num_partitions: 3,
            mapping: BTreeMap::new(),
            balance: vec![5, 5, 5],
        };
        assert_eq!(balance_metric(&a).cv, 0.0);
    }
}
