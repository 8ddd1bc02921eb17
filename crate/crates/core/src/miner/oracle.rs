//! Brute-force ground truth: depth-first extension over the items present
//! in the database, counting every candidate by a direct transaction scan.
//! No tidsets and no pruning beyond the anti-monotone cutoff, so it shares
//! no machinery with either the Eclat pipelines or the Apriori baseline.

use std::collections::BTreeSet;

use crate::dataset::TransactionDB;
use crate::{ItemId, Support};

use super::{Itemset, MinerError};

/// Abort once this many candidate supports have been computed; enumeration
/// past this point means the caller should cap the itemset length.
pub const ORACLE_BUDGET: u64 = 1 << 20;

pub fn oracle_mine(
    db: &TransactionDB,
    min_count: Support,
    max_len: Option<usize>,
) -> Result<Vec<Itemset>, MinerError> {
    let items: Vec<ItemId> = db
        .transactions()
        .iter()
        .flat_map(|t| t.items().iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let cap = max_len.unwrap_or(usize::MAX);
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    let mut budget = 0u64;
    extend(db, &items, 0, cap, min_count, &mut prefix, &mut budget, &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn extend(
    db: &TransactionDB,
    items: &[ItemId],
    start: usize,
    cap: usize,
    min_count: Support,
    prefix: &mut Vec<ItemId>,
    budget: &mut u64,
    out: &mut Vec<Itemset>,
) -> Result<(), MinerError> {
    for idx in start..items.len() {
        *budget += 1;
        if *budget > ORACLE_BUDGET {
            return Err(MinerError::OracleBudgetExceeded {
                budget: ORACLE_BUDGET,
            });
        }
        prefix.push(items[idx]);
        let support = db
            .transactions()
            .iter()
            .filter(|t| t.contains_all(prefix))
            .count() as Support;
        if support >= min_count {
            out.push(Itemset::new(prefix.clone(), support));
            if prefix.len() < cap {
                extend(db, items, idx + 1, cap, min_count, prefix, budget, out)?;
            }
        }
        prefix.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::d1;

    #[test]
    fn d1_min3_golden_set() {
        let out = oracle_mine(&d1(), 3, None).unwrap();
        assert_eq!(out.len(), 10);
        let singles = out.iter().filter(|i| i.items.len() == 1).count();
        let pairs = out.iter().filter(|i| i.items.len() == 2).count();
        assert_eq!((singles, pairs), (4, 6));
        assert!(out
            .iter()
            .all(|i| i.support == if i.items.len() == 1 { 4 } else { 3 }));
    }

    #[test]
    fn empty_db_yields_nothing() {
        let db = TransactionDB::new(vec![]);
        assert!(oracle_mine(&db, 1, None).unwrap().is_empty());
    }

    #[test]
    fn max_len_one_returns_frequent_items_only() {
        let out = oracle_mine(&d1(), 1, Some(1)).unwrap();
        let got: Vec<(Vec<ItemId>, Support)> =
            out.into_iter().map(|i| (i.items, i.support)).collect();
        assert_eq!(
            got,
            vec![
                (vec![1], 4),
                (vec![2], 4),
                (vec![3], 4),
                (vec![4], 4),
            ]
        );
    }
}
