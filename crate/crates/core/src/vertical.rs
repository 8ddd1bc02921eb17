//! Vertical tidset database: per-item sorted transaction-id lists, with the
//! intersection primitive the whole miner is built on.

use std::collections::HashMap;

use crate::dataset::{FrequentItemTable, TransactionDB};
use crate::{ItemId, Support, Tid};

/// Strictly ascending list of 1-based transaction ids. Its length is the
/// support of the item or itemset it belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tidset {
    tids: Vec<Tid>,
}

impl Tidset {
    /// Wraps a strictly ascending tid list.
    pub fn new(tids: Vec<Tid>) -> Self {
        debug_assert!(tids.windows(2).all(|w| w[0] < w[1]), "tids must ascend");
        Tidset { tids }
    }

    pub fn support(&self) -> Support {
        self.tids.len() as Support
    }

    pub fn len(&self) -> usize {
        self.tids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tids.is_empty()
    }

    pub fn as_slice(&self) -> &[Tid] {
        &self.tids
    }

    /// Sorted intersection. Linear merge, with a galloping scan when one
    /// side is much shorter than the other.
    pub fn intersect(&self, other: &Tidset) -> Tidset {
        let (small, large) = if self.len() <= other.len() {
            (&self.tids, &other.tids)
        } else {
            (&other.tids, &self.tids)
        };
        if small.is_empty() {
            return Tidset::default();
        }
        let out = if large.len() / small.len() >= 32 {
            gallop_intersect(small, large)
        } else {
            merge_intersect(small, large)
        };
        Tidset { tids: out }
    }
}

fn merge_intersect(a: &[Tid], b: &[Tid]) -> Vec<Tid> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// For each element of the (short) `a`, exponential search in the remaining
/// tail of `b`.
fn gallop_intersect(a: &[Tid], b: &[Tid]) -> Vec<Tid> {
    let mut out = Vec::with_capacity(a.len());
    let mut base = 0;
    for &x in a {
        let tail = &b[base..];
        if tail.is_empty() {
            break;
        }
        let mut bound = 1;
        while bound < tail.len() && tail[bound] < x {
            bound *= 2;
        }
        let lo = bound / 2;
        let hi = bound.min(tail.len() - 1);
        match tail[lo..=hi].binary_search(&x) {
            Ok(idx) => {
                out.push(x);
                base += lo + idx + 1;
            }
            Err(idx) => base += lo + idx,
        }
    }
    out
}

/// Vertical database over the frequent items, with the support-ascending
/// item order the class construction walks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerticalDb {
    tidsets: HashMap<ItemId, Tidset>,
    item_order: Vec<ItemId>,
}

impl VerticalDb {
    pub fn from_parts(tidsets: HashMap<ItemId, Tidset>, item_order: Vec<ItemId>) -> Self {
        debug_assert!(item_order.iter().all(|i| tidsets.contains_key(i)));
        VerticalDb {
            tidsets,
            item_order,
        }
    }

    pub fn tidset(&self, item: ItemId) -> Option<&Tidset> {
        self.tidsets.get(&item)
    }

    /// Support-ascending item list (ties on ascending item id).
    pub fn item_order(&self) -> &[ItemId] {
        &self.item_order
    }

    pub fn num_items(&self) -> usize {
        self.item_order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_order.is_empty()
    }
}

/// Builds the vertical database by a single scan: `tidset(i)` collects the
/// 1-based positions of the transactions containing `i`, for each frequent
/// item. The item order is copied from `freq`.
pub fn build_vertical(db: &TransactionDB, freq: &FrequentItemTable) -> VerticalDb {
    let mut tidsets: HashMap<ItemId, Vec<Tid>> = freq
        .items_in_order()
        .map(|item| (item, Vec::new()))
        .collect();
    for (idx, t) in db.transactions().iter().enumerate() {
        let tid = idx as Tid + 1;
        for &item in t.items() {
            if let Some(tids) = tidsets.get_mut(&item) {
                tids.push(tid);
            }
        }
    }
    let tidsets = tidsets
        .into_iter()
        .map(|(item, tids)| (item, Tidset::new(tids)))
        .collect();
    VerticalDb::from_parts(tidsets, freq.items_in_order().collect())
}
