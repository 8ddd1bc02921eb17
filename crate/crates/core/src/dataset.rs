//! Horizontal transaction databases: FIMI ingestion, item counting,
//! transaction filtering, and a synthetic generator.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::{ItemId, Support};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: invalid item token {token:?}")]
    InvalidToken {
        path: PathBuf,
        line: usize,
        token: String,
    },
    #[error("{path}:{line}: negative item id {token:?}")]
    NegativeItem {
        path: PathBuf,
        line: usize,
        token: String,
    },
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
}

/// One transaction: a strictly ascending list of item ids.
///
/// Duplicates are removed on construction; supports are set-semantic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transaction {
    items: Vec<ItemId>,
}

impl Transaction {
    /// Canonicalizes `items`: sorts ascending and drops duplicates.
    pub fn new(mut items: Vec<ItemId>) -> Self {
        items.sort_unstable();
        items.dedup();
        Transaction { items }
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.items.binary_search(&item).is_ok()
    }

    /// True when every item of `itemset` (sorted ascending) occurs here.
    pub fn contains_all(&self, itemset: &[ItemId]) -> bool {
        let mut pos = 0;
        for &wanted in itemset {
            match self.items[pos..].binary_search(&wanted) {
                Ok(idx) => pos += idx + 1,
                Err(_) => return false,
            }
        }
        true
    }
}

/// Horizontal database. Transaction order equals file line order; tids are
/// derived from position (1-based) wherever a vertical view is built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionDB {
    transactions: Vec<Transaction>,
    item_universe_max: Option<ItemId>,
}

impl TransactionDB {
    pub fn new(transactions: Vec<Transaction>) -> Self {
        let item_universe_max = transactions
            .iter()
            .filter_map(|t| t.items().last().copied())
            .max();
        TransactionDB {
            transactions,
            item_universe_max,
        }
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn num_transactions(&self) -> usize {
        self.transactions.len()
    }

    pub fn item_universe_max(&self) -> Option<ItemId> {
        self.item_universe_max
    }

    /// Concatenates the database with itself `factor` times, used by the
    /// dataset-size scaling suite. Every itemset keeps its relative support.
    pub fn replicate(&self, factor: usize) -> TransactionDB {
        let mut transactions = Vec::with_capacity(self.transactions.len() * factor);
        for _ in 0..factor {
            transactions.extend(self.transactions.iter().cloned());
        }
        TransactionDB {
            transactions,
            item_universe_max: self.item_universe_max,
        }
    }

    /// Writes the database in FIMI format: one transaction per line, items as
    /// space-separated decimal integers, newline-terminated, no header.
    pub fn write_fimi<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for t in &self.transactions {
            let mut first = true;
            for &item in t.items() {
                if !first {
                    w.write_all(b" ")?;
                }
                write!(w, "{item}")?;
                first = false;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save_fimi(&self, path: &Path) -> Result<(), DatasetError> {
        let file = File::create(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        self.write_fimi(&mut w)
            .and_then(|()| w.flush())
            .map_err(|source| DatasetError::Io {
                path: path.to_path_buf(),
                source,
            })
    }
}

/// Loads a FIMI file: whitespace-separated non-negative integers, one
/// transaction per line. Blank lines are skipped; items are deduplicated
/// and sorted per transaction.
pub fn load_fimi(path: &Path) -> Result<TransactionDB, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut transactions = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let line_no = idx + 1;
        let mut items = Vec::new();
        for token in line.split_whitespace() {
            match token.parse::<ItemId>() {
                Ok(item) => items.push(item),
                Err(_) => {
                    return Err(if token.parse::<i64>().is_ok_and(|v| v < 0) {
                        DatasetError::NegativeItem {
                            path: path.to_path_buf(),
                            line: line_no,
                            token: token.to_string(),
                        }
                    } else {
                        DatasetError::InvalidToken {
                            path: path.to_path_buf(),
                            line: line_no,
                            token: token.to_string(),
                        }
                    });
                }
            }
        }
        if !items.is_empty() {
            transactions.push(Transaction::new(items));
        }
    }
    Ok(TransactionDB::new(transactions))
}

/// Frequent items with their supports, ordered support-ascending
/// (ties broken by ascending item id). The position of an item in this
/// order is its *rank*; ranks index the triangular matrix and name
/// equivalence classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequentItemTable {
    entries: Vec<(ItemId, Support)>,
    rank_of: HashMap<ItemId, usize>,
}

impl FrequentItemTable {
    /// Builds the table from raw `(item, count)` pairs: drops entries below
    /// `min_count` and sorts by `(support, item)`.
    pub fn from_counts(
        counts: impl IntoIterator<Item = (ItemId, Support)>,
        min_count: Support,
    ) -> Self {
        let mut entries: Vec<(ItemId, Support)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        entries.sort_unstable_by_key(|&(item, support)| (support, item));
        let rank_of = entries
            .iter()
            .enumerate()
            .map(|(rank, &(item, _))| (item, rank))
            .collect();
        FrequentItemTable { entries, rank_of }
    }

    pub fn entries(&self) -> &[(ItemId, Support)] {
        &self.entries
    }

    /// Items in support-ascending order.
    pub fn items_in_order(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.entries.iter().map(|&(item, _)| item)
    }

    pub fn rank(&self, item: ItemId) -> Option<usize> {
        self.rank_of.get(&item).copied()
    }

    pub fn support(&self, item: ItemId) -> Option<Support> {
        self.rank(item).map(|r| self.entries[r].1)
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.rank_of.contains_key(&item)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Counts item occurrences over the whole database and keeps the items
/// occurring in at least `min_count` transactions.
pub fn count_items(db: &TransactionDB, min_count: Support) -> FrequentItemTable {
    assert!(min_count >= 1, "min_count must be at least 1");
    let mut counts: HashMap<ItemId, Support> = HashMap::new();
    for t in db.transactions() {
        for &item in t.items() {
            *counts.entry(item).or_insert(0) += 1;
        }
    }
    FrequentItemTable::from_counts(counts, min_count)
}

/// Projects every transaction onto the frequent items; transactions that
/// become empty are dropped, the relative order of survivors is preserved.
pub fn filter_transactions(db: &TransactionDB, freq: &FrequentItemTable) -> TransactionDB {
    let transactions = db
        .transactions()
        .iter()
        .filter_map(|t| {
            let items: Vec<ItemId> = t
                .items()
                .iter()
                .copied()
                .filter(|&item| freq.contains(item))
                .collect();
            // Already sorted and deduplicated: projection of a canonical list.
            if items.is_empty() {
                None
            } else {
                Some(Transaction { items })
            }
        })
        .collect();
    TransactionDB::new(transactions)
}

/// Generates a synthetic database by sampling transactions from a pool of
/// Poisson-length patterns, so correlated itemsets exist. Deterministic for
/// a fixed seed. Pattern weights are exponentially skewed, which yields the
/// support skew the partition-balance experiments rely on.
pub fn generate_synthetic(
    num_transactions: usize,
    num_items: usize,
    avg_width: usize,
    pattern_len: usize,
    seed: u64,
) -> Result<TransactionDB, DatasetError> {
    if num_transactions < 1 || num_items < 1 || avg_width < 1 || pattern_len < 1 {
        return Err(DatasetError::InvalidParams(
            "all parameters must be at least 1".into(),
        ));
    }
    if avg_width > num_items {
        return Err(DatasetError::InvalidParams(format!(
            "avg_width ({avg_width}) exceeds num_items ({num_items})"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width_dist = Poisson::new(avg_width as f64).expect("avg_width >= 1");
    let len_dist = Poisson::new(pattern_len as f64).expect("pattern_len >= 1");

    // Pattern pool sized so most items appear in some pattern.
    let num_patterns = (num_items / pattern_len).clamp(4, 2000);
    let mut patterns: Vec<Vec<ItemId>> = Vec::with_capacity(num_patterns);
    for _ in 0..num_patterns {
        let len = (len_dist.sample(&mut rng) as usize).clamp(1, num_items);
        let mut items = Vec::with_capacity(len);
        while items.len() < len {
            let item = rng.random_range(0..num_items) as ItemId;
            if !items.contains(&item) {
                items.push(item);
            }
        }
        patterns.push(items);
    }
    // Exponentially skewed selection weights, as cumulative thresholds.
    let weights: Vec<f64> = (0..num_patterns)
        .map(|_| -(rng.random::<f64>().max(f64::MIN_POSITIVE)).ln())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut cumulative = Vec::with_capacity(num_patterns);
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cumulative.push(acc);
    }

    let mut transactions = Vec::with_capacity(num_transactions);
    for _ in 0..num_transactions {
        let width = (width_dist.sample(&mut rng) as usize).clamp(1, num_items);
        let mut items: Vec<ItemId> = Vec::with_capacity(width);
        let mut stalls = 0;
        while items.len() < width && stalls < 16 {
            let roll: f64 = rng.random();
            let pick = cumulative.partition_point(|&c| c < roll);
            let pattern = &patterns[pick.min(num_patterns - 1)];
            let before = items.len();
            for &item in pattern {
                if items.len() >= width {
                    break;
                }
                if !items.contains(&item) {
                    items.push(item);
                }
            }
            if items.len() == before {
                stalls += 1;
            }
        }
        // Pool exhausted below the target width: top up with uniform items.
        while items.len() < width {
            let item = rng.random_range(0..num_items) as ItemId;
            if !items.contains(&item) {
                items.push(item);
            }
        }
        transactions.push(Transaction::new(items));
    }
    Ok(TransactionDB::new(transactions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::d1;

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn load_fimi_d1() {
        let f = write_temp("1 2 3\n1 2 4\n1 3 4\n2 3 4\n1 2 3 4\n");
        let db = load_fimi(f.path()).unwrap();
        assert_eq!(db.num_transactions(), 5);
        assert_eq!(db.item_universe_max(), Some(4));
        assert_eq!(db, d1());
    }

    #[test]
    fn load_fimi_empty_file() {
        let f = write_temp("");
        let db = load_fimi(f.path()).unwrap();
        assert_eq!(db.num_transactions(), 0);
        assert_eq!(db.item_universe_max(), None);
    }

    #[test]
    fn load_fimi_dedups_and_sorts() {
        let f = write_temp("3 1 2 2\n");
        let db = load_fimi(f.path()).unwrap();
        assert_eq!(db.transactions()[0].items(), &[1, 2, 3]);
    }

    #[test]
    fn load_fimi_skips_blank_lines() {
        let f = write_temp("1 2\n\n3\n");
        let db = load_fimi(f.path()).unwrap();
        assert_eq!(db.num_transactions(), 2);
    }

    #[test]
    fn load_fimi_rejects_bad_token_with_line() {
        let f = write_temp("1 2\n3 x 4\n");
        match load_fimi(f.path()) {
            Err(DatasetError::InvalidToken { line, token, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(token, "x");
            }
            other => panic!("expected InvalidToken, got {other:?}"),
        }
    }

    #[test]
    fn load_fimi_rejects_negative_item() {
        let f = write_temp("1 -5\n");
        match load_fimi(f.path()) {
            Err(DatasetError::NegativeItem { line, token, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(token, "-5");
            }
            other => panic!("expected NegativeItem, got {other:?}"),
        }
    }

    #[test]
    fn count_items_d1_min3() {
        let table = count_items(&d1(), 3);
        assert_eq!(table.entries(), &[(1, 4), (2, 4), (3, 4), (4, 4)]);
        assert_eq!(table.rank(1), Some(0));
        assert_eq!(table.rank(4), Some(3));
    }

    #[test]
    fn count_items_d1_min5_empty() {
        assert!(count_items(&d1(), 5).is_empty());
    }

    #[test]
    fn count_items_min1_counts_everything() {
        let db = TransactionDB::new(vec![
            Transaction::new(vec![7]),
            Transaction::new(vec![7, 9]),
        ]);
        let table = count_items(&db, 1);
        assert_eq!(table.entries(), &[(9, 1), (7, 2)]);
    }

    #[test]
    fn frequent_table_ties_break_by_item_id() {
        let table = FrequentItemTable::from_counts(vec![(9, 2), (3, 2), (5, 1)], 1);
        assert_eq!(table.entries(), &[(5, 1), (3, 2), (9, 2)]);
    }

    #[test]
    fn filter_keeps_d1_unchanged_when_all_frequent() {
        let db = d1();
        let freq = count_items(&db, 3);
        assert_eq!(filter_transactions(&db, &freq), db);
    }

    #[test]
    fn filter_with_empty_table_empties_db() {
        let db = d1();
        let freq = count_items(&db, 5);
        assert_eq!(filter_transactions(&db, &freq).num_transactions(), 0);
    }

    #[test]
    fn filter_drops_emptied_transactions() {
        let db = TransactionDB::new(vec![
            Transaction::new(vec![1, 9]),
            Transaction::new(vec![9]),
            Transaction::new(vec![1]),
        ]);
        let freq = FrequentItemTable::from_counts(vec![(1, 2)], 1);
        let filtered = filter_transactions(&db, &freq);
        assert_eq!(filtered.num_transactions(), 2);
        assert!(filtered.transactions().iter().all(|t| t.items() == [1]));
    }

    #[test]
    fn filter_is_idempotent() {
        let db = generate_synthetic(200, 40, 6, 3, 7).unwrap();
        let freq = count_items(&db, 10);
        let once = filter_transactions(&db, &freq);
        let twice = filter_transactions(&once, &freq);
        assert_eq!(once, twice);
    }

    #[test]
    fn filter_preserves_frequent_supports() {
        let db = generate_synthetic(300, 50, 8, 4, 11).unwrap();
        let freq = count_items(&db, 15);
        let filtered = filter_transactions(&db, &freq);
        for &(item, support) in freq.entries() {
            let recount = filtered
                .transactions()
                .iter()
                .filter(|t| t.contains(item))
                .count() as Support;
            assert_eq!(recount, support);
        }
    }

    #[test]
    fn fimi_round_trip() {
        let db = generate_synthetic(150, 60, 7, 3, 3).unwrap();
        let mut buf = Vec::new();
        db.write_fimi(&mut buf).unwrap();
        let f = write_temp(std::str::from_utf8(&buf).unwrap());
        assert_eq!(load_fimi(f.path()).unwrap(), db);
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = generate_synthetic(1000, 100, 10, 4, 42).unwrap();
        let b = generate_synthetic(1000, 100, 10, 4, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn synthetic_mean_width_near_target() {
        let db = generate_synthetic(100, 870, 10, 4, 1).unwrap();
        let mean = db
            .transactions()
            .iter()
            .map(|t| t.len() as f64)
            .sum::<f64>()
            / db.num_transactions() as f64;
        assert!((8.0..=12.0).contains(&mean), "mean width {mean}");
    }

    #[test]
    fn synthetic_single_transaction() {
        let db = generate_synthetic(1, 5, 5, 2, 0).unwrap();
        assert_eq!(db.num_transactions(), 1);
    }

    #[test]
    fn synthetic_rejects_bad_params() {
        assert!(generate_synthetic(0, 5, 2, 2, 0).is_err());
        assert!(generate_synthetic(10, 5, 6, 2, 0).is_err());
    }
}
