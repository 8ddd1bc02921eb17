//! Mining algorithms: the bottom-up tidset recursion, the five pipeline
//! variants `v1`..`v5`, a level-wise Apriori baseline, and a brute-force
//! oracle. All of them emit the same frequent itemset set for the same
//! database and minimum support; they differ in timings and work placement.

mod apriori;
mod bottom_up;
mod oracle;
mod pipelines;

pub use bottom_up::bottom_up;
pub use oracle::oracle_mine;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::dataset::{DatasetError, TransactionDB};
use crate::equivclass::BalanceMetric;
use crate::exec::WorkerPool;
use crate::{ItemId, Support};

#[derive(Debug, Error)]
pub enum MinerError {
    #[error("invalid mining configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("bottom-up recursion exceeded the depth limit of {limit}")]
    RecursionDepthExceeded { limit: usize },
    #[error("oracle enumeration exceeded {budget} candidates; cap the itemset length")]
    OracleBudgetExceeded { budget: u64 },
}

/// A frequent itemset: strictly ascending items plus the exact support.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Itemset {
    pub items: Vec<ItemId>,
    pub support: Support,
}

impl Itemset {
    /// Builds an itemset, sorting the items ascending.
    pub fn new(mut items: Vec<ItemId>, support: Support) -> Self {
        items.sort_unstable();
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        Itemset { items, support }
    }
}

/// Sorts itemsets into the canonical output order: ascending by length,
/// then lexicographically by items.
pub fn canonical_sort(itemsets: &mut [Itemset]) {
    itemsets.sort_unstable_by(|a, b| {
        a.items
            .len()
            .cmp(&b.items.len())
            .then_with(|| a.items.cmp(&b.items))
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Apriori,
    V1,
    V2,
    V3,
    V4,
    V5,
    Oracle,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Apriori,
        Variant::V1,
        Variant::V2,
        Variant::V3,
        Variant::V4,
        Variant::V5,
        Variant::Oracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Apriori => "apriori",
            Variant::V1 => "v1",
            Variant::V2 => "v2",
            Variant::V3 => "v3",
            Variant::V4 => "v4",
            Variant::V5 => "v5",
            Variant::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "apriori" => Ok(Variant::Apriori),
            "v1" => Ok(Variant::V1),
            "v2" => Ok(Variant::V2),
            "v3" => Ok(Variant::V3),
            "v4" => Ok(Variant::V4),
            "v5" => Ok(Variant::V5),
            "oracle" => Ok(Variant::Oracle),
            other => Err(format!(
                "unknown algorithm {other:?} (expected apriori, v1..v5, or oracle)"
            )),
        }
    }
}

/// Whether the pair-count matrix short-circuits class construction.
/// `Auto` enables it: rank indexing bounds the matrix size by the number of
/// frequent items, so there is no dataset where it must be avoided. `On` and
/// `Off` force the choice for fidelity experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriMatrixMode {
    Auto,
    On,
    Off,
}

impl TriMatrixMode {
    pub fn enabled(&self) -> bool {
        !matches!(self, TriMatrixMode::Off)
    }

    pub fn name(&self) -> &'static str {
        match self {
            TriMatrixMode::Auto => "auto",
            TriMatrixMode::On => "on",
            TriMatrixMode::Off => "off",
        }
    }
}

impl fmt::Display for TriMatrixMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TriMatrixMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(TriMatrixMode::Auto),
            "on" => Ok(TriMatrixMode::On),
            "off" => Ok(TriMatrixMode::Off),
            other => Err(format!(
                "unknown tri-matrix mode {other:?} (expected auto, on, or off)"
            )),
        }
    }
}

/// Minimum support, either as a fraction of the transaction count or as an
/// absolute count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MinSupport {
    Relative(f64),
    Absolute(Support),
}

impl MinSupport {
    /// Absolute threshold for a database of `num_transactions`, rounding the
    /// relative form up and never below 1.
    pub fn to_min_count(&self, num_transactions: usize) -> Support {
        match *self {
            MinSupport::Relative(f) => {
                (((f * num_transactions as f64).ceil()) as Support).max(1)
            }
            MinSupport::Absolute(c) => c,
        }
    }
}

impl fmt::Display for MinSupport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MinSupport::Relative(v) => write!(f, "{v}"),
            MinSupport::Absolute(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MiningConfig {
    pub variant: Variant,
    pub min_support: MinSupport,
    /// Partition count for the hash partitioners of `v4`/`v5`.
    pub partitions: usize,
    pub tri_matrix: TriMatrixMode,
    pub workers: usize,
    /// Itemset length cap for the oracle's enumeration.
    pub max_oracle_len: Option<usize>,
    /// Hard cap on the bottom-up recursion depth.
    pub depth_limit: usize,
}

impl MiningConfig {
    pub fn new(variant: Variant, min_support: MinSupport) -> Self {
        MiningConfig {
            variant,
            min_support,
            partitions: 10,
            tri_matrix: TriMatrixMode::Auto,
            workers: WorkerPool::with_default_parallelism().workers(),
            max_oracle_len: None,
            depth_limit: 64,
        }
    }

    pub fn validate(&self) -> Result<(), MinerError> {
        match self.min_support {
            MinSupport::Relative(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(MinerError::Config(format!(
                    "relative min support must be in (0, 1], got {f}"
                )));
            }
            MinSupport::Absolute(c) if c < 1 => {
                return Err(MinerError::Config(
                    "absolute min support must be at least 1".into(),
                ));
            }
            _ => {}
        }
        if self.partitions < 1 {
            return Err(MinerError::Config("partitions must be at least 1".into()));
        }
        if self.workers < 1 {
            return Err(MinerError::Config("workers must be at least 1".into()));
        }
        if self.depth_limit < 1 {
            return Err(MinerError::Config("depth limit must be at least 1".into()));
        }
        if self.max_oracle_len == Some(0) {
            return Err(MinerError::Config(
                "oracle length cap must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Wall-clock per-phase durations in milliseconds. The slots carry the same
/// meaning for every variant so runs are comparable:
/// frequent-item discovery, transaction filtering plus pair counting,
/// vertical database construction, class construction plus mining. Phases a
/// variant does not have stay at zero; the Apriori baseline reports its
/// whole level-wise loop in the last slot, the oracle its enumeration in the
/// first.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimings {
    pub phase_ms: [f64; 4],
}

#[derive(Debug, Clone)]
pub struct MiningResult {
    /// Frequent itemsets in canonical order (length, then items).
    pub itemsets: Vec<Itemset>,
    pub timings: PhaseTimings,
    pub total_ms: f64,
    /// Per-partition atom totals of the class assignment, when one was made.
    pub partition_balance: Option<Vec<u64>>,
    pub balance_cv: Option<f64>,
    pub variant: Variant,
    pub min_count: Support,
    pub num_transactions: usize,
    pub partitions: usize,
    pub tri_matrix: TriMatrixMode,
    pub workers: usize,
}

impl MiningResult {
    pub fn num_frequent(&self) -> usize {
        self.itemsets.len()
    }

    /// Itemsets keyed for set comparison.
    pub fn to_set(&self) -> BTreeMap<Vec<ItemId>, Support> {
        self.itemsets
            .iter()
            .map(|is| (is.items.clone(), is.support))
            .collect()
    }

    /// Writes the itemsets one per line: items ascending, space-separated,
    /// followed by ` #SUP: <count>`. The canonical itemset order makes the
    /// output bit-reproducible for a fixed configuration.
    pub fn write_itemsets<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for itemset in &self.itemsets {
            let mut first = true;
            for item in &itemset.items {
                if !first {
                    w.write_all(b" ")?;
                }
                write!(w, "{item}")?;
                first = false;
            }
            writeln!(w, " #SUP: {}", itemset.support)?;
        }
        Ok(())
    }
}

pub(crate) struct PipelineOutput {
    pub itemsets: Vec<Itemset>,
    pub phase_ms: [f64; 4],
    pub balance: Option<BalanceMetric>,
}

/// Runs the configured algorithm over the database. The frequent itemset set
/// is identical across all variants, the baseline, and the oracle; only the
/// timings and the partition balance differ.
pub fn mine(db: &TransactionDB, cfg: &MiningConfig) -> Result<MiningResult, MinerError> {
    cfg.validate()?;
    let pool = WorkerPool::new(cfg.workers).expect("validated worker count");
    let min_count = cfg.min_support.to_min_count(db.num_transactions());
    let tri_on = cfg.tri_matrix.enabled();

    let start = Instant::now();
    let output = match cfg.variant {
        Variant::Apriori => apriori::run(db, min_count, &pool)?,
        Variant::Oracle => {
            let itemsets = oracle::oracle_mine(db, min_count, cfg.max_oracle_len)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            PipelineOutput {
                itemsets,
                phase_ms: [ms, 0.0, 0.0, 0.0],
                balance: None,
            }
        }
        Variant::V1 => pipelines::run_v1(db, min_count, tri_on, &pool, cfg.depth_limit)?,
        Variant::V2 => pipelines::run_filtered(
            db,
            min_count,
            tri_on,
            pipelines::VerticalStrategy::CoalesceGroup,
            pipelines::ClassPartitioner::Default,
            &pool,
            cfg.depth_limit,
        )?,
        Variant::V3 => pipelines::run_filtered(
            db,
            min_count,
            tri_on,
            pipelines::VerticalStrategy::AccumulatorMap,
            pipelines::ClassPartitioner::Default,
            &pool,
            cfg.depth_limit,
        )?,
        Variant::V4 => pipelines::run_filtered(
            db,
            min_count,
            tri_on,
            pipelines::VerticalStrategy::AccumulatorMap,
            pipelines::ClassPartitioner::Hash(cfg.partitions),
            &pool,
            cfg.depth_limit,
        )?,
        Variant::V5 => pipelines::run_filtered(
            db,
            min_count,
            tri_on,
            pipelines::VerticalStrategy::AccumulatorMap,
            pipelines::ClassPartitioner::ReverseHash(cfg.partitions),
            &pool,
            cfg.depth_limit,
        )?,
    };
    let total_ms = start.elapsed().as_secs_f64() * 1e3;

    let mut itemsets = output.itemsets;
    canonical_sort(&mut itemsets);
    debug_assert!(
        itemsets.windows(2).all(|w| w[0].items != w[1].items),
        "duplicate itemsets in mining output"
    );
    let (partition_balance, balance_cv) = match output.balance {
        Some(metric) => (Some(metric.totals), Some(metric.cv)),
        None => (None, None),
    };
    Ok(MiningResult {
        itemsets,
        timings: PhaseTimings {
            phase_ms: output.phase_ms,
        },
        total_ms,
        partition_balance,
        balance_cv,
        variant: cfg.variant,
        min_count,
        num_transactions: db.num_transactions(),
        partitions: cfg.partitions,
        tri_matrix: cfg.tri_matrix,
        workers: cfg.workers,
    })
}

/// Loads a FIMI file and mines it.
pub fn mine_path(path: &Path, cfg: &MiningConfig) -> Result<MiningResult, MinerError> {
    let db = crate::dataset::load_fimi(path)?;
    mine(&db, cfg)
}
