//! Benchmark harness: run one algorithm or a sweep over a FIMI dataset,
//! write the frequent itemsets, and append one CSV row of timings and
//! metrics per run.

use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::Parser;

use eclat_core::dataset::{self, DatasetError};
use eclat_core::exec::WorkerPool;
use eclat_core::miner::{
    mine, MinSupport, MinerError, MiningConfig, MiningResult, TriMatrixMode, Variant,
};

const CSV_HEADER: &str = "dataset,variant,min_support,p,tri_matrix,workers,num_frequent,\
total_ms,phase1_ms,phase2_ms,phase3_ms,phase4_ms,balance_cv";

#[derive(Parser, Debug)]
#[command(
    name = "eclat-bench",
    about = "Frequent itemset mining benchmark harness",
    disable_help_subcommand = true
)]
struct Args {
    /// FIMI dataset to mine.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Algorithm, or a comma list for sweeps: apriori, v1..v5, oracle.
    #[arg(long)]
    algorithm: Option<String>,

    /// Relative minimum support in (0, 1].
    #[arg(long)]
    min_sup: Option<f64>,

    /// Absolute minimum support count.
    #[arg(long)]
    min_count: Option<u32>,

    /// Partition count for the v4/v5 class partitioners.
    #[arg(long, default_value_t = 10)]
    partitions: usize,

    /// Pair-count matrix mode: auto, on, or off.
    #[arg(long, default_value = "auto")]
    tri_matrix: String,

    /// Worker pool size; falls back to ECLAT_WORKERS, then to the hardware.
    #[arg(long)]
    workers: Option<usize>,

    /// Itemset output file (or the dataset file with --generate).
    #[arg(long)]
    output: Option<PathBuf>,

    /// CSV file to append one row per run; the header is written if absent.
    #[arg(long)]
    stats: Option<PathBuf>,

    /// Comma list of relative supports to sweep.
    #[arg(long)]
    sweep_min_sup: Option<String>,

    /// Comma list of dataset replication factors, e.g. 1,2,4.
    #[arg(long)]
    scale_factors: Option<String>,

    /// Unrecorded repetitions before each measured run.
    #[arg(long, default_value_t = 0)]
    warmup: usize,

    /// Seed for --generate.
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Generate a synthetic dataset to --output instead of mining.
    /// Format T,I,D,N: average transaction width, average pattern length,
    /// transaction count, item count.
    #[arg(long)]
    generate: Option<String>,
}

enum CliError {
    Config(String),
    Dataset(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Dataset(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Dataset(m) => write!(f, "dataset error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Dataset(e.to_string())
    }
}

impl From<MinerError> for CliError {
    fn from(e: MinerError) -> Self {
        match e {
            MinerError::Config(m) => CliError::Config(m),
            MinerError::Dataset(d) => CliError::Dataset(d.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(args: Args) -> Result<(), CliError> {
    if let Some(shape) = &args.generate {
        return generate_dataset(shape, &args);
    }

    let algorithms = parse_algorithms(
        args.algorithm
            .as_deref()
            .ok_or_else(|| config_err("--algorithm is required"))?,
    )?;
    let supports = parse_supports(&args)?;
    let factors = match &args.scale_factors {
        Some(list) => parse_list::<usize>(list, "--scale-factors")?,
        None => vec![1],
    };
    if factors.iter().any(|&f| f < 1) {
        return Err(config_err("--scale-factors entries must be at least 1"));
    }
    let tri_matrix = TriMatrixMode::from_str(&args.tri_matrix).map_err(config_err)?;
    let workers = resolve_workers(&args)?;
    if args.partitions < 1 {
        return Err(config_err("--partitions must be at least 1"));
    }

    let input = args
        .input
        .as_deref()
        .ok_or_else(|| config_err("--input is required"))?;
    let base = dataset::load_fimi(input)?;

    let multi_run = algorithms.len() * supports.len() * factors.len() > 1;
    let mut stats = match &args.stats {
        Some(path) => Some(StatsWriter::open(path)?),
        None => None,
    };

    for &factor in &factors {
        let db = if factor == 1 {
            base.clone()
        } else {
            base.replicate(factor)
        };
        let label = if factor == 1 {
            input.display().to_string()
        } else {
            format!("{}x{factor}", input.display())
        };
        for &support in &supports {
            for &variant in &algorithms {
                let mut cfg = MiningConfig::new(variant, support);
                cfg.partitions = args.partitions;
                cfg.tri_matrix = tri_matrix;
                cfg.workers = workers;
                for _ in 0..args.warmup {
                    mine(&db, &cfg)?;
                }
                let result = mine(&db, &cfg)?;
                println!(
                    "{label} {variant} min_support={support}: {} frequent itemsets in {:.1} ms",
                    result.num_frequent(),
                    result.total_ms
                );
                if let Some(base_path) = &args.output {
                    let path = output_path(base_path, multi_run, variant, support, factor);
                    write_itemsets(&result, &path)?;
                }
                if let Some(writer) = &mut stats {
                    writer.append(&label, &result, support)?;
                }
            }
        }
    }
    Ok(())
}

fn generate_dataset(shape: &str, args: &Args) -> Result<(), CliError> {
    let fields = parse_list::<usize>(shape, "--generate")?;
    if fields.len() != 4 {
        return Err(config_err(
            "--generate expects T,I,D,N (width, pattern length, transactions, items)",
        ));
    }
    let (avg_width, pattern_len, num_transactions, num_items) =
        (fields[0], fields[1], fields[2], fields[3]);
    let output = args
        .output
        .as_deref()
        .ok_or_else(|| config_err("--generate requires --output"))?;
    let db = dataset::generate_synthetic(
        num_transactions,
        num_items,
        avg_width,
        pattern_len,
        args.seed,
    )?;
    db.save_fimi(output)?;
    println!(
        "generated {} transactions over {} items to {}",
        db.num_transactions(),
        num_items,
        output.display()
    );
    Ok(())
}

fn parse_algorithms(list: &str) -> Result<Vec<Variant>, CliError> {
    let variants: Vec<Variant> = list
        .split(',')
        .map(|s| Variant::from_str(s.trim()).map_err(config_err))
        .collect::<Result<_, _>>()?;
    if variants.is_empty() {
        return Err(config_err("--algorithm list is empty"));
    }
    Ok(variants)
}

fn parse_supports(args: &Args) -> Result<Vec<MinSupport>, CliError> {
    let given = [
        args.min_sup.is_some(),
        args.min_count.is_some(),
        args.sweep_min_sup.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if given != 1 {
        return Err(config_err(
            "exactly one of --min-sup, --min-count, or --sweep-min-sup is required",
        ));
    }
    let supports: Vec<MinSupport> = if let Some(f) = args.min_sup {
        vec![MinSupport::Relative(f)]
    } else if let Some(c) = args.min_count {
        vec![MinSupport::Absolute(c)]
    } else {
        parse_list::<f64>(args.sweep_min_sup.as_deref().unwrap(), "--sweep-min-sup")?
            .into_iter()
            .map(MinSupport::Relative)
            .collect()
    };
    for s in &supports {
        match *s {
            MinSupport::Relative(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(config_err(format!(
                    "relative min support must be in (0, 1], got {f}"
                )));
            }
            MinSupport::Absolute(c) if c < 1 => {
                return Err(config_err("--min-count must be at least 1"));
            }
            _ => {}
        }
    }
    Ok(supports)
}

fn parse_list<T: FromStr>(list: &str, flag: &str) -> Result<Vec<T>, CliError> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| config_err(format!("{flag}: invalid entry {s:?}")))
        })
        .collect()
}

fn resolve_workers(args: &Args) -> Result<usize, CliError> {
    let workers = match args.workers {
        Some(w) => w,
        None => match std::env::var("ECLAT_WORKERS") {
            Ok(value) => value
                .parse::<usize>()
                .map_err(|_| config_err(format!("ECLAT_WORKERS: invalid value {value:?}")))?,
            Err(_) => WorkerPool::with_default_parallelism().workers(),
        },
    };
    if workers < 1 {
        return Err(config_err("--workers must be at least 1"));
    }
    Ok(workers)
}

/// For a single run the output path is used as given; sweep runs tag it with
/// the variant, support, and replication factor so files do not clobber each
/// other.
fn output_path(
    base: &Path,
    multi_run: bool,
    variant: Variant,
    support: MinSupport,
    factor: usize,
) -> PathBuf {
    if !multi_run {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "itemsets".to_string());
    let ext = base
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    let factor_tag = if factor > 1 {
        format!(".x{factor}")
    } else {
        String::new()
    };
    base.with_file_name(format!("{stem}.{variant}.s{support}{factor_tag}{ext}"))
}

fn write_itemsets(result: &MiningResult, path: &Path) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    result
        .write_itemsets(&mut w)
        .and_then(|()| w.flush())
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

struct StatsWriter {
    file: File,
}

impl StatsWriter {
    fn open(path: &Path) -> Result<Self, CliError> {
        let empty = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| CliError::Internal(format!("cannot open {}: {e}", path.display())))?;
        if empty {
            writeln!(file, "{CSV_HEADER}")
                .map_err(|e| CliError::Internal(format!("cannot write header: {e}")))?;
        }
        Ok(StatsWriter { file })
    }

    fn append(
        &mut self,
        dataset: &str,
        result: &MiningResult,
        support: MinSupport,
    ) -> Result<(), CliError> {
        let cv = result
            .balance_cv
            .map(|cv| format!("{cv:.6}"))
            .unwrap_or_default();
        let p = result.timings.phase_ms;
        writeln!(
            self.file,
            "{dataset},{},{support},{},{},{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{cv}",
            result.variant,
            result.partitions,
            result.tri_matrix,
            result.workers,
            result.num_frequent(),
            result.total_ms,
            p[0],
            p[1],
            p[2],
            p[3],
        )
        .map_err(|e| CliError::Internal(format!("cannot append stats row: {e}")))
    }
}
