//! Subcommand implementations for the `hullft` binary.
//!
//! Each command takes parsed arguments and returns its output as a string
//! (or writes it to `--out`), so tests can drive the commands without a
//! subprocess.

pub mod bench;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;

use hullft_core::frank_wolfe::{DEFAULT_EPSILON, DEFAULT_GAP_TOLERANCE};
use hullft_core::integerize::DEFAULT_SWAP_PASSES;
use hullft_core::io::{self, ScheduleFile, SelectionFile};
use hullft_core::pipeline::DEFAULT_POOL_SIZE;
use hullft_core::schedule::{order_blocks, DEFAULT_REFRESH_INTERVAL};
use hullft_core::synthetic::{synthetic_pool, synthetic_query};
use hullft_core::trainer::DEFAULT_TOY_LEARNING_RATE;
use hullft_core::{
    consecutive_group, global_dedup, grad_reuse_train, hullft_select, knn_preselect, plain_train, schedule_from_groups,
    BlockOrder, EmbeddingVector, FwConfig, GroupedSequence, HullftError, Integerizer, KnnMetric, SelectionRequest,
    Selector, ToyModel,
};

/// Exit status for bad invocations and contract violations.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for unreadable or malformed files.
pub const EXIT_FORMAT: i32 = 3;
/// Exit status for numerical failures.
pub const EXIT_NUMERICAL: i32 = 4;

/// A bad invocation; always exits with [`EXIT_USAGE`].
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

/// Exit status for an error returned by any command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<HullftError>() {
            return match e {
                HullftError::Io(_) | HullftError::Json(_) | HullftError::Format(_) | HullftError::UnknownExample(_) => {
                    EXIT_FORMAT
                }
                HullftError::Numerical(_) => EXIT_NUMERICAL,
                _ => EXIT_USAGE,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_FORMAT;
        }
    }
    EXIT_USAGE
}

/// Reads `HULLFT_THREADS` and sizes the global thread pool accordingly.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("HULLFT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("HULLFT_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().ok();
    Ok(())
}

/// Writes `text` to `out` when given (returning nothing for stdout), else returns it.
fn emit(text: String, out: Option<&Path>) -> Result<String> {
    match out {
        Some(path) => {
            io::atomic_write(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectorArg {
    Fw,
    FwNoEpsilon,
    Caratheodory,
}

impl From<SelectorArg> for Selector {
    fn from(s: SelectorArg) -> Self {
        match s {
            SelectorArg::Fw => Selector::Fw,
            SelectorArg::FwNoEpsilon => Selector::FwNoEpsilon,
            SelectorArg::Caratheodory => Selector::Caratheodory,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntegerizerArg {
    Geometric,
    PadByWeights,
    None,
}

impl From<IntegerizerArg> for Integerizer {
    fn from(s: IntegerizerArg) -> Self {
        match s {
            IntegerizerArg::Geometric => Integerizer::Geometric,
            IntegerizerArg::PadByWeights => Integerizer::PadByWeights,
            IntegerizerArg::None => Integerizer::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    InnerProduct,
    Euclidean,
}

#[derive(Debug, Clone, Args)]
#[command(group(clap::ArgGroup::new("candidates").required(true).args(["pool", "corpus"])))]
pub struct SelectArgs {
    /// Candidate pool file (HFT1).
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Corpus file; the pool is its --k-pool nearest neighbors of the query.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Query file (HFT1); row --query-index is the query.
    #[arg(long)]
    pub query: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub query_index: usize,
    /// Training budget N.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub budget: u64,
    #[arg(long, default_value_t = DEFAULT_POOL_SIZE)]
    pub k_pool: usize,
    #[arg(long, value_enum, default_value_t = MetricArg::InnerProduct)]
    pub metric: MetricArg,
    #[arg(long, value_enum, default_value_t = SelectorArg::Fw)]
    pub selector: SelectorArg,
    #[arg(long, value_enum, default_value_t = IntegerizerArg::Geometric)]
    pub integerizer: IntegerizerArg,
    /// Squared-error tolerance for Frank–Wolfe.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Support cap m (default: the budget).
    #[arg(long)]
    pub support_cap: Option<usize>,
    /// Iteration limit (default: 10 x support cap).
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_GAP_TOLERANCE)]
    pub gap_tolerance: f64,
    #[arg(long, default_value_t = DEFAULT_SWAP_PASSES)]
    pub swap_passes: usize,
    /// Run selection in the top principal components of pool and query.
    #[arg(long)]
    pub pca_dim: Option<usize>,
    /// Write the selection here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_query(path: &Path, index: usize) -> Result<(String, EmbeddingVector)> {
    let loaded = io::read_pool(path, None).with_context(|| format!("reading query {}", path.display()))?;
    if index >= loaded.pool.len() {
        return Err(usage(format!("--query-index {index} out of range for {} query rows", loaded.pool.len())));
    }
    let q = EmbeddingVector::new(loaded.pool.row(index).to_vec())?;
    Ok((loaded.pool.id(index).to_string(), q))
}

pub fn cmd_select(args: &SelectArgs) -> Result<String> {
    let (query_id, query) = load_query(&args.query, args.query_index)?;
    let budget = usize::try_from(args.budget).map_err(|_| usage("budget too large"))?;

    let (pool, source) = match (&args.pool, &args.corpus) {
        (Some(path), None) => {
            let loaded = io::read_pool(path, None).with_context(|| format!("reading pool {}", path.display()))?;
            warn_all(&loaded.warnings);
            (loaded.pool, None)
        }
        (None, Some(path)) => {
            let loaded = io::read_pool(path, None).with_context(|| format!("reading corpus {}", path.display()))?;
            warn_all(&loaded.warnings);
            if args.k_pool == 0 {
                return Err(usage("--k-pool must be >= 1"));
            }
            let metric = match args.metric {
                MetricArg::InnerProduct => KnnMetric::InnerProduct,
                MetricArg::Euclidean => KnnMetric::Euclidean,
            };
            let pre = knn_preselect(&loaded.pool, &query, args.k_pool, metric)?;
            (pre.pool, Some(pre.source_indices))
        }
        _ => return Err(usage("exactly one of --pool or --corpus is required")),
    };

    let mut fw = FwConfig::for_budget(budget);
    fw.epsilon = args.epsilon;
    fw.gap_tolerance = args.gap_tolerance;
    if let Some(cap) = args.support_cap {
        fw.support_cap = cap;
        fw.max_iters = 10 * cap.max(1);
    }
    if let Some(iters) = args.max_iters {
        fw.max_iters = iters;
    }
    let req = SelectionRequest {
        query,
        budget,
        fw_config: fw,
        swap_passes: args.swap_passes,
        selector: args.selector.into(),
        integerizer: args.integerizer.into(),
        pca_dim: args.pca_dim,
    };
    let result = hullft_select(&req, &pool)?;
    if let Some(w) = &result.warning {
        eprintln!("warning: {w}");
    }
    let file = SelectionFile::from_result(&query_id, &req, &result, &pool, source.as_deref());
    emit(file.to_json()?, args.out.as_deref())
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    None,
    GlobalDedup,
    Consecutive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BlockOrderArg {
    CountDescending,
    SupportOrder,
}

#[derive(Debug, Clone, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["selection", "sequence"])))]
pub struct ScheduleArgs {
    /// Selection file produced by `hullft select`.
    #[arg(long)]
    pub selection: Option<PathBuf>,
    /// Plain-text sequence, one example id per line.
    #[arg(long)]
    pub sequence: Option<PathBuf>,
    /// Refresh interval r.
    #[arg(long, default_value_t = DEFAULT_REFRESH_INTERVAL as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub refresh: u64,
    /// Grouping applied to --sequence input before scheduling.
    #[arg(long, value_enum, default_value_t = TransformArg::None)]
    pub transform: TransformArg,
    /// Block order for --selection input.
    #[arg(long, value_enum, default_value_t = BlockOrderArg::CountDescending)]
    pub block_order: BlockOrderArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_schedule(args: &ScheduleArgs) -> Result<String> {
    let r = usize::try_from(args.refresh).map_err(|_| usage("--refresh too large"))?;
    let groups: GroupedSequence = match (&args.selection, &args.sequence) {
        (Some(path), None) => {
            if args.transform != TransformArg::None {
                return Err(usage("--transform applies to --sequence input only"));
            }
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let sel = SelectionFile::from_json(&text)?;
            let order = match args.block_order {
                BlockOrderArg::CountDescending => BlockOrder::CountDescending,
                BlockOrderArg::SupportOrder => BlockOrder::SupportOrder,
            };
            let entries = sel.counted_entries().map_err(|e| usage(e.to_string()))?;
            order_blocks(entries, order)
        }
        (None, Some(path)) => {
            let seq = io::read_sequence(path).with_context(|| format!("reading {}", path.display()))?;
            match args.transform {
                TransformArg::None | TransformArg::Consecutive => consecutive_group(&seq),
                TransformArg::GlobalDedup => global_dedup(&seq),
            }
        }
        _ => return Err(usage("exactly one of --selection or --sequence is required")),
    };
    let schedule = schedule_from_groups(&groups, r)?;
    emit(ScheduleFile::from_schedule(&schedule).to_json()?, args.out.as_deref())
}

#[derive(Debug, Clone, Args)]
pub struct ToyTrainArgs {
    /// Schedule file produced by `hullft schedule`.
    #[arg(long)]
    pub schedule: PathBuf,
    /// JSON object mapping example id to target vector.
    #[arg(long)]
    pub targets: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOY_LEARNING_RATE)]
    pub lr: f64,
    /// Seed for the initial parameters.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ignore reuse flags and recompute the gradient on every step.
    #[arg(long)]
    pub plain: bool,
}

#[derive(Debug, Serialize)]
struct ToyTrainReport {
    steps: usize,
    refresh_interval: usize,
    initial_loss: f64,
    final_loss: f64,
    fb_passes: usize,
    schedule_fb_passes: usize,
    loss_trace: Vec<f64>,
    params: Vec<f64>,
}

pub fn cmd_toytrain(args: &ToyTrainArgs) -> Result<String> {
    if !(args.lr.is_finite() && args.lr > 0.0) {
        return Err(usage(format!("--lr must be a positive number, got {}", args.lr)));
    }
    let text = fs::read_to_string(&args.schedule).with_context(|| format!("reading {}", args.schedule.display()))?;
    let (_, schedule) = ScheduleFile::from_json(&text)?;
    let targets = io::read_targets(&args.targets)?;
    let model = ToyModel::with_seeded_init(targets, args.seed)?;
    let outcome = if args.plain {
        plain_train(&model, &schedule, args.lr)?
    } else {
        grad_reuse_train(&model, &schedule, args.lr)?
    };
    let report = ToyTrainReport {
        steps: schedule.steps.len(),
        refresh_interval: schedule.refresh_interval,
        initial_loss: outcome.loss_trace[0],
        final_loss: outcome.final_loss(),
        fb_passes: outcome.fb_passes,
        schedule_fb_passes: schedule.stats().fb_passes,
        loss_trace: outcome.loss_trace.clone(),
        params: outcome.params.clone(),
    };
    let mut s = serde_json::to_string_pretty(&report)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = DEFAULT_POOL_SIZE)]
    pub k: usize,
    #[arg(long, default_value_t = 768)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Pool output path; ids go to the `.ids` sidecar.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a one-row query file here.
    #[arg(long)]
    pub query_out: Option<PathBuf>,
}

pub fn cmd_synth(args: &SynthArgs) -> Result<String> {
    if args.k == 0 || args.dim == 0 {
        return Err(usage("--k and --dim must be >= 1"));
    }
    let pool = synthetic_pool(args.k, args.dim, args.seed)?;
    io::write_pool(&pool, &args.out)?;
    if let Some(path) = &args.query_out {
        let q = synthetic_query(&pool, args.seed)?;
        let qpool = hullft_core::CandidatePool::from_flat(q.into_inner(), args.dim, Some(vec!["query".into()]))?;
        io::write_pool(&qpool, path)?;
    }
    Ok(format!("wrote {} x {} pool to {}\n", args.k, args.dim, args.out.display()))
}

pub use bench::{cmd_bench, BenchArgs, BenchRow};
