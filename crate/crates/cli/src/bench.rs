//! `hullft bench`: per-stage timings and objective values over a budget sweep.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use hullft_core::io;
use hullft_core::synthetic::{synthetic_pool, synthetic_query};
use hullft_core::{hullft_select, CandidatePool, EmbeddingVector, SelectionRequest};

use crate::{usage, IntegerizerArg, SelectorArg};

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Pool file; a seeded synthetic pool is used when absent.
    #[arg(long, requires = "query")]
    pub pool: Option<PathBuf>,
    #[arg(long, requires = "pool")]
    pub query: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub k: usize,
    #[arg(long, default_value_t = 768)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    #[arg(long, default_value_t = 50)]
    pub n_max: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SelectorArg::Fw, SelectorArg::Caratheodory])]
    pub selectors: Vec<SelectorArg>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [IntegerizerArg::Geometric])]
    pub integerizers: Vec<IntegerizerArg>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub selector: &'static str,
    pub integerizer: &'static str,
    pub budget: usize,
    pub fw_error: f64,
    pub integer_error: Option<f64>,
    pub fidelity_l2: Option<f64>,
    pub support_size: usize,
    pub select_seconds: f64,
    pub integerize_seconds: f64,
}

pub const BENCH_HEADER: &str =
    "selector,integerizer,budget,fw_error,integer_error,fidelity_l2,support_size,select_seconds,integerize_seconds";

impl BenchRow {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        format!(
            "{},{},{},{:e},{},{},{},{:.6},{:.6}",
            self.selector,
            self.integerizer,
            self.budget,
            self.fw_error,
            opt(self.integer_error),
            opt(self.fidelity_l2),
            self.support_size,
            self.select_seconds,
            self.integerize_seconds
        )
    }
}

fn load_inputs(args: &BenchArgs) -> Result<(CandidatePool, EmbeddingVector)> {
    match (&args.pool, &args.query) {
        (Some(pool), Some(query)) => {
            let pool = io::read_pool(pool, None).with_context(|| format!("reading pool {}", pool.display()))?.pool;
            let q = io::read_pool(query, None).with_context(|| format!("reading query {}", query.display()))?.pool;
            Ok((pool, EmbeddingVector::new(q.row(0).to_vec())?))
        }
        _ => {
            if args.k == 0 || args.dim == 0 {
                return Err(usage("--k and --dim must be >= 1"));
            }
            let pool = synthetic_pool(args.k, args.dim, args.seed)?;
            let q = synthetic_query(&pool, args.seed)?;
            Ok((pool, q))
        }
    }
}

/// Runs the sweep. Pool loading happens before any timer starts.
pub fn run_bench(args: &BenchArgs) -> Result<Vec<BenchRow>> {
    if args.n_min == 0 || args.n_min > args.n_max {
        return Err(usage(format!("budget range {}..={} is empty or starts at 0", args.n_min, args.n_max)));
    }
    let (pool, q) = load_inputs(args)?;
    let mut rows = Vec::new();
    for &selector in &args.selectors {
        for &integerizer in &args.integerizers {
            for budget in args.n_min..=args.n_max {
                let mut req = SelectionRequest::new(q.clone(), budget);
                req.selector = selector.into();
                req.integerizer = integerizer.into();
                let res = hullft_select(&req, &pool)?;
                rows.push(BenchRow {
                    selector: req.selector.as_str(),
                    integerizer: req.integerizer.as_str(),
                    budget,
                    fw_error: res.metrics.fw_error,
                    integer_error: res.metrics.integer_error,
                    fidelity_l2: res.metrics.fidelity_l2,
                    support_size: res.metrics.support_size,
                    select_seconds: res.metrics.timings.select_seconds,
                    integerize_seconds: res.metrics.timings.integerize_seconds,
                });
            }
        }
    }
    Ok(rows)
}

/// CSV table with a header row.
pub fn cmd_bench(args: &BenchArgs) -> Result<String> {
    let rows = run_bench(args)?;
    let mut out = String::new();
    writeln!(out, "{BENCH_HEADER}").expect("writing to a String");
    for row in &rows {
        writeln!(out, "{}", row.to_csv()).expect("writing to a String");
    }
    Ok(out)
}
