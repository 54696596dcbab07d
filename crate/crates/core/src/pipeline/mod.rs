//! End-to-end selection: optional kNN preselection, a fractional selector,
//! an integerizer, and the PCA-reduced variant.

mod knn;
mod pca;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use knn::{knn_preselect, KnnMetric, Preselection};
pub use pca::Pca;

use crate::caratheodory::caratheodory_reduce;
use crate::error::{HullftError, Result};
use crate::frank_wolfe::{frank_wolfe, FwConfig, StopReason, DEFAULT_GAP_TOLERANCE};
use crate::geometry::{reconstruction_error, CandidatePool, EmbeddingVector, SimplexWeights};
use crate::integerize::{fidelity, integerize, multiset_error, pad_by_weights, SupportMultiset, DEFAULT_SWAP_PASSES};

/// Default size of the nearest-neighbor candidate pool.
pub const DEFAULT_POOL_SIZE: usize = 200;

/// Settings for the accurate solve that feeds the Carathéodory reduction.
const EXACT_EPSILON: f64 = 1e-10;
const EXACT_MAX_ITERS: usize = 5000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    #[default]
    Fw,
    /// Forced-unique Frank–Wolfe with the epsilon stop disabled.
    FwNoEpsilon,
    /// Accurate Frank–Wolfe followed by exact Carathéodory reduction.
    Caratheodory,
}

impl Selector {
    pub fn as_str(self) -> &'static str {
        match self {
            Selector::Fw => "fw",
            Selector::FwNoEpsilon => "fw_no_epsilon",
            Selector::Caratheodory => "caratheodory",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integerizer {
    #[default]
    Geometric,
    PadByWeights,
    /// Return fractional weights only.
    None,
}

impl Integerizer {
    pub fn as_str(self) -> &'static str {
        match self {
            Integerizer::Geometric => "geometric",
            Integerizer::PadByWeights => "pad_by_weights",
            Integerizer::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRequest {
    pub query: EmbeddingVector,
    pub budget: usize,
    pub fw_config: FwConfig,
    pub swap_passes: usize,
    pub selector: Selector,
    pub integerizer: Integerizer,
    pub pca_dim: Option<usize>,
}

impl SelectionRequest {
    /// A request with the default FW settings for `budget`.
    pub fn new(query: EmbeddingVector, budget: usize) -> Self {
        Self {
            query,
            budget,
            fw_config: FwConfig::for_budget(budget),
            swap_passes: DEFAULT_SWAP_PASSES,
            selector: Selector::Fw,
            integerizer: Integerizer::Geometric,
            pca_dim: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(HullftError::contract("budget must be >= 1"));
        }
        if let Some(d) = self.pca_dim {
            if d == 0 || d > self.query.dim() {
                return Err(HullftError::contract(format!("pca dimension {d} not in 1..={}", self.query.dim())));
            }
        }
        self.fw_config.validate()
    }
}

/// Reconstruction errors measured in one space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceErrors {
    pub fw_error: f64,
    pub integer_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub select_seconds: f64,
    pub integerize_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMetrics {
    /// Error of the fractional weights in the space where selection ran.
    pub fw_error: f64,
    /// Error of the empirical multiset weights in the selection space.
    pub integer_error: Option<f64>,
    pub fidelity_l2: Option<f64>,
    /// Support size of the fractional solution.
    pub support_size: usize,
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Errors in the original space, present for PCA-reduced runs.
    pub original_space: Option<SpaceErrors>,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// `None` when the integerizer is [`Integerizer::None`].
    pub multiset: Option<SupportMultiset>,
    pub fractional: SimplexWeights,
    pub metrics: SelectionMetrics,
    pub warning: Option<String>,
}

fn run_selector(
    req: &SelectionRequest,
    q: &EmbeddingVector,
    pool: &CandidatePool,
) -> Result<(SimplexWeights, usize, StopReason)> {
    match req.selector {
        Selector::Fw => {
            let res = frank_wolfe(q, pool, &req.fw_config)?;
            Ok((res.weights, res.iterations, res.stop_reason))
        }
        Selector::FwNoEpsilon => {
            let cfg = FwConfig { forced_unique: true, ..req.fw_config };
            let res = frank_wolfe(q, pool, &cfg)?;
            Ok((res.weights, res.iterations, res.stop_reason))
        }
        Selector::Caratheodory => {
            let cfg = FwConfig {
                epsilon: EXACT_EPSILON,
                support_cap: pool.len(),
                max_iters: EXACT_MAX_ITERS,
                gap_tolerance: DEFAULT_GAP_TOLERANCE,
                forced_unique: false,
            };
            let res = frank_wolfe(q, pool, &cfg)?;
            let reduced = caratheodory_reduce(pool, &res.weights)?;
            Ok((reduced, res.iterations, res.stop_reason))
        }
    }
}

fn select_in_space(req: &SelectionRequest, q: &EmbeddingVector, pool: &CandidatePool) -> Result<SelectionResult> {
    let started = Instant::now();
    let (fractional, iterations, stop_reason) = run_selector(req, q, pool)?;
    let select_seconds = started.elapsed().as_secs_f64();
    let fw_error = reconstruction_error(q, pool, &fractional)?;

    let started = Instant::now();
    let multiset = match req.integerizer {
        Integerizer::Geometric => Some(integerize(q, pool, &fractional, req.budget, req.swap_passes)?),
        Integerizer::PadByWeights => Some(pad_by_weights(&fractional, req.budget)?),
        Integerizer::None => None,
    };
    let integerize_seconds = started.elapsed().as_secs_f64();

    let (integer_error, fidelity_l2) = match &multiset {
        Some(ms) => (Some(multiset_error(q, pool, ms)?), Some(fidelity(&fractional, ms).l2_distance)),
        None => (None, None),
    };
    let warning = multiset.is_none().then(|| {
        format!("integerizer is none: returning fractional weights instead of a {}-unit multiset", req.budget)
    });

    Ok(SelectionResult {
        multiset,
        metrics: SelectionMetrics {
            fw_error,
            integer_error,
            fidelity_l2,
            support_size: fractional.support_size(),
            iterations,
            stop_reason,
            original_space: None,
            timings: StageTimings { select_seconds, integerize_seconds },
        },
        fractional,
        warning,
    })
}

/// Runs the configured selector then integerizer on `pool`.
///
/// Requests carrying a PCA dimension are routed through [`pca_select`].
pub fn hullft_select(req: &SelectionRequest, pool: &CandidatePool) -> Result<SelectionResult> {
    req.validate()?;
    pool.check_query(&req.query)?;
    match req.pca_dim {
        Some(_) => pca_select(req, pool),
        None => select_in_space(req, &req.query, pool),
    }
}

/// Selection in the top-`d'` principal subspace of `pool ∪ {q}`.
///
/// Pool row `i` maps to reduced row `i`, so the returned support indexes the
/// original pool directly. `metrics.original_space` holds the errors of the
/// same weights and counts measured on the unreduced embeddings.
pub fn pca_select(req: &SelectionRequest, pool: &CandidatePool) -> Result<SelectionResult> {
    req.validate()?;
    pool.check_query(&req.query)?;
    let target = req.pca_dim.ok_or_else(|| HullftError::contract("pca_select needs a pca dimension"))?;

    let started = Instant::now();
    let pca = Pca::fit(&req.query, pool, target)?;
    let reduced_q = pca.transform_query(&req.query)?;
    let reduced_pool = pca.transform_pool(pool)?;
    let fit_seconds = started.elapsed().as_secs_f64();

    let mut result = select_in_space(req, &reduced_q, &reduced_pool)?;
    result.metrics.timings.select_seconds += fit_seconds;
    let fw_error = reconstruction_error(&req.query, pool, &result.fractional)?;
    let integer_error = match &result.multiset {
        Some(ms) => Some(multiset_error(&req.query, pool, ms)?),
        None => None,
    };
    result.metrics.original_space = Some(SpaceErrors { fw_error, integer_error });
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn midpoint() -> (CandidatePool, EmbeddingVector) {
        let pool = CandidatePool::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], None).unwrap();
        (pool, EmbeddingVector::new(vec![0.5, 0.5]).unwrap())
    }

    #[test]
    fn midpoint_geometric() {
        let (pool, q) = midpoint();
        let res = hullft_select(&SelectionRequest::new(q, 3), &pool).unwrap();
        let ms = res.multiset.unwrap();
        assert_eq!(ms.support, vec![0, 1]);
        assert_eq!(ms.counts, vec![2, 1]);
        assert_eq!(res.metrics.fw_error, 0.0);
        assert!((res.metrics.integer_error.unwrap() - 1.0 / 18.0).abs() < 1e-15);
        assert!(res.warning.is_none());
    }

    #[test]
    fn budget_one_single_point() {
        let (pool, q) = midpoint();
        let res = hullft_select(&SelectionRequest::new(q, 1), &pool).unwrap();
        let ms = res.multiset.unwrap();
        assert_eq!(ms.nonzero().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn integerizer_none_warns() {
        let (pool, q) = midpoint();
        let mut req = SelectionRequest::new(q, 3);
        req.integerizer = Integerizer::None;
        let res = hullft_select(&req, &pool).unwrap();
        assert!(res.multiset.is_none());
        assert!(res.warning.is_some());
        assert_eq!(res.metrics.integer_error, None);
    }

    #[test]
    fn caratheodory_support_bound() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.1], vec![0.2, -1.0], vec![0.7, 0.7]];
        let pool = CandidatePool::from_rows(&rows, None).unwrap();
        let q = EmbeddingVector::new(vec![0.1, 0.05]).unwrap();
        let mut req = SelectionRequest::new(q, 10);
        req.selector = Selector::Caratheodory;
        let res = hullft_select(&req, &pool).unwrap();
        assert!(res.fractional.support_size() <= 3);
        assert_eq!(res.multiset.unwrap().total(), 10);
    }

    #[test]
    fn pca_on_a_line_is_lossless() {
        let dir = [1.0, -2.0, 0.5];
        let rows: Vec<Vec<f64>> =
            [-1.0, 0.3, 2.0, 0.9].iter().map(|t| dir.iter().map(|d| 0.4 + t * d).collect()).collect();
        let pool = CandidatePool::from_rows(&rows, None).unwrap();
        let q = EmbeddingVector::new(dir.iter().map(|d| 0.4 + 0.5 * d).collect()).unwrap();
        let mut req = SelectionRequest::new(q, 6);
        req.pca_dim = Some(1);
        let res = hullft_select(&req, &pool).unwrap();
        let orig = res.metrics.original_space.unwrap();
        assert!((orig.fw_error - res.metrics.fw_error).abs() < 1e-9);
        assert!((orig.integer_error.unwrap() - res.metrics.integer_error.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn bad_requests_rejected() {
        let (pool, q) = midpoint();
        let mut req = SelectionRequest::new(q.clone(), 0);
        assert!(hullft_select(&req, &pool).is_err());
        req.budget = 2;
        req.pca_dim = Some(3);
        assert!(hullft_select(&req, &pool).is_err());
    }
}
