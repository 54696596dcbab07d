//! Conditional gradient over the probability simplex for `min ‖q − P w‖²`.
//!
//! The iterate starts at the pool vertex most aligned with the query and
//! moves along one edge per iteration with an exact line search, so the
//! support grows by at most one index per step.

use serde::{Deserialize, Serialize};

use crate::error::{HullftError, Result};
use crate::geometry::{dot, reconstruction_error, squared_distance, CandidatePool, EmbeddingVector, SimplexWeights};

/// Solver parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FwConfig {
    /// Stop once the squared error is at most this value.
    pub epsilon: f64,
    /// Maximum support size `m`.
    pub support_cap: usize,
    pub max_iters: usize,
    /// Stop once the FW gap falls to this value or below.
    pub gap_tolerance: f64,
    /// Only step toward indices that have never been chosen, and ignore `epsilon`.
    pub forced_unique: bool,
}

pub const DEFAULT_EPSILON: f64 = 1e-5;
pub const DEFAULT_GAP_TOLERANCE: f64 = 1e-12;

impl FwConfig {
    /// Defaults tied to a selection budget: `m = N`, `max_iters = 10 m`.
    pub fn for_budget(budget: usize) -> Self {
        let cap = budget.max(1);
        Self {
            epsilon: DEFAULT_EPSILON,
            support_cap: cap,
            max_iters: 10 * cap,
            gap_tolerance: DEFAULT_GAP_TOLERANCE,
            forced_unique: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(HullftError::contract(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.gap_tolerance.is_nan() || self.gap_tolerance < 0.0 {
            return Err(HullftError::contract(format!("gap tolerance must be >= 0, got {}", self.gap_tolerance)));
        }
        if self.support_cap == 0 {
            return Err(HullftError::contract("support cap must be >= 1"));
        }
        if self.max_iters == 0 {
            return Err(HullftError::contract("max_iters must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ToleranceMet,
    CapReached,
    GapVanished,
    MaxIters,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::ToleranceMet => "tolerance_met",
            StopReason::CapReached => "cap_reached",
            StopReason::GapVanished => "gap_vanished",
            StopReason::MaxIters => "max_iters",
        }
    }
}

/// One accepted step of the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwStep {
    /// `‖q − P w‖²` after the step.
    pub objective: f64,
    pub vertex: usize,
    pub step_size: f64,
    pub gap: f64,
    pub support_size: usize,
    pub weight_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FwTrace {
    /// Objective at the initial vertex.
    pub initial_objective: f64,
    pub initial_vertex: usize,
    pub steps: Vec<FwStep>,
}

impl FwTrace {
    /// Initial objective followed by the objective after every step.
    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.initial_objective).chain(self.steps.iter().map(|s| s.objective))
    }

    pub fn is_monotone(&self) -> bool {
        let objs: Vec<f64> = self.objectives().collect();
        objs.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwResult {
    pub weights: SimplexWeights,
    pub final_error: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub trace: FwTrace,
}

/// First index attaining the maximum of `score` over `candidates`.
fn argmax_by(candidates: impl Iterator<Item = usize>, mut score: impl FnMut(usize) -> f64) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for i in candidates {
        let s = score(i);
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best
}

/// Runs Frank–Wolfe with exact line search from the best-aligned vertex.
///
/// The support cap only binds when it is smaller than the pool; a cap of
/// `K` or more places no restriction on which vertices may be used.
pub fn frank_wolfe(q: &EmbeddingVector, pool: &CandidatePool, cfg: &FwConfig) -> Result<FwResult> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(HullftError::contract("frank_wolfe needs a non-empty pool"));
    }
    pool.check_query(q)?;
    let q = q.as_slice();
    let k = pool.len();
    let dim = pool.dim();
    let cap_binds = cfg.support_cap < k;

    let (start, _) = argmax_by(0..k, |i| dot(q, pool.row(i))).expect("pool is non-empty");
    let mut w = vec![0.0; k];
    w[start] = 1.0;
    let mut chosen = vec![false; k];
    chosen[start] = true;
    let mut support = 1usize;
    let mut mix = pool.row(start).to_vec();
    let mut objective = squared_distance(q, &mix);

    let mut trace = FwTrace { initial_objective: objective, initial_vertex: start, steps: Vec::new() };
    let mut residual = vec![0.0; dim];
    let mut direction = vec![0.0; dim];
    let mut next_mix = vec![0.0; dim];

    let stop_reason = loop {
        if !cfg.forced_unique && objective <= cfg.epsilon {
            break StopReason::ToleranceMet;
        }
        if cap_binds && support >= cfg.support_cap {
            break StopReason::CapReached;
        }
        if trace.steps.len() >= cfg.max_iters {
            break StopReason::MaxIters;
        }

        for ((r, qi), m) in residual.iter_mut().zip(q).zip(&mix) {
            *r = qi - m;
        }
        let pick = if cfg.forced_unique {
            argmax_by((0..k).filter(|&i| !chosen[i] && w[i] == 0.0), |i| dot(&residual, pool.row(i)))
        } else {
            argmax_by(0..k, |i| dot(&residual, pool.row(i)))
        };
        let Some((vertex, _)) = pick else {
            // forced-unique run has used every index
            break StopReason::CapReached;
        };

        for ((d, p), m) in direction.iter_mut().zip(pool.row(vertex)).zip(&mix) {
            *d = p - m;
        }
        let gap = dot(&residual, &direction);
        let curvature = dot(&direction, &direction);
        if curvature == 0.0 || gap <= cfg.gap_tolerance {
            break StopReason::GapVanished;
        }
        let gamma = (gap / curvature).clamp(0.0, 1.0);

        for ((n, m), p) in next_mix.iter_mut().zip(&mix).zip(pool.row(vertex)) {
            *n = (1.0 - gamma) * m + gamma * p;
        }
        let next_objective = squared_distance(q, &next_mix);
        if next_objective > objective {
            // rounding has overtaken the predicted decrease
            break StopReason::GapVanished;
        }

        for wi in w.iter_mut() {
            *wi *= 1.0 - gamma;
        }
        w[vertex] += gamma;
        chosen[vertex] = true;
        std::mem::swap(&mut mix, &mut next_mix);
        objective = next_objective;
        support = w.iter().filter(|&&x| x > 0.0).count();

        trace.steps.push(FwStep {
            objective,
            vertex,
            step_size: gamma,
            gap,
            support_size: support,
            weight_sum: w.iter().sum(),
        });
    };

    let weights = SimplexWeights::from_dense_clamped(&w)?;
    let final_error = reconstruction_error(&EmbeddingVector::new(q.to_vec())?, pool, &weights)?;
    Ok(FwResult { weights, final_error, iterations: trace.steps.len(), stop_reason, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(rows: &[&[f64]]) -> CandidatePool {
        CandidatePool::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), None).unwrap()
    }

    fn query(v: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(v.to_vec()).unwrap()
    }

    fn cfg(epsilon: f64, cap: usize) -> FwConfig {
        FwConfig { epsilon, support_cap: cap, max_iters: 100, gap_tolerance: 1e-12, forced_unique: false }
    }

    #[test]
    fn query_in_pool_stops_immediately() {
        let p = pool(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.6, 0.6, 0.6]]);
        let res = frank_wolfe(&query(&[0.6, 0.6, 0.6]), &p, &cfg(0.0, 4)).unwrap();
        assert_eq!(res.weights.entries(), &[(3, 1.0)]);
        assert_eq!(res.final_error, 0.0);
        assert_eq!(res.iterations, 0);
        assert_eq!(res.stop_reason, StopReason::ToleranceMet);
    }

    #[test]
    fn midpoint_single_step() {
        let p = pool(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let res = frank_wolfe(&query(&[0.5, 0.5]), &p, &cfg(1e-12, 2)).unwrap();
        assert_eq!(res.trace.initial_vertex, 0);
        assert_eq!(res.iterations, 1);
        let step = res.trace.steps[0];
        assert_eq!(step.vertex, 1);
        assert_eq!(step.step_size, 0.5);
        assert_eq!(res.weights.entries(), &[(0, 0.5), (1, 0.5)]);
        assert_eq!(res.final_error, 0.0);
        assert_eq!(res.stop_reason, StopReason::ToleranceMet);
    }

    #[test]
    fn outside_hull_is_stationary() {
        let p = pool(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let res = frank_wolfe(&query(&[2.0, 0.0]), &p, &cfg(1e-12, 2)).unwrap();
        assert_eq!(res.weights.entries(), &[(0, 1.0)]);
        assert_eq!(res.final_error, 1.0);
        assert_eq!(res.stop_reason, StopReason::GapVanished);
    }

    #[test]
    fn cap_stops_growth() {
        let p = pool(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, -1.0]]);
        let res = frank_wolfe(&query(&[0.0, 0.0]), &p, &cfg(0.0, 2)).unwrap();
        assert_eq!(res.stop_reason, StopReason::CapReached);
        assert_eq!(res.weights.support_size(), 2);
    }

    #[test]
    fn forced_unique_never_revisits() {
        let p = pool(&[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.2], &[0.3, -1.0], &[0.9, 0.9]]);
        let mut c = cfg(1.0, 5);
        c.forced_unique = true;
        let res = frank_wolfe(&query(&[0.1, 0.1]), &p, &c).unwrap();
        let mut seen = vec![res.trace.initial_vertex];
        for s in &res.trace.steps {
            assert!(!seen.contains(&s.vertex), "vertex {} revisited", s.vertex);
            seen.push(s.vertex);
        }
        // epsilon = 1 would have stopped a normal run at once
        assert!(res.iterations >= 1);
    }

    #[test]
    fn empty_pool_and_bad_config_rejected() {
        let p = pool(&[&[1.0, 0.0]]);
        let mut c = cfg(0.0, 1);
        c.max_iters = 0;
        assert!(frank_wolfe(&query(&[1.0, 0.0]), &p, &c).is_err());
        assert!(frank_wolfe(&query(&[1.0]), &p, &cfg(0.0, 1)).is_err());
    }

    #[test]
    fn deterministic() {
        let p = pool(&[&[1.0, 0.2], &[0.1, 1.0], &[-0.7, 0.3], &[0.2, -0.9]]);
        let a = frank_wolfe(&query(&[0.05, 0.1]), &p, &cfg(0.0, 4)).unwrap();
        let b = frank_wolfe(&query(&[0.05, 0.1]), &p, &cfg(0.0, 4)).unwrap();
        assert_eq!(a, b);
        assert!(a.trace.is_monotone());
    }
}
