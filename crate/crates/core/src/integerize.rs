//! Turning fractional simplex weights into an exact `N`-point multiset.
//!
//! The geometric integerizer floors `N w`, hands out the leftover units one
//! at a time to whichever support point brings the multiset mean closest to
//! the query, then runs a bounded number of single-unit swap passes. The
//! largest-remainder padder is the weight-only baseline.

use serde::{Deserialize, Serialize};

use crate::error::{HullftError, Result};
use crate::geometry::{squared_distance, squared_norm, CandidatePool, EmbeddingVector, SimplexWeights};

pub const DEFAULT_SWAP_PASSES: usize = 2;

/// Support indices with integer counts summing to the budget.
///
/// Support points that end with a zero count are kept so fidelity can be
/// measured over the full fractional support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportMultiset {
    pub support: Vec<usize>,
    pub counts: Vec<usize>,
    pub budget: usize,
}

impl SupportMultiset {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `(pool index, count)` for entries with a positive count.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.support.iter().copied().zip(self.counts.iter().copied()).filter(|&(_, c)| c > 0)
    }

    /// The empirical weights `c_j / N` as simplex weights over `dim` indices.
    pub fn empirical_weights(&self, dim: usize) -> Result<SimplexWeights> {
        let n = self.budget as f64;
        SimplexWeights::new(dim, self.nonzero().map(|(i, c)| (i, c as f64 / n)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.support.len() != self.counts.len() {
            return Err(HullftError::contract("support and counts differ in length"));
        }
        if self.total() != self.budget {
            return Err(HullftError::contract(format!("counts sum to {} but budget is {}", self.total(), self.budget)));
        }
        let mut sorted = self.support.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|p| p[0] == p[1]) {
            return Err(HullftError::contract("support indices are not distinct"));
        }
        Ok(())
    }
}

/// `‖q − Σ_j (c_j / N) p_{s_j}‖²`, evaluated from scratch.
pub fn multiset_error(q: &EmbeddingVector, pool: &CandidatePool, ms: &SupportMultiset) -> Result<f64> {
    pool.check_query(q)?;
    if ms.budget == 0 {
        return Err(HullftError::contract("budget must be >= 1"));
    }
    let n = ms.budget as f64;
    let mut mean = vec![0.0; pool.dim()];
    for (i, c) in ms.nonzero() {
        pool.check_index(i)?;
        let scale = c as f64 / n;
        for (m, p) in mean.iter_mut().zip(pool.row(i)) {
            *m += scale * p;
        }
    }
    Ok(squared_distance(q.as_slice(), &mean))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegerizeEvent {
    /// Objective of the partial multiset after flooring.
    Floor { objective: f64 },
    /// One leftover unit assigned to support position `position`.
    Fill { position: usize, objective: f64 },
    /// One unit moved between support positions.
    Swap { from: usize, to: usize, objective: f64 },
}

impl IntegerizeEvent {
    pub fn objective(&self) -> f64 {
        match *self {
            IntegerizeEvent::Floor { objective }
            | IntegerizeEvent::Fill { objective, .. }
            | IntegerizeEvent::Swap { objective, .. } => objective,
        }
    }
}

/// A geometric integerization together with its objective log.
#[derive(Debug, Clone, PartialEq)]
pub struct Integerization {
    pub multiset: SupportMultiset,
    pub log: Vec<IntegerizeEvent>,
    /// Swap passes actually run.
    pub passes: usize,
    /// True when a full swap pass made no move (local optimum certified).
    pub converged: bool,
}

fn check_budget(budget: usize) -> Result<()> {
    if budget == 0 {
        return Err(HullftError::contract("budget N must be >= 1"));
    }
    if budget > i32::MAX as usize {
        return Err(HullftError::contract("budget N must not exceed 2^31 - 1"));
    }
    Ok(())
}

fn floors(w: &SimplexWeights, budget: usize) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let n = budget as f64;
    let support: Vec<usize> = w.support().collect();
    let scaled: Vec<f64> = w.entries().iter().map(|&(_, wi)| n * wi).collect();
    let counts: Vec<usize> = scaled.iter().map(|s| s.floor() as usize).collect();
    (support, counts, scaled)
}

/// Geometric integerization of `w` into `budget` units with `swap_passes`
/// refinement passes.
pub fn integerize(
    q: &EmbeddingVector,
    pool: &CandidatePool,
    w: &SimplexWeights,
    budget: usize,
    swap_passes: usize,
) -> Result<SupportMultiset> {
    integerize_logged(q, pool, w, budget, swap_passes).map(|r| r.multiset)
}

/// As [`integerize`], also returning the objective log.
pub fn integerize_logged(
    q: &EmbeddingVector,
    pool: &CandidatePool,
    w: &SimplexWeights,
    budget: usize,
    swap_passes: usize,
) -> Result<Integerization> {
    check_budget(budget)?;
    pool.check_query(q)?;
    w.check_against(pool)?;
    let n = budget as f64;
    let dim = pool.dim();

    let (support, mut counts, _) = floors(w, budget);
    let mut assigned: usize = counts.iter().sum();
    if assigned > budget {
        // w sums to 1 + O(1e-9); only an over-full floor could do this
        return Err(HullftError::Numerical(format!("floor stage assigned {assigned} > {budget} units")));
    }

    // residual = q − Σ c_j s_j / N, kept incrementally
    let mut residual = q.as_slice().to_vec();
    for (&i, &c) in support.iter().zip(&counts) {
        if c > 0 {
            let scale = c as f64 / n;
            for (r, p) in residual.iter_mut().zip(pool.row(i)) {
                *r -= scale * p;
            }
        }
    }
    let mut objective = squared_norm(&residual);
    let mut log = vec![IntegerizeEvent::Floor { objective }];

    let mut trial = vec![0.0; dim];
    while assigned < budget {
        let mut best: Option<(usize, f64)> = None;
        for (pos, &i) in support.iter().enumerate() {
            for ((t, r), p) in trial.iter_mut().zip(&residual).zip(pool.row(i)) {
                *t = r - p / n;
            }
            let err = squared_norm(&trial);
            if best.is_none_or(|(_, b)| err < b) {
                best = Some((pos, err));
            }
        }
        let (pos, err) = best.expect("support is non-empty");
        for (r, p) in residual.iter_mut().zip(pool.row(support[pos])) {
            *r -= p / n;
        }
        counts[pos] += 1;
        assigned += 1;
        objective = err;
        log.push(IntegerizeEvent::Fill { position: pos, objective });
    }

    let mut passes = 0;
    let mut converged = false;
    let mut delta = vec![0.0; dim];
    for _ in 0..swap_passes {
        passes += 1;
        let mut improved = false;
        for from in 0..support.len() {
            for to in 0..support.len() {
                if from == to || counts[from] == 0 {
                    continue;
                }
                for ((d, a), b) in delta.iter_mut().zip(pool.row(support[from])).zip(pool.row(support[to])) {
                    *d = (a - b) / n;
                }
                for ((t, r), d) in trial.iter_mut().zip(&residual).zip(&delta) {
                    *t = r + d;
                }
                let err = squared_norm(&trial);
                if err < objective {
                    counts[from] -= 1;
                    counts[to] += 1;
                    residual.copy_from_slice(&trial);
                    objective = err;
                    improved = true;
                    log.push(IntegerizeEvent::Swap { from, to, objective });
                }
            }
        }
        if !improved {
            converged = true;
            break;
        }
    }

    let multiset = SupportMultiset { support, counts, budget };
    debug_assert_eq!(multiset.total(), budget);
    Ok(Integerization { multiset, log, passes, converged })
}

/// Floor allocation followed by largest-remainder fill. Equal remainders
/// keep their support order.
pub fn pad_by_weights(w: &SimplexWeights, budget: usize) -> Result<SupportMultiset> {
    check_budget(budget)?;
    let (support, mut counts, scaled) = floors(w, budget);
    let assigned: usize = counts.iter().sum();
    if assigned > budget {
        return Err(HullftError::Numerical(format!("floor stage assigned {assigned} > {budget} units")));
    }
    let leftover = budget - assigned;
    let mut order: Vec<usize> = (0..support.len()).collect();
    let remainders: Vec<f64> = scaled.iter().zip(&counts).map(|(s, &c)| s - c as f64).collect();
    order.sort_by(|&a, &b| remainders[b].total_cmp(&remainders[a]));
    // leftover can exceed the support only through rounding of a tiny mass deficit
    for &pos in order.iter().cycle().take(leftover) {
        counts[pos] += 1;
    }
    Ok(SupportMultiset { support, counts, budget })
}

/// Bounds for exhaustive enumeration.
pub const BRUTE_FORCE_MAX_SUPPORT: usize = 5;
pub const BRUTE_FORCE_MAX_BUDGET: usize = 12;

/// Global minimizer of the multiset error by enumerating every composition
/// of `budget` over the support of `w`.
///
/// Compositions are visited in lexicographically descending order of the
/// count vector and only a strictly smaller error replaces the incumbent,
/// so ties resolve to the lexicographically largest counts (more units on
/// earlier support positions).
pub fn brute_force_integerize(
    q: &EmbeddingVector,
    pool: &CandidatePool,
    w: &SimplexWeights,
    budget: usize,
) -> Result<SupportMultiset> {
    check_budget(budget)?;
    pool.check_query(q)?;
    w.check_against(pool)?;
    let support: Vec<usize> = w.support().collect();
    if support.len() > BRUTE_FORCE_MAX_SUPPORT || budget > BRUTE_FORCE_MAX_BUDGET {
        return Err(HullftError::contract(format!(
            "enumeration limited to support <= {BRUTE_FORCE_MAX_SUPPORT} and N <= {BRUTE_FORCE_MAX_BUDGET} (got {} and {budget})",
            support.len()
        )));
    }

    let mut counts = vec![0usize; support.len()];
    let mut best: Option<(Vec<usize>, f64)> = None;
    enumerate(&mut counts, 0, budget, &mut |c| {
        let ms = SupportMultiset { support: support.clone(), counts: c.to_vec(), budget };
        let err = multiset_error(q, pool, &ms).expect("validated inputs");
        if best.as_ref().is_none_or(|(_, b)| err < *b) {
            best = Some((c.to_vec(), err));
        }
    });
    let (counts, _) = best.expect("at least one composition");
    Ok(SupportMultiset { support, counts, budget })
}

fn enumerate(counts: &mut [usize], pos: usize, remaining: usize, visit: &mut impl FnMut(&[usize])) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        visit(counts);
        return;
    }
    for c in (0..=remaining).rev() {
        counts[pos] = c;
        enumerate(counts, pos + 1, remaining - c, visit);
    }
}

/// Distance between fractional weights and the multiset's empirical weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    pub l2_distance: f64,
    /// `(pool index, |ŵ − w|)` over the union of both supports, sorted by index.
    pub per_index_deviation: Vec<(usize, f64)>,
}

/// `‖w − ŵ‖₂` with `ŵ_j = c_j / N`.
pub fn fidelity(w: &SimplexWeights, ms: &SupportMultiset) -> FidelityReport {
    let n = ms.budget.max(1) as f64;
    let mut union: Vec<usize> = w.support().chain(ms.support.iter().copied()).collect();
    union.sort_unstable();
    union.dedup();
    let per_index_deviation: Vec<(usize, f64)> = union
        .into_iter()
        .map(|i| {
            let empirical = ms.support.iter().position(|&s| s == i).map(|pos| ms.counts[pos] as f64 / n).unwrap_or(0.0);
            (i, (empirical - w.get(i)).abs())
        })
        .collect();
    let l2_distance = per_index_deviation.iter().map(|(_, d)| d * d).sum::<f64>().sqrt();
    FidelityReport { l2_distance, per_index_deviation }
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

    #[test]
    fn single_point_takes_everything() {
        let p = pool(&[&[1.0, 2.0]]);
        let w = SimplexWeights::vertex(1, 0).unwrap();
        let ms = integerize(&query(&[0.0, 0.0]), &p, &w, 7, 2).unwrap();
        assert_eq!(ms.counts, vec![7]);
        let brute = brute_force_integerize(&query(&[0.0, 0.0]), &p, &w, 4).unwrap();
        assert_eq!(brute.counts, vec![4]);
    }

    #[test]
    fn midpoint_three_units() {
        let p = pool(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let w = SimplexWeights::new(2, [(0, 0.5), (1, 0.5)]).unwrap();
        let q = query(&[0.5, 0.5]);
        let run = integerize_logged(&q, &p, &w, 3, 2).unwrap();
        assert_eq!(run.multiset.counts, vec![2, 1]);
        assert!(run.converged);
        let err = multiset_error(&q, &p, &run.multiset).unwrap();
        assert!((err - 1.0 / 18.0).abs() < 1e-15);

        let brute = brute_force_integerize(&q, &p, &w, 3).unwrap();
        assert_eq!(brute.counts, vec![2, 1]);
        assert!((multiset_error(&q, &p, &brute).unwrap() - 1.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn integral_weights_are_exact() {
        let p = pool(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let w = SimplexWeights::new(3, [(0, 0.7), (1, 0.2), (2, 0.1)]).unwrap();
        let q = query(&[0.7, 0.2, 0.1]);
        let ms = integerize(&q, &p, &w, 10, 2).unwrap();
        assert_eq!(ms.counts, vec![7, 2, 1]);
        assert!(multiset_error(&q, &p, &ms).unwrap() < 1e-30);
        let brute = brute_force_integerize(&q, &p, &w, 10).unwrap();
        assert_eq!(brute.counts, vec![7, 2, 1]);
    }

    #[test]
    fn budget_one_gets_single_unit() {
        let p = pool(&[&[1.0, 0.0], &[0.0, 1.0], &[0.4, 0.4]]);
        let w = SimplexWeights::new(3, [(0, 0.3), (1, 0.3), (2, 0.4)]).unwrap();
        let ms = integerize(&query(&[0.4, 0.4]), &p, &w, 1, 2).unwrap();
        assert_eq!(ms.counts, vec![0, 0, 1]);
    }

    #[test]
    fn zero_budget_rejected() {
        let p = pool(&[&[1.0]]);
        let w = SimplexWeights::vertex(1, 0).unwrap();
        assert!(integerize(&query(&[1.0]), &p, &w, 0, 2).is_err());
        assert!(pad_by_weights(&w, 0).is_err());
    }

    #[test]
    fn brute_force_refuses_large_instances() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let p = CandidatePool::from_rows(&rows, None).unwrap();
        let w = SimplexWeights::from_unnormalized(6, (0..6).map(|i| (i, 1.0)).collect()).unwrap();
        assert!(brute_force_integerize(&query(&[1.0]), &p, &w, 3).is_err());
        let w2 = SimplexWeights::vertex(6, 0).unwrap();
        assert!(brute_force_integerize(&query(&[1.0]), &p, &w2, 13).is_err());
    }

    #[test]
    fn pad_examples() {
        let w = SimplexWeights::new(3, [(0, 0.4), (1, 0.35), (2, 0.25)]).unwrap();
        assert_eq!(pad_by_weights(&w, 10).unwrap().counts, vec![4, 4, 2]);
        let w = SimplexWeights::vertex(1, 0).unwrap();
        assert_eq!(pad_by_weights(&w, 5).unwrap().counts, vec![5]);
        let third = 1.0 / 3.0;
        let w = SimplexWeights::new(3, [(0, third), (1, third), (2, third)]).unwrap();
        assert_eq!(pad_by_weights(&w, 4).unwrap().counts, vec![2, 1, 1]);
    }

    #[test]
    fn fidelity_examples() {
        let w = SimplexWeights::new(2, [(0, 0.5), (1, 0.5)]).unwrap();
        let exact = SupportMultiset { support: vec![0, 1], counts: vec![1, 1], budget: 2 };
        assert_eq!(fidelity(&w, &exact).l2_distance, 0.0);
        let off = SupportMultiset { support: vec![0, 1], counts: vec![2, 1], budget: 3 };
        assert!((fidelity(&w, &off).l2_distance - 2f64.sqrt() / 6.0).abs() < 1e-15);

        let w = SimplexWeights::new(3, [(0, 0.7), (1, 0.2), (2, 0.1)]).unwrap();
        let ms = SupportMultiset { support: vec![0, 1, 2], counts: vec![7, 2, 1], budget: 10 };
        assert!(fidelity(&w, &ms).l2_distance < 1e-15);

        // indices missing from the multiset contribute their full weight
        let partial = SupportMultiset { support: vec![0], counts: vec![1], budget: 1 };
        let w = SimplexWeights::new(2, [(0, 0.5), (1, 0.5)]).unwrap();
        assert!((fidelity(&w, &partial).l2_distance - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fill_step_can_raise_partial_objective() {
        // the partial multiset after flooring is not budget-feasible, so
        // the first fill may move its mean away from q
        let p = pool(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let w = SimplexWeights::new(2, [(0, 0.5), (1, 0.5)]).unwrap();
        let run = integerize_logged(&query(&[0.0, 0.0]), &p, &w, 1, 2).unwrap();
        assert_eq!(run.log[0].objective(), 0.0);
        assert_eq!(run.log[1].objective(), 1.0);
    }
}
