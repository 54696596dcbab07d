//! Exact Carathéodory reduction: rewrite a convex combination in `R^d` with
//! at most `d + 1` support points and the same weighted mean.

use faer::Mat;

use crate::error::{HullftError, Result};
use crate::geometry::{CandidatePool, SimplexWeights};

/// Weights below this are treated as eliminated.
pub const ELIMINATION_THRESHOLD: f64 = 1e-12;

/// Largest allowed ratio of smallest to largest singular value for a
/// dependency to count as found.
const NULLITY_RATIO: f64 = 1e-6;

/// Coefficients `α` with `Σ α_i = 0` and `Σ α_i p_i = 0`, aligned with the
/// input point order.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineDependency {
    pub coefficients: Vec<f64>,
}

/// Finds a nontrivial affine dependency among more than `d + 1` points.
///
/// Builds the `(d+1) × n` matrix of points lifted by a row of ones, pads it
/// with zero rows to `n × n` so the full right singular basis is available,
/// and returns the right singular vector of the smallest singular value,
/// signed so its first significant entry is positive.
pub fn find_affine_dependency(points: &[&[f64]]) -> Result<AffineDependency> {
    let n = points.len();
    let dim = points.first().map(|p| p.len()).unwrap_or(0);
    if dim == 0 {
        return Err(HullftError::contract("affine dependency needs points of dimension >= 1"));
    }
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(HullftError::DimensionMismatch { expected: dim, found: bad.len() });
    }
    if n <= dim + 1 {
        return Err(HullftError::contract(format!(
            "{n} points in R^{dim} need not be affinely dependent (need more than {})",
            dim + 1
        )));
    }

    let lifted = Mat::<f64>::from_fn(n, n, |row, col| match row {
        r if r < dim => points[col][r],
        r if r == dim => 1.0,
        _ => 0.0,
    });
    let svd = lifted.svd().map_err(|e| HullftError::Numerical(format!("SVD did not converge: {e:?}")))?;
    let sv = svd.S().column_vector();
    let mut smallest = 0;
    let mut largest = 0;
    for i in 1..sv.nrows() {
        if sv[i] < sv[smallest] {
            smallest = i;
        }
        if sv[i] > sv[largest] {
            largest = i;
        }
    }
    if sv[smallest] > NULLITY_RATIO * sv[largest] {
        return Err(HullftError::Numerical(format!(
            "no affine dependency: smallest singular value {} vs largest {}",
            sv[smallest], sv[largest]
        )));
    }
    let v = svd.V();
    let mut coefficients: Vec<f64> = (0..n).map(|i| v[(i, smallest)]).collect();
    // the SVD leaves the sign free; fix it so the first significant entry is positive
    let scale = coefficients.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if let Some(&lead) = coefficients.iter().find(|a| a.abs() > 1e-12 * scale) {
        if lead < 0.0 {
            coefficients.iter_mut().for_each(|a| *a = -*a);
        }
    }
    Ok(AffineDependency { coefficients })
}

/// Reduces the support of `w` to at most `d + 1` pool rows while keeping
/// `P w` fixed.
///
/// Each round finds an affine dependency over the active set, moves along
/// it until the first weight hits zero, and drops that index together with
/// any other weight that fell below [`ELIMINATION_THRESHOLD`].
pub fn caratheodory_reduce(pool: &CandidatePool, w: &SimplexWeights) -> Result<SimplexWeights> {
    w.check_against(pool)?;
    let limit = pool.dim() + 1;
    if w.support_size() <= limit {
        return Ok(w.clone());
    }

    let mut active: Vec<(usize, f64)> = w.entries().to_vec();
    while active.len() > limit {
        let points: Vec<&[f64]> = active.iter().map(|&(i, _)| pool.row(i)).collect();
        let mut alpha = find_affine_dependency(&points)?.coefficients;
        if !alpha.iter().any(|&a| a > 0.0) {
            alpha.iter_mut().for_each(|a| *a = -*a);
        }

        // argmin w_i / α_i over α_i > 0; near-equal ratios resolve to the lowest index
        let mut pivot: Option<(usize, f64)> = None;
        for (pos, (&(_, wi), &a)) in active.iter().zip(&alpha).enumerate() {
            if a <= 0.0 {
                continue;
            }
            let ratio = wi / a;
            match pivot {
                Some((_, best)) if ratio >= best - 1e-12 * best.abs() => {}
                _ => pivot = Some((pos, ratio)),
            }
        }
        let Some((pivot, gamma)) = pivot else {
            return Err(HullftError::Numerical("affine dependency has no positive coefficient".into()));
        };

        let before = active.len();
        for (entry, &a) in active.iter_mut().zip(&alpha) {
            entry.1 -= gamma * a;
        }
        active[pivot].1 = 0.0;
        active.retain(|&(_, wi)| wi >= ELIMINATION_THRESHOLD);
        debug_assert!(active.len() < before);
        if active.is_empty() {
            return Err(HullftError::Numerical("reduction eliminated every point".into()));
        }
    }
    SimplexWeights::from_unnormalized(w.dim(), active)
}
