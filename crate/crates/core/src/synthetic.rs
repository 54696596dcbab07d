//! Seeded synthetic pools for benchmarks and fixtures.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::Result;
use crate::geometry::{normalize_rows, CandidatePool, EmbeddingVector};

/// `k` unit-norm Gaussian rows of dimension `dim`, ids `c0000, c0001, ...`.
pub fn synthetic_pool(k: usize, dim: usize, seed: u64) -> Result<CandidatePool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..k * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let ids = (0..k).map(|i| format!("c{i:04}")).collect();
    normalize_rows(&CandidatePool::from_flat(data, dim, Some(ids))?)
}

/// A random convex mixture of up to 40 pool rows plus Gaussian noise of
/// norm about 0.01, so the query sits just off the pool's hull.
pub fn synthetic_query(pool: &CandidatePool, seed: u64) -> Result<EmbeddingVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let anchors = pool.len().min(40);
    let mut picks: Vec<usize> = (0..pool.len()).collect();
    picks.shuffle(&mut rng);
    let raw: Vec<f64> = (0..anchors).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = raw.iter().sum();

    let mut q = vec![0.0; pool.dim()];
    for (&i, w) in picks.iter().zip(&raw) {
        for (x, p) in q.iter_mut().zip(pool.row(i)) {
            *x += w / total * p;
        }
    }
    let sigma = 0.01 / (pool.dim() as f64).sqrt();
    for x in q.iter_mut() {
        let noise: f64 = StandardNormal.sample(&mut rng);
        *x += sigma * noise;
    }
    EmbeddingVector::new(q)
}
