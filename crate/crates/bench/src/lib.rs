//! Benchmark fixtures.

use hullft_core::synthetic::{synthetic_pool, synthetic_query};
use hullft_core::{frank_wolfe, CandidatePool, EmbeddingVector, FwConfig, SimplexWeights};

/// A seeded pool of `k` unit rows in `dim` dimensions and a query near its hull.
pub fn fixture(k: usize, dim: usize, seed: u64) -> (CandidatePool, EmbeddingVector) {
    let pool = synthetic_pool(k, dim, seed).expect("valid synthetic sizes");
    let query = synthetic_query(&pool, seed).expect("finite query");
    (pool, query)
}

/// Frank–Wolfe weights for `budget`, used as input to the later stages.
pub fn fw_weights(pool: &CandidatePool, query: &EmbeddingVector, budget: usize) -> SimplexWeights {
    frank_wolfe(query, pool, &FwConfig::for_budget(budget)).expect("valid fixture").weights
}
