use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{dot, squared_distance, CandidatePool, EmbeddingVector};

/// Similarity used to rank corpus rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnMetric {
    /// `⟨q, p⟩`; equals cosine similarity on normalized embeddings.
    #[default]
    InnerProduct,
    /// Negative squared Euclidean distance.
    Euclidean,
}

/// The preselected pool plus where each row came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Preselection {
    pub pool: CandidatePool,
    /// Corpus row index of each pool row.
    pub source_indices: Vec<usize>,
    pub scores: Vec<f64>,
}

/// Rows scored in parallel only above this many coordinates.
const PARALLEL_THRESHOLD: usize = 1 << 16;

/// Exact brute-force top-`k` by score, descending, ties to the lower corpus index.
pub fn knn_preselect(corpus: &CandidatePool, q: &EmbeddingVector, k: usize, metric: KnnMetric) -> Result<Preselection> {
    corpus.check_query(q)?;
    let q = q.as_slice();
    let score = |row: &[f64]| match metric {
        KnnMetric::InnerProduct => dot(q, row),
        KnnMetric::Euclidean => -squared_distance(q, row),
    };
    let scores: Vec<f64> = if corpus.as_flat().len() >= PARALLEL_THRESHOLD {
        corpus.as_flat().par_chunks_exact(corpus.dim()).map(score).collect()
    } else {
        corpus.rows().map(score).collect()
    };

    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k.min(corpus.len()));

    let pool = corpus.select_rows(&order)?;
    let scores = order.iter().map(|&i| scores[i]).collect();
    Ok(Preselection { pool, source_indices: order, scores })
}
