use faer::Mat;

use crate::error::{HullftError, Result};
use crate::geometry::{CandidatePool, EmbeddingVector};

/// A principal-component projection fitted on a pool together with its query.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Orthonormal principal directions, strongest first, one per row of
    /// length `d`. Rows beyond the rank of the centered data are zero.
    pub components: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
}

impl Pca {
    /// Fits `target_dim` directions on the `K + 1` points `pool ∪ {q}`.
    ///
    /// Each direction is signed so its largest-magnitude entry is positive.
    pub fn fit(q: &EmbeddingVector, pool: &CandidatePool, target_dim: usize) -> Result<Self> {
        pool.check_query(q)?;
        let dim = pool.dim();
        if target_dim == 0 || target_dim > dim {
            return Err(HullftError::contract(format!("PCA target dimension {target_dim} not in 1..={dim}")));
        }
        let n = pool.len() + 1;
        let point = |i: usize| if i < pool.len() { pool.row(i) } else { q.as_slice() };

        let mut mean = vec![0.0; dim];
        for i in 0..n {
            for (m, x) in mean.iter_mut().zip(point(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        let centered = Mat::<f64>::from_fn(n, dim, |i, j| point(i)[j] - mean[j]);
        let svd = centered.svd().map_err(|e| HullftError::Numerical(format!("PCA SVD did not converge: {e:?}")))?;
        let sv = svd.S().column_vector();
        let v = svd.V();

        // only the first min(K + 1, d) directions carry singular values
        let mut order: Vec<usize> = (0..sv.nrows()).collect();
        order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));

        let mut components = Vec::with_capacity(target_dim);
        let mut singular_values = Vec::with_capacity(target_dim);
        for &idx in order.iter().take(target_dim) {
            let mut dir: Vec<f64> = (0..dim).map(|j| v[(j, idx)]).collect();
            let mut pivot = 0;
            for (j, x) in dir.iter().enumerate() {
                if x.abs() > dir[pivot].abs() {
                    pivot = j;
                }
            }
            if dir[pivot] < 0.0 {
                dir.iter_mut().for_each(|x| *x = -*x);
            }
            components.push(dir);
            singular_values.push(sv[idx]);
        }
        while components.len() < target_dim {
            components.push(vec![0.0; dim]);
            singular_values.push(0.0);
        }
        Ok(Self { mean, components, singular_values })
    }

    pub fn target_dim(&self) -> usize {
        self.components.len()
    }

    pub fn transform_vector(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(x).zip(&self.mean).map(|((ci, xi), mi)| ci * (xi - mi)).sum())
            .collect()
    }

    pub fn transform_query(&self, q: &EmbeddingVector) -> Result<EmbeddingVector> {
        EmbeddingVector::new(self.transform_vector(q.as_slice()))
    }

    pub fn transform_pool(&self, pool: &CandidatePool) -> Result<CandidatePool> {
        let data: Vec<f64> = pool.rows().flat_map(|r| self.transform_vector(r)).collect();
        pool.with_data(data, self.target_dim())
    }
}
