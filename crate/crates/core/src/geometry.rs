//! Shared vector and pool types plus the reconstruction-error primitive.
//!
//! Pools are stored row-major in one contiguous `f64` buffer; every other
//! module reads rows through [`CandidatePool::row`].

use std::collections::HashSet;

use crate::error::{HullftError, Result};

/// Tolerance on the total mass of a [`SimplexWeights`] vector.
pub const SIMPLEX_SUM_TOLERANCE: f64 = 1e-9;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn squared_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// A finite, non-empty embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(HullftError::contract("embedding must have dimension >= 1"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(HullftError::NonFinite(format!("embedding coordinate {pos}")));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// An immutable K x d matrix of candidate embeddings with stable identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    data: Vec<f64>,
    len: usize,
    dim: usize,
    ids: Vec<String>,
}

impl CandidatePool {
    /// Builds a pool from a row-major buffer. Ids default to `"0".."K-1"`.
    pub fn from_flat(data: Vec<f64>, dim: usize, ids: Option<Vec<String>>) -> Result<Self> {
        if dim == 0 {
            return Err(HullftError::contract("pool dimension must be >= 1"));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(HullftError::contract(format!(
                "pool buffer of length {} is not a non-empty multiple of d={dim}",
                data.len()
            )));
        }
        let len = data.len() / dim;
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(HullftError::NonFinite(format!("pool row {} coordinate {}", pos / dim, pos % dim)));
        }
        let ids = match ids {
            Some(ids) => {
                if ids.len() != len {
                    return Err(HullftError::contract(format!("{} ids supplied for {len} rows", ids.len())));
                }
                let mut seen = HashSet::with_capacity(len);
                for id in &ids {
                    if !seen.insert(id.as_str()) {
                        return Err(HullftError::contract(format!("duplicate candidate id {id:?}")));
                    }
                }
                ids
            }
            None => (0..len).map(|i| i.to_string()).collect(),
        };
        Ok(Self { data, len, dim, ids })
    }

    pub fn from_rows(rows: &[Vec<f64>], ids: Option<Vec<String>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(HullftError::contract(format!("row {i} has dimension {} but row 0 has {dim}", row.len())));
        }
        Self::from_flat(rows.concat(), dim, ids)
    }

    /// Number of candidates K.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Builds a new pool from a subset of rows, keeping their ids.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        let mut ids = Vec::with_capacity(indices.len());
        for &i in indices {
            self.check_index(i)?;
            data.extend_from_slice(self.row(i));
            ids.push(self.ids[i].clone());
        }
        Self::from_flat(data, self.dim, Some(ids))
    }

    /// Same ids, new coordinates (used by dimensionality reduction).
    pub(crate) fn with_data(&self, data: Vec<f64>, dim: usize) -> Result<Self> {
        Self::from_flat(data, dim, Some(self.ids.clone()))
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len {
            Err(HullftError::IndexOutOfRange { index: i, len: self.len })
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_query(&self, q: &EmbeddingVector) -> Result<()> {
        if q.dim() != self.dim {
            Err(HullftError::DimensionMismatch { expected: self.dim, found: q.dim() })
        } else {
            Ok(())
        }
    }

    /// Writes `P w` into `out`.
    pub fn combine_into(&self, w: &SimplexWeights, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for &(i, wi) in w.entries() {
            for (o, p) in out.iter_mut().zip(self.row(i)) {
                *o += wi * p;
            }
        }
    }

    pub fn combine(&self, w: &SimplexWeights) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.combine_into(w, &mut out);
        out
    }
}

/// Sparse nonnegative weights over pool indices summing to one.
///
/// Entries are kept sorted by index and every stored weight is strictly
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights {
    entries: Vec<(usize, f64)>,
    dim: usize,
}

impl SimplexWeights {
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut entries: Vec<(usize, f64)> = entries.into_iter().collect();
        entries.sort_by_key(|&(i, _)| i);
        if entries.is_empty() {
            return Err(HullftError::contract("simplex weights need at least one entry"));
        }
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(HullftError::contract(format!("duplicate weight index {}", pair[0].0)));
            }
        }
        for &(i, w) in &entries {
            if i >= dim {
                return Err(HullftError::IndexOutOfRange { index: i, len: dim });
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(HullftError::contract(format!("weight at index {i} is {w}, must be > 0")));
            }
        }
        let sum: f64 = entries.iter().map(|e| e.1).sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOLERANCE {
            return Err(HullftError::contract(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { entries, dim })
    }

    /// The vertex `e_i`.
    pub fn vertex(dim: usize, index: usize) -> Result<Self> {
        Self::new(dim, [(index, 1.0)])
    }

    /// Clamps negatives and tiny drift to zero, drops zeros and rescales to
    /// unit mass. Used on the output of iterative solvers.
    pub fn from_dense_clamped(dense: &[f64]) -> Result<Self> {
        let kept: Vec<(usize, f64)> =
            dense.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(i, &w)| (i, w)).collect();
        Self::from_unnormalized(dense.len(), kept)
    }

    /// Rescales positive entries to unit mass.
    pub fn from_unnormalized(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(HullftError::Numerical(format!("cannot normalize weights with mass {total}")));
        }
        Self::new(dim, entries.into_iter().map(|(i, w)| (i, w / total)))
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// K, the length of the dense vector these weights live in.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries.binary_search_by_key(&index, |e| e.0).map(|pos| self.entries[pos].1).unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        for &(i, w) in &self.entries {
            dense[i] = w;
        }
        dense
    }

    pub(crate) fn check_against(&self, pool: &CandidatePool) -> Result<()> {
        if self.dim != pool.len() {
            return Err(HullftError::DimensionMismatch { expected: pool.len(), found: self.dim });
        }
        Ok(())
    }
}

/// `‖q − P w‖²`, accumulated in double precision.
pub fn reconstruction_error(q: &EmbeddingVector, pool: &CandidatePool, w: &SimplexWeights) -> Result<f64> {
    pool.check_query(q)?;
    w.check_against(pool)?;
    let mix = pool.combine(w);
    Ok(squared_distance(q.as_slice(), &mix))
}

/// Scales each row to unit ℓ2 norm. Ids are preserved.
pub fn normalize_rows(pool: &CandidatePool) -> Result<CandidatePool> {
    let mut data = Vec::with_capacity(pool.as_flat().len());
    for (i, row) in pool.rows().enumerate() {
        let norm = squared_norm(row).sqrt();
        if norm == 0.0 {
            return Err(HullftError::ZeroVector { index: i });
        }
        data.extend(row.iter().map(|x| x / norm));
    }
    pool.with_data(data, pool.dim())
}
