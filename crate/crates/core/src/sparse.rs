//! Sparse attribute vectors stored as sorted `(index, value)` pairs.

use crate::error::{Result, SpmlError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseVec<T> {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<T>,
}

impl<T: Scalar> SparseVec<T> {
    /// Builds a vector from `(index, value)` pairs. Indices must be strictly
    /// increasing and below `dim`; explicit zeros are dropped.
    pub fn new(dim: usize, entries: Vec<(usize, T)>) -> Result<Self> {
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut prev: Option<usize> = None;
        for (idx, v) in entries {
            if idx >= dim {
                return Err(SpmlError::FeatureOutOfRange { node: usize::MAX, index: idx, dim });
            }
            if prev.is_some_and(|p| p >= idx) {
                return Err(SpmlError::UnsortedFeatures { node: usize::MAX });
            }
            prev = Some(idx);
            if v != T::zero() {
                indices.push(idx as u32);
                values.push(v);
            }
        }
        Ok(Self { dim, indices, values })
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, indices: Vec::new(), values: Vec::new() }
    }

    pub fn from_dense(dense: &[T]) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (k, &v) in dense.iter().enumerate() {
            if v != T::zero() {
                indices.push(k as u32);
                values.push(v);
            }
        }
        Self { dim: dense.len(), indices, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.indices.iter().map(|&i| i as usize).zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for (k, v) in self.iter() {
            out[k] = v;
        }
        out
    }

    pub fn get(&self, index: usize) -> T {
        match self.indices.binary_search(&(index as u32)) {
            Ok(pos) => self.values[pos],
            Err(_) => T::zero(),
        }
    }

    pub fn squared_norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum()
    }

    /// `self - other` over the union of both supports, in ascending index
    /// order. Exact zeros are omitted.
    pub fn difference(&self, other: &Self) -> Result<SparseDiff<T>> {
        if self.dim != other.dim {
            return Err(SpmlError::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let (a, b) = (&self.indices, &other.indices);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut p, mut q) = (0, 0);
        while p < a.len() || q < b.len() {
            let (idx, v) = if q == b.len() || (p < a.len() && a[p] < b[q]) {
                p += 1;
                (a[p - 1], self.values[p - 1])
            } else if p == a.len() || b[q] < a[p] {
                q += 1;
                (b[q - 1], -other.values[q - 1])
            } else {
                p += 1;
                q += 1;
                (a[p - 1], self.values[p - 1] - other.values[q - 1])
            };
            if v != T::zero() {
                out.push((idx as usize, v));
            }
        }
        Ok(SparseDiff { dim: self.dim, entries: out })
    }
}

/// Difference of two attribute vectors; the support of the quadratic forms.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDiff<T> {
    pub dim: usize,
    pub entries: Vec<(usize, T)>,
}
