//! Mahalanobis metrics: representation, squared distances, PSD projection,
//! and the combined common + task-specific form used in multi-task training.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SpmlError};
use crate::linalg::{reassemble, symmetric_eigen};
use crate::scalar::Scalar;
use crate::sparse::{SparseDiff, SparseVec};

/// Tolerance separating eigensolver round-off from genuine negative curvature.
pub const PSD_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricShape {
    Diagonal,
    Full,
}

impl MetricShape {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricShape::Diagonal => "diagonal",
            MetricShape::Full => "full",
        }
    }

    fn storage_len(self, dim: usize) -> usize {
        match self {
            MetricShape::Diagonal => dim,
            MetricShape::Full => dim * dim,
        }
    }
}

impl std::str::FromStr for MetricShape {
    type Err = SpmlError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" | "diag" => Ok(MetricShape::Diagonal),
            "full" => Ok(MetricShape::Full),
            other => Err(SpmlError::InvalidConfig(format!("unknown metric shape `{other}`"))),
        }
    }
}

/// A matrix `M` defining `d_M(x, y) = (x - y)^T M (x - y)`.
///
/// Diagonal metrics store `d` values, full metrics a row-major `d x d` block.
/// Gradients share this type since they live in the same space.
#[derive(Debug, Clone, PartialEq)]
pub struct MahalanobisMetric<T> {
    shape: MetricShape,
    dim: usize,
    values: Vec<T>,
}

impl<T: Scalar> MahalanobisMetric<T> {
    pub fn from_values(shape: MetricShape, dim: usize, values: Vec<T>) -> Result<Self> {
        let expected = shape.storage_len(dim);
        if values.len() != expected {
            return Err(SpmlError::DimensionMismatch { expected, found: values.len() });
        }
        Ok(Self { shape, dim, values })
    }

    pub fn diagonal(values: Vec<T>) -> Self {
        Self { shape: MetricShape::Diagonal, dim: values.len(), values }
    }

    /// Row-major full matrix. Symmetry is not checked here; see [`symmetrize`].
    pub fn full(dim: usize, values: Vec<T>) -> Result<Self> {
        Self::from_values(MetricShape::Full, dim, values)
    }

    pub fn zeros(shape: MetricShape, dim: usize) -> Self {
        Self { shape, dim, values: vec![T::zero(); shape.storage_len(dim)] }
    }

    pub fn identity(shape: MetricShape, dim: usize) -> Self {
        let mut m = Self::zeros(shape, dim);
        m.add_identity(T::one());
        m
    }

    pub fn shape(&self) -> MetricShape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        match self.shape {
            MetricShape::Diagonal if r == c => self.values[r],
            MetricShape::Diagonal => T::zero(),
            MetricShape::Full => self.values[r * self.dim + c],
        }
    }

    pub fn to_dense(&self) -> Vec<T> {
        let d = self.dim;
        let mut out = vec![T::zero(); d * d];
        for r in 0..d {
            for c in 0..d {
                out[r * d + c] = self.get(r, c);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn is_symmetric(&self) -> bool {
        match self.shape {
            MetricShape::Diagonal => true,
            MetricShape::Full => {
                let d = self.dim;
                (0..d).all(|r| (r + 1..d).all(|c| self.values[r * d + c] == self.values[c * d + r]))
            }
        }
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> T {
        self.values.iter().map(|&v| v * v).sum()
    }

    /// Squared Frobenius distance to the identity, `||M - I||_F^2`.
    pub fn frobenius_sq_from_identity(&self) -> T {
        let mut shifted = self.clone();
        shifted.add_identity(-T::one());
        shifted.frobenius_sq()
    }

    pub fn scale(&mut self, c: T) {
        for v in &mut self.values {
            *v = *v * c;
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &Self, c: T) -> Result<()> {
        self.check_compatible(other)?;
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a = *a + c * b;
        }
        Ok(())
    }

    /// `self += c * I`.
    pub fn add_identity(&mut self, c: T) {
        let d = self.dim;
        for k in 0..d {
            let idx = match self.shape {
                MetricShape::Diagonal => k,
                MetricShape::Full => k * d + k,
            };
            self.values[idx] = self.values[idx] + c;
        }
    }

    /// `self += c * diff diff^T`; diagonal metrics keep only the diagonal of
    /// the outer product.
    pub fn add_outer(&mut self, diff: &SparseDiff<T>, c: T) {
        match self.shape {
            MetricShape::Diagonal => {
                for &(k, v) in &diff.entries {
                    self.values[k] = self.values[k] + c * v * v;
                }
            }
            MetricShape::Full => {
                let d = self.dim;
                for &(a, va) in &diff.entries {
                    let cva = c * va;
                    for &(b, vb) in &diff.entries {
                        self.values[a * d + b] = self.values[a * d + b] + cva * vb;
                    }
                }
            }
        }
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(SpmlError::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        if self.shape != other.shape {
            return Err(SpmlError::ShapeMismatch(format!(
                "{} vs {}",
                self.shape.as_str(),
                other.shape.as_str()
            )));
        }
        Ok(())
    }

    /// Quadratic form `diff^T M diff` over the support of `diff`.
    pub fn form(&self, diff: &SparseDiff<T>) -> T {
        match self.shape {
            MetricShape::Diagonal => diff
                .entries
                .iter()
                .fold(T::zero(), |acc, &(k, v)| acc + self.values[k] * v * v),
            MetricShape::Full => {
                let d = self.dim;
                diff.entries.iter().fold(T::zero(), |acc, &(a, va)| {
                    let row = diff
                        .entries
                        .iter()
                        .fold(T::zero(), |s, &(b, vb)| s + self.values[a * d + b] * vb);
                    acc + va * row
                })
            }
        }
    }

    pub fn distance(&self, x: &SparseVec<T>, y: &SparseVec<T>) -> Result<T> {
        distance(self, x, y)
    }

    /// Smallest eigenvalue (the smallest entry for diagonal metrics).
    pub fn min_eigenvalue(&self) -> Result<T> {
        let vals = match self.shape {
            MetricShape::Diagonal => self.values.clone(),
            MetricShape::Full => symmetric_eigen(&symmetrize(self).values, self.dim)?.values,
        };
        Ok(vals.into_iter().fold(T::infinity(), T::min))
    }

    pub fn is_psd(&self) -> Result<bool> {
        Ok(self.min_eigenvalue()? >= -T::from_f64_lossy(PSD_EPS))
    }

    /// Serializes as a small line-oriented text document. Values use the
    /// shortest representation that parses back to the same bits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "spml-metric 1");
        let _ = writeln!(out, "scalar {}", T::TYPE_TAG);
        let _ = writeln!(out, "shape {}", self.shape.as_str());
        let _ = writeln!(out, "dim {}", self.dim);
        for v in &self.values {
            let _ = writeln!(out, "{v:e}");
        }
        out
    }

    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
        let mut header = |key: &str| -> Result<String> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| SpmlError::parse(origin, 0, format!("missing `{key}` header")))?;
            let mut parts = line.splitn(2, ' ');
            match (parts.next(), parts.next()) {
                (Some(k), Some(v)) if k == key => Ok(v.trim().to_string()),
                _ => Err(SpmlError::parse(origin, no, format!("expected `{key} <value>`"))),
            }
        };
        if header("spml-metric")? != "1" {
            return Err(SpmlError::parse(origin, 1, "unsupported metric format version"));
        }
        let tag = header("scalar")?;
        if tag != T::TYPE_TAG {
            return Err(SpmlError::parse(origin, 2, format!("metric stores {tag}, expected {}", T::TYPE_TAG)));
        }
        let shape: MetricShape = header("shape")?.parse()?;
        let dim: usize = header("dim")?
            .parse()
            .map_err(|_| SpmlError::parse(origin, 4, "invalid dimension"))?;
        let mut values = Vec::with_capacity(shape.storage_len(dim));
        for (no, line) in lines {
            if line.is_empty() {
                continue;
            }
            let v = line
                .parse::<T>()
                .map_err(|_| SpmlError::parse(origin, no, format!("invalid value `{line}`")))?;
            values.push(v);
        }
        Self::from_values(shape, dim, values)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| SpmlError::io(path, e))
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SpmlError::io(path, e))?;
        Self::from_text(&text, path)
    }
}

/// Anything that can score a pair of attribute vectors with a squared
/// Mahalanobis-style distance.
pub trait PairDistance<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    fn form(&self, diff: &SparseDiff<T>) -> T;

    fn distance(&self, x: &SparseVec<T>, y: &SparseVec<T>) -> Result<T> {
        if x.dim() != self.dim() {
            return Err(SpmlError::DimensionMismatch { expected: self.dim(), found: x.dim() });
        }
        let diff = x.difference(y)?;
        Ok(self.form(&diff))
    }
}

impl<T: Scalar> PairDistance<T> for MahalanobisMetric<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn form(&self, diff: &SparseDiff<T>) -> T {
        MahalanobisMetric::form(self, diff)
    }
}

/// `(x - y)^T M (x - y)`. This is the squared form; no square root is taken.
pub fn distance<T: Scalar>(m: &MahalanobisMetric<T>, x: &SparseVec<T>, y: &SparseVec<T>) -> Result<T> {
    PairDistance::distance(m, x, y)
}

/// Common metric `M_0` plus task metric `M_q`; distances use `M_0 + M_q`.
#[derive(Debug, Clone, Copy)]
pub struct MetricPair<'a, T> {
    pub common: &'a MahalanobisMetric<T>,
    pub specific: &'a MahalanobisMetric<T>,
}

impl<'a, T: Scalar> MetricPair<'a, T> {
    pub fn new(common: &'a MahalanobisMetric<T>, specific: &'a MahalanobisMetric<T>) -> Result<Self> {
        common.check_compatible(specific)?;
        Ok(Self { common, specific })
    }

    /// The summed matrix `M_0 + M_q` as a standalone metric.
    pub fn combined(&self) -> MahalanobisMetric<T> {
        let mut m = self.common.clone();
        for (a, &b) in m.values.iter_mut().zip(&self.specific.values) {
            *a = *a + b;
        }
        m
    }
}

impl<T: Scalar> PairDistance<T> for MetricPair<'_, T> {
    fn dim(&self) -> usize {
        self.common.dim
    }

    fn form(&self, diff: &SparseDiff<T>) -> T {
        self.common.form(diff) + self.specific.form(diff)
    }
}

pub fn distance_mt<T: Scalar>(p: &MetricPair<'_, T>, x: &SparseVec<T>, y: &SparseVec<T>) -> Result<T> {
    p.distance(x, y)
}

/// `(M + M^T) / 2`; diagonal metrics are returned unchanged.
pub fn symmetrize<T: Scalar>(m: &MahalanobisMetric<T>) -> MahalanobisMetric<T> {
    let mut out = m.clone();
    symmetrize_in_place(&mut out);
    out
}

pub(crate) fn symmetrize_in_place<T: Scalar>(m: &mut MahalanobisMetric<T>) {
    if m.shape == MetricShape::Full {
        let d = m.dim;
        let half = T::half();
        for r in 0..d {
            for c in (r + 1)..d {
                let avg = (m.values[r * d + c] + m.values[c * d + r]) * half;
                m.values[r * d + c] = avg;
                m.values[c * d + r] = avg;
            }
        }
    }
}

/// Frobenius-nearest PSD matrix: negative diagonal entries (diagonal shape)
/// or negative eigenvalues (full shape) are clamped to zero.
pub fn psd_project<T: Scalar>(m: &MahalanobisMetric<T>) -> Result<MahalanobisMetric<T>> {
    if !m.is_finite() {
        return Err(SpmlError::Numerical("PSD projection of a metric with non-finite entries".into()));
    }
    match m.shape {
        MetricShape::Diagonal => {
            let values = m.values.iter().map(|&v| v.max(T::zero())).collect();
            Ok(MahalanobisMetric { shape: m.shape, dim: m.dim, values })
        }
        MetricShape::Full => {
            let sym = symmetrize(m);
            let mut eig = symmetric_eigen(&sym.values, m.dim)?;
            if eig.values.iter().all(|&v| v >= T::zero()) {
                return Ok(sym);
            }
            for v in &mut eig.values {
                *v = v.max(T::zero());
            }
            let mut out = MahalanobisMetric { shape: m.shape, dim: m.dim, values: reassemble(&eig, m.dim) };
            symmetrize_in_place(&mut out);
            Ok(out)
        }
    }
}
