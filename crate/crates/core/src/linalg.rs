//! Dense symmetric eigendecomposition (cyclic Jacobi), generic over [`Scalar`].
//!
//! Metric matrices in full mode are small (d in the tens), where Jacobi is
//! accurate to machine precision and simple to keep scalar-generic.

use crate::error::{Result, SpmlError};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix. `vectors` is row-major with eigenvectors
/// stored as columns, in the same order as `values`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<T>,
}

/// Decomposes the row-major symmetric `d x d` matrix `a`.
pub fn symmetric_eigen<T: Scalar>(a: &[T], d: usize) -> Result<SymmetricEigen<T>> {
    if a.len() != d * d {
        return Err(SpmlError::DimensionMismatch { expected: d * d, found: a.len() });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(SpmlError::Numerical("eigendecomposition of a matrix with non-finite entries".into()));
    }
    let mut m = a.to_vec();
    let mut v = vec![T::zero(); d * d];
    for k in 0..d {
        v[k * d + k] = T::one();
    }
    let total: T = m.iter().map(|&x| x * x).sum();
    let tol = T::epsilon() * T::epsilon() * total * T::from_usize_lossy(d.max(1));

    for _ in 0..MAX_SWEEPS {
        let off: T = (0..d)
            .flat_map(|p| (0..d).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| m[p * d + q] * m[p * d + q])
            .sum();
        if off <= tol || off == T::zero() {
            let values = (0..d).map(|k| m[k * d + k]).collect();
            return Ok(SymmetricEigen { values, vectors: v });
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m[p * d + q];
                if apq == T::zero() {
                    continue;
                }
                let two = T::one() + T::one();
                let theta = (m[q * d + q] - m[p * d + p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (x, y) = (m[k * d + p], m[k * d + q]);
                    m[k * d + p] = c * x - s * y;
                    m[k * d + q] = s * x + c * y;
                }
                for k in 0..d {
                    let (x, y) = (m[p * d + k], m[q * d + k]);
                    m[p * d + k] = c * x - s * y;
                    m[q * d + k] = s * x + c * y;
                }
                m[p * d + q] = T::zero();
                m[q * d + p] = T::zero();
                for k in 0..d {
                    let (x, y) = (v[k * d + p], v[k * d + q]);
                    v[k * d + p] = c * x - s * y;
                    v[k * d + q] = s * x + c * y;
                }
            }
        }
    }
    Err(SpmlError::Numerical(format!("Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps")))
}

/// Rebuilds `V diag(values) V^T` as a row-major matrix.
pub fn reassemble<T: Scalar>(eig: &SymmetricEigen<T>, d: usize) -> Vec<T> {
    let mut out = vec![T::zero(); d * d];
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda == T::zero() {
            continue;
        }
        for r in 0..d {
            let vr = eig.vectors[r * d + k] * lambda;
            for c in 0..d {
                out[r * d + c] = out[r * d + c] + vr * eig.vectors[c * d + k];
            }
        }
    }
    out
}
