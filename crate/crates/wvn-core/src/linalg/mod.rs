//! Linear algebra kernels: sparse storage, banded LU, tridiagonal bisection
//! and dense hermitian eigendecompositions.

mod banded;
mod dense;
mod sparse;
mod tridiag;

pub use banded::BandedLu;
pub use dense::{real_symmetric_eigen, spectral_norm, HermitianEigen, MAX_DENSE_DIM};
pub use sparse::SparseMatrix;
pub use tridiag::SymTridiagonal;

use num_complex::Complex64;

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
