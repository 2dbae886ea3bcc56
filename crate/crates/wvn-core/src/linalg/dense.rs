use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Largest dimension handled by dense eigendecompositions.
pub const MAX_DENSE_DIM: usize = 4096;

/// Eigenpairs of a hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl HermitianEigen {
    /// Diagonalizes `m`, using a real symmetric solver when every entry is
    /// real.
    pub fn new(m: &DMatrix<Complex64>) -> Self {
        if m.iter().all(|v| v.im == 0.0) {
            let real = m.map(|v| v.re);
            let (values, vecs) = real_symmetric_eigen(real);
            return Self {
                values,
                vectors: vecs.map(|v| Complex64::new(v, 0.0)),
            };
        }
        let eig = SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..m.nrows()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
        Self { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `f(M) = V diag(f(λ)) V^†`.
    pub fn apply_function<F: Fn(f64) -> Complex64>(&self, f: F) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for c in 0..n {
            let w = f(self.values[c]);
            for r in 0..n {
                scaled[(r, c)] *= w;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// Indices of eigenvalues inside the open interval `(lo, hi)`.
    pub fn indices_in(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.values[i] > lo && self.values[i] < hi)
            .collect()
    }
}

/// Real symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn real_symmetric_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Spectral norm of a general dense matrix (largest singular value).
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = m.adjoint() * m;
    let eig = HermitianEigen::new(&gram);
    eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_sorted_and_reconstruct() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(-1.0, 0.0),
            ],
        );
        let eig = HermitianEigen::new(&m);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let back = eig.apply_function(|x| Complex64::new(x, 0.0));
        assert!((back - m).norm() < 1e-13);
    }
}
