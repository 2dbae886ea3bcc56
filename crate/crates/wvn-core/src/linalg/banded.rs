use num_complex::Complex64;

use super::SparseMatrix;
use crate::error::{Error, Result};

/// LU factorization with partial pivoting of `M - shift·I` for a banded `M`.
///
/// Row-major band storage: row `i` keeps columns `i - kl ..= i + ku + kl`,
/// the extra `kl` diagonals holding fill-in created by row interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    ab: Vec<Complex64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn factor(m: &SparseMatrix, shift: Complex64) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.ncols(),
            });
        }
        let b = m.bandwidth();
        let (kl, ku) = (b, b);
        let width = 2 * kl + ku + 1;
        let mut ab = vec![Complex64::new(0.0, 0.0); n * width];
        for (r, c, v) in m.iter() {
            ab[r * width + c + kl - r] = v;
        }
        for i in 0..n {
            ab[i * width + kl] -= shift;
        }
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            ab,
            ipiv: vec![0; n],
        };
        lu.eliminate(shift)?;
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width + j + self.kl - i
    }

    fn eliminate(&mut self, shift: Complex64) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.ab[self.at(k, k)].norm();
            for i in k + 1..=last {
                let v = self.ab[self.at(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Solver {
                    shift_re: shift.re,
                    shift_im: shift.im,
                    reason: format!("zero pivot in column {k}"),
                });
            }
            self.ipiv[k] = p;
            let jmax = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (self.at(k, j), self.at(p, j));
                    self.ab.swap(a, b);
                }
            }
            let pivot = self.ab[self.at(k, k)];
            for i in k + 1..=last {
                let ik = self.at(i, k);
                let l = self.ab[ik] / pivot;
                self.ab[ik] = l;
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..=jmax {
                    let kj = self.at(k, j);
                    let ij = self.at(i, j);
                    let u = self.ab[kj];
                    self.ab[ij] -= l * u;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `(M - shift) x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.ipiv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk == Complex64::new(0.0, 0.0) {
                continue;
            }
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.ab[self.at(i, k)] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + ku + kl).min(n - 1) {
                acc -= self.ab[self.at(i, j)] * b[j];
            }
            b[i] = acc / self.ab[self.at(i, i)];
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_shifted_tridiagonal() {
        let n = 9;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, Complex64::new(0.3 * i as f64, 0.0)));
            if i + 1 < n {
                trip.push((i, i + 1, Complex64::new(-1.0, 0.2)));
                trip.push((i + 1, i, Complex64::new(-1.0, -0.2)));
            }
        }
        let m = SparseMatrix::from_triplets(n, n, trip);
        let z = Complex64::new(0.7, 0.01);
        let lu = BandedLu::factor(&m, z).unwrap();
        let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let x = lu.solve(&b);
        let mx = m.mul_vec(&x);
        for i in 0..n {
            assert!((mx[i] - z * x[i] - b[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            vec![(0, 1, Complex64::new(1.0, 0.0)), (1, 0, Complex64::new(1.0, 0.0))],
        );
        let lu = BandedLu::factor(&m, Complex64::new(0.0, 0.0)).unwrap();
        let x = lu.solve(&[Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0)]);
        assert!((x[0] - Complex64::new(3.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }
}
