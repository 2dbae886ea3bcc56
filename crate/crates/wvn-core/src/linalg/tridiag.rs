/// Real symmetric tridiagonal matrix, used for one-dimensional Hamiltonians.
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        Self { diag, off }
    }

    /// Real symmetric matrices of bandwidth at most one.
    pub fn from_sparse(m: &crate::linalg::SparseMatrix) -> Option<Self> {
        if m.nrows() != m.ncols() || !m.is_real() || m.bandwidth() > 1 {
            return None;
        }
        let n = m.nrows();
        let diag = (0..n).map(|i| m.get(i, i).re).collect();
        let off: Vec<f64> = (0..n.saturating_sub(1)).map(|i| m.get(i, i + 1).re).collect();
        if (0..n.saturating_sub(1)).any(|i| m.get(i + 1, i).re != off[i]) {
            return None;
        }
        Some(Self::new(diag, off))
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0f64;
        for i in 0..self.dim() {
            let b2 = if i > 0 { self.off[i - 1] * self.off[i - 1] } else { 0.0 };
            q = self.diag[i] - x - if i > 0 { b2 / q } else { 0.0 };
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `j`-th smallest eigenvalue by bisection.
    pub fn eigenvalue(&self, j: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        lo -= 1e-12;
        hi += 1e-12;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// All eigenvalues in `[lo, hi)`, ascending.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let a = self.count_below(lo);
        let b = self.count_below(hi);
        (a..b).map(|j| self.eigenvalue(j)).collect()
    }

    /// Unit eigenvector for eigenvalue `lambda` by inverse iteration; `against`
    /// lists previously found vectors of nearby eigenvalues to orthogonalize
    /// against.
    pub fn eigenvector(&self, lambda: f64, against: &[Vec<f64>]) -> Vec<f64> {
        let n = self.dim();
        let scale = self.gershgorin().1.abs().max(self.gershgorin().0.abs()).max(1.0);
        let shift = lambda + 1e-13 * scale;
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 * 0.01).collect();
        normalize(&mut v);
        for _ in 0..6 {
            v = self.solve_shifted(shift, &v);
            for u in against {
                let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= d * ui;
                }
            }
            normalize(&mut v);
        }
        v
    }

    /// Solves `(T - shift) x = b` with partial pivoting.
    fn solve_shifted(&self, shift: f64, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        // rows hold (sub, diag, sup, sup2) after elimination
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - shift).collect();
        let mut du: Vec<f64> = self.off.clone();
        let mut dl: Vec<f64> = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut x = b.to_vec();
        let tiny = f64::MIN_POSITIVE.sqrt();
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let l = dl[i] / d[i];
                dl[i] = l;
                d[i + 1] -= l * du[i];
                x[i + 1] -= l * x[i];
            } else {
                let l = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = l;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - l * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -l;
                }
                x.swap(i, i + 1);
                x[i + 1] -= l * x[i];
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            if i + 1 < n {
                acc -= du[i] * x[i + 1];
            }
            if i + 2 < n {
                acc -= du2[i] * x[i + 2];
            }
            x[i] = acc / if d[i] == 0.0 { tiny } else { d[i] };
        }
        x
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn dirichlet_laplacian_spectrum() {
        let n = 20;
        let t = laplacian(n);
        for j in 0..n {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (j + 1) as f64 / (n + 1) as f64).cos();
            assert!((t.eigenvalue(j) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvector_residual() {
        let t = SymTridiagonal::new(
            (0..15).map(|i| 2.0 + 0.1 * (i as f64).sin()).collect(),
            vec![-1.0; 14],
        );
        let lam = t.eigenvalue(4);
        let v = t.eigenvector(lam, &[]);
        for i in 0..15 {
            let mut r = (t.diag[i] - lam) * v[i];
            if i > 0 {
                r += t.off[i - 1] * v[i - 1];
            }
            if i < 14 {
                r += t.off[i] * v[i + 1];
            }
            assert!(r.abs() < 1e-10);
        }
    }
}
