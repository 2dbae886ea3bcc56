//! Chebyshev expansions on a hermitian sparse matrix: time evolution
//! `e^{-itH}` and polynomial fits of smooth spectral windows.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Interval `[lo, hi]` containing the spectrum of a hermitian matrix.
pub fn gershgorin(m: &SparseMatrix) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in 0..m.nrows() {
        let mut d = 0.0;
        let mut rad = 0.0;
        for (c, v) in m.row(r) {
            if c == r {
                d = v.re;
            } else {
                rad += v.norm();
            }
        }
        lo = lo.min(d - rad);
        hi = hi.max(d + rad);
    }
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    (lo, hi)
}

/// `(H - c)/a` with `[c - a, c + a]` a padded spectral enclosure.
#[derive(Debug, Clone)]
pub struct Rescaled<'a> {
    h: &'a SparseMatrix,
    center: f64,
    half_width: f64,
}

impl<'a> Rescaled<'a> {
    pub fn new(h: &'a SparseMatrix) -> Self {
        let (lo, hi) = gershgorin(h);
        let half = (0.5 * (hi - lo)).max(1e-12) * (1.0 + 1e-9) + 1e-12;
        Self {
            h,
            center: 0.5 * (lo + hi),
            half_width: half,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    /// `y = α (H - c)/a x + β y`.
    fn apply(&self, x: &[C64], y: &mut [C64], alpha: f64, beta: f64) {
        let s = alpha / self.half_width;
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (c, v) in self.h.row(r) {
                acc += v * x[c];
            }
            *out = s * (acc - self.center * x[r]) + beta * *out;
        }
    }
}

/// `J_0(x), …, J_n(x)` by Miller's backward recurrence, normalized with
/// `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j(n: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = n.max(x.abs().ceil() as usize) + 40 + (x.abs().sqrt() * 10.0) as usize;
    let start = start + (start & 1);
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut norm = 0.0;
    for m in (1..=start).rev() {
        let prev = 2.0 * m as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // `cur` is now J_{m-1}.
        if m - 1 <= n {
            out[m - 1] = cur;
        }
        if (m - 1) % 2 == 0 && m > 1 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            let scale = 1e-250;
            cur *= scale;
            next *= scale;
            norm *= scale;
            for v in out.iter_mut() {
                *v *= scale;
            }
        }
    }
    norm += cur;
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// Propagation error budget and expansion length for one step.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepInfo {
    pub terms: usize,
    pub tail_bound: f64,
}

/// `e^{-itH}` by Chebyshev expansion on the rescaled spectrum.
#[derive(Debug, Clone)]
pub struct Propagator<'a> {
    op: Rescaled<'a>,
    coeffs: Vec<C64>,
    info: StepInfo,
    dt: f64,
}

impl<'a> Propagator<'a> {
    /// Fixed step `dt`, with the series cut once the Bessel tail is below `tol`.
    pub fn new(h: &'a SparseMatrix, dt: f64, tol: f64) -> Result<Self> {
        if !(dt.is_finite() && tol > 0.0) {
            return Err(Error::InvalidParameter("propagator needs finite dt and tol > 0".into()));
        }
        let op = Rescaled::new(h);
        let x = op.half_width * dt;
        let nmax = (x.abs().ceil() as usize) * 2 + 60;
        let j = bessel_j(nmax, x.abs());
        let mut terms = nmax;
        for m in (x.abs().ceil() as usize + 1)..nmax {
            let tail: f64 = j[m..].iter().map(|v| 2.0 * v.abs()).sum();
            if tail < tol {
                terms = m;
                break;
            }
        }
        let tail_bound: f64 = j[terms..].iter().map(|v| 2.0 * v.abs()).sum();
        let phase = C64::from_polar(1.0, -op.center * dt);
        let sign = if dt < 0.0 { -1.0 } else { 1.0 };
        let mut coeffs = Vec::with_capacity(terms);
        let mut mi = C64::new(1.0, 0.0);
        for (m, jm) in j.iter().enumerate().take(terms) {
            let w = if m == 0 { 1.0 } else { 2.0 };
            // J_m(-x) = (-1)^m J_m(x).
            let jm = if sign < 0.0 && m % 2 == 1 { -jm } else { *jm };
            coeffs.push(phase * mi * (w * jm));
            mi *= C64::new(0.0, -1.0);
        }
        Ok(Self {
            op,
            coeffs,
            info: StepInfo { terms, tail_bound },
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn info(&self) -> StepInfo {
        self.info
    }

    /// One step: returns `e^{-i dt H} v`.
    pub fn step(&self, v: &[C64]) -> Vec<C64> {
        series_apply(&self.op, &self.coeffs, v)
    }
}

/// `Σ c_m T_m(H̃) v` by the three-term recurrence.
fn series_apply(op: &Rescaled<'_>, coeffs: &[C64], v: &[C64]) -> Vec<C64> {
    let n = v.len();
    let mut out: Vec<C64> = v.iter().map(|x| coeffs[0] * x).collect();
    if coeffs.len() == 1 {
        return out;
    }
    let mut prev = v.to_vec();
    let mut cur = vec![ZERO; n];
    op.apply(v, &mut cur, 1.0, 0.0);
    for (o, c) in out.iter_mut().zip(&cur) {
        *o += coeffs[1] * c;
    }
    for &cm in &coeffs[2..] {
        // prev <- 2 H̃ cur - prev
        op.apply(&cur, &mut prev, 2.0, -1.0);
        std::mem::swap(&mut prev, &mut cur);
        for (o, c) in out.iter_mut().zip(&cur) {
            *o += cm * c;
        }
    }
    out
}

/// Chebyshev interpolant of a real function on `[lo, hi]`.
#[derive(Debug, Clone, Serialize)]
pub struct ChebyshevSeries {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
    /// Sup error measured on a grid four times finer than the degree.
    pub sup_error: f64,
}

impl ChebyshevSeries {
    /// Doubles the degree from 32 until the measured sup error is `≤ tol`.
    pub fn fit<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64, max_degree: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidParameter(format!("empty fit interval [{lo}, {hi}]")));
        }
        let mut n = 32;
        loop {
            let coeffs = cheb_coeffs(&f, lo, hi, n);
            let mut s = Self {
                lo,
                hi,
                coeffs,
                sup_error: 0.0,
            };
            let tail = s.coeffs[n * 7 / 8..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if tail < tol {
                let probes = 4 * n;
                s.sup_error = (0..=probes)
                    .map(|i| {
                        let x = lo + (hi - lo) * i as f64 / probes as f64;
                        (s.eval(x) - f(x)).abs()
                    })
                    .fold(0.0, f64::max);
                if s.sup_error <= tol {
                    s.trim(tol * 1e-3);
                    return Ok(s);
                }
            }
            if n >= max_degree {
                return Err(Error::InvalidParameter(format!(
                    "Chebyshev fit did not reach {tol:e} by degree {max_degree}"
                )));
            }
            n *= 2;
        }
    }

    fn trim(&mut self, tol: f64) {
        let mut acc = 0.0;
        let mut cut = self.coeffs.len();
        while cut > 1 && acc + self.coeffs[cut - 1].abs() < tol {
            acc += self.coeffs[cut - 1].abs();
            cut -= 1;
        }
        self.coeffs.truncate(cut);
        self.sup_error += acc;
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }

    /// `f(H) v`; the fit interval must enclose the Gershgorin bounds of `h`.
    pub fn apply(&self, h: &SparseMatrix, v: &[C64]) -> Result<Vec<C64>> {
        let (glo, ghi) = gershgorin(h);
        if glo < self.lo - 1e-12 || ghi > self.hi + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "fit interval [{}, {}] does not enclose the spectrum bound [{glo}, {ghi}]",
                self.lo, self.hi
            )));
        }
        let op = Rescaled {
            h,
            center: 0.5 * (self.lo + self.hi),
            half_width: 0.5 * (self.hi - self.lo),
        };
        let c: Vec<C64> = self.coeffs.iter().map(|&x| C64::new(x, 0.0)).collect();
        Ok(series_apply(&op, &c, v))
    }
}

fn cheb_coeffs<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let theta: Vec<f64> = (0..n).map(|k| std::f64::consts::PI * (k as f64 + 0.5) / n as f64).collect();
    let fv: Vec<f64> = theta
        .iter()
        .map(|t| f(0.5 * (lo + hi) + 0.5 * (hi - lo) * t.cos()))
        .collect();
    let mut c = vec![0.0; n];
    // T_j(cos θ_k) = cos(jθ_k), advanced by the angle-addition recurrence per node.
    let mut tprev = vec![1.0; n];
    let mut tcur: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
    let two_cos: Vec<f64> = tcur.iter().map(|x| 2.0 * x).collect();
    c[0] = fv.iter().sum::<f64>() / n as f64;
    for (j, cj) in c.iter_mut().enumerate().skip(1) {
        if j > 1 {
            for k in 0..n {
                let next = two_cos[k] * tcur[k] - tprev[k];
                tprev[k] = tcur[k];
                tcur[k] = next;
            }
        }
        *cj = 2.0 / n as f64 * fv.iter().zip(&tcur).map(|(a, b)| a * b).sum::<f64>();
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{laplacian, Boundary, LatticeBox};
    use crate::linalg::{norm2, HermitianEigen};

    #[test]
    fn bessel_values() {
        let j = bessel_j(5, 1.0);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-14);
        assert!((j[5] - 2.497_577_302_112_344e-4).abs() < 1e-16);
        let j = bessel_j(3, 30.0);
        assert!((j[0] - (-0.086_367_983_581_040_2)).abs() < 1e-13);
    }

    #[test]
    fn propagation_matches_eigendecomposition() {
        let lat = LatticeBox::new(1, 20, Boundary::Dirichlet).unwrap();
        let h = laplacian(&lat);
        let p = Propagator::new(h.matrix(), 0.7, 1e-13).unwrap();
        let mut v = vec![ZERO; lat.len()];
        v[20] = C64::new(1.0, 0.0);
        let mut w = v.clone();
        for _ in 0..10 {
            w = p.step(&w);
        }
        let eig = HermitianEigen::new(&h.matrix().to_dense());
        let u = eig.apply_function(|l| C64::from_polar(1.0, -7.0 * l));
        let exact: Vec<C64> = (0..lat.len()).map(|r| u[(r, 20)]).collect();
        let err = w.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-11, "{err}");
        assert!((norm2(&w) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn series_fit_and_apply() {
        let s = ChebyshevSeries::fit(|x| (-x * x).exp(), -1.0, 5.0, 1e-10, 4096).unwrap();
        assert!(s.sup_error <= 1e-10);
        let lat = LatticeBox::new(1, 6, Boundary::Dirichlet).unwrap();
        let h = laplacian(&lat);
        let mut v = vec![ZERO; lat.len()];
        v[3] = C64::new(1.0, 0.0);
        let got = s.apply(h.matrix(), &v).unwrap();
        let eig = HermitianEigen::new(&h.matrix().to_dense());
        let m = eig.apply_function(|l| C64::new((-l * l).exp(), 0.0));
        for r in 0..lat.len() {
            assert!((got[r] - m[(r, 3)]).norm() < 1e-9);
        }
        assert!(s.apply(&h.matrix().scale_real(3.0), &v).is_err());
    }
}
