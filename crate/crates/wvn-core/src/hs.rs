//! Helffer–Sjöstrand functional calculus: `φ(A)` as a complex-plane
//! quadrature of `∂̄φ̃_N(z) (z - A)^{-1}`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{factorial, MAX_DERIVATIVE};
use crate::linalg::{HermitianEigen, SparseMatrix, MAX_DENSE_DIM};
use crate::operator::LinearOperator;
use crate::par::{self, ExecPolicy};
use crate::smooth::{SmoothFunction, SmoothWindow, Truncated};

type C64 = Complex64;

pub const DEFAULT_ORDER: usize = 3;

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// `φ̃_N(x+iy) = Σ_{n≤N} φ^{(n)}(x) (iy)^n/n! · θ(y/⟨x⟩)`.
pub struct AlmostAnalyticExtension<'a> {
    base: &'a dyn SmoothFunction,
    order: usize,
    bump: SmoothWindow,
}

impl<'a> AlmostAnalyticExtension<'a> {
    pub fn new(base: &'a dyn SmoothFunction, order: usize) -> Result<Self> {
        if order == 0 || order + 1 > MAX_DERIVATIVE {
            return Err(Error::DerivativeOrder {
                requested: order + 1,
                max: MAX_DERIVATIVE,
            });
        }
        Ok(Self {
            base,
            order,
            bump: SmoothWindow::unit(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn extension_eval(&self, z: C64) -> C64 {
        let (x, y) = (z.re, z.im);
        let (theta, _) = self.bump.value_d1(y / bracket(x));
        if theta == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let d = self.base.jet(x).derivatives();
        taylor(&d, self.order, y) * theta
    }

    /// Closed-form `∂φ̃_N/∂z̄`.
    pub fn dbar_eval(&self, z: C64) -> C64 {
        let d = self.base.jet(z.re).derivatives();
        dbar_from(&d, self.order, &self.bump, z.re, z.im)
    }
}

fn taylor(d: &[f64], order: usize, y: f64) -> C64 {
    let iy = C64::new(0.0, y);
    let mut p = C64::new(1.0, 0.0);
    let mut s = C64::new(0.0, 0.0);
    for (n, dn) in d.iter().enumerate().take(order + 1) {
        s += p * (*dn / factorial(n));
        p *= iy;
    }
    s
}

fn dbar_from(d: &[f64], order: usize, bump: &SmoothWindow, x: f64, y: f64) -> C64 {
    let b = bracket(x);
    let (theta, dtheta) = bump.value_d1(y / b);
    if theta == 0.0 && dtheta == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let mut out = C64::new(0.0, 0.0);
    if dtheta != 0.0 {
        out += taylor(d, order, y) * dtheta * C64::new(-y * x / (b * b), 1.0) / b;
    }
    if theta != 0.0 {
        out += C64::new(0.0, y).powu(order as u32) * (d[order + 1] * theta / factorial(order));
    }
    0.5 * out
}

/// Fitted `c_ℓ = max |∂̄φ̃_N| / (⟨x⟩^{ρ-1-ℓ} |y|^ℓ)` for `ℓ = 0..=3`.
pub fn dbar_constants(ext: &AlmostAnalyticExtension<'_>, rho: f64, samples: &[C64]) -> [f64; 4] {
    let mut c = [0.0f64; 4];
    for &z in samples {
        let v = ext.dbar_eval(z).norm();
        let b = bracket(z.re);
        for (l, cl) in c.iter_mut().enumerate() {
            let scale = b.powf(rho - 1.0 - l as f64) * z.im.abs().powi(l as i32);
            if scale > 0.0 {
                *cl = cl.max(v / scale);
            }
        }
    }
    c
}

/// Midpoint mesh in the strip `|y| ≤ ⟨x⟩`, omitting `|y| < y_cut`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HsMesh {
    pub h: f64,
    pub y_cut: f64,
}

impl Default for HsMesh {
    fn default() -> Self {
        Self::with_step(0.02)
    }
}

impl HsMesh {
    pub fn with_step(h: f64) -> Self {
        Self { h, y_cut: h }
    }

    pub fn refined(&self) -> Self {
        Self {
            h: 0.5 * self.h,
            y_cut: 0.5 * self.y_cut,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParameter(format!("mesh step {} must be positive", self.h)));
        }
        if !(self.y_cut > 1e-10) {
            return Err(Error::MeshRejected { min_y: self.y_cut });
        }
        Ok(())
    }
}

/// Prepared nodes `z_j` and weights `w_j = -(1/π) ∂̄φ̃_N(z_j) ΔxΔy`, so that
/// `φ(λ) ≈ Σ_j w_j / (z_j - λ)`.
#[derive(Debug, Clone)]
pub struct HsQuadrature {
    nodes: Vec<C64>,
    weights: Vec<C64>,
    order: usize,
    mesh: HsMesh,
    truncation: Option<f64>,
    min_y: f64,
}

impl HsQuadrature {
    /// Functions without compact support are multiplied by `θ(t/R)` with
    /// `R = 4·max(radius, 1)`, which leaves `φ` unchanged on `[-2·radius, 2·radius]`.
    pub fn new(phi: &dyn SmoothFunction, order: usize, mesh: HsMesh, radius: f64) -> Result<Self> {
        mesh.validate()?;
        AlmostAnalyticExtension::new(phi, order)?;
        let r = 4.0 * radius.abs().max(1.0);
        let truncated = Truncated { inner: phi, radius: r };
        let (f, truncation): (&dyn SmoothFunction, _) = match phi.support() {
            Some(_) => (phi, None),
            None => (&truncated, Some(r)),
        };
        let (a, b) = f.support().expect("truncated functions are compactly supported");
        let nx = ((b - a) / mesh.h).ceil().max(1.0) as usize;
        let hx = (b - a) / nx as f64;
        let bump = SmoothWindow::unit();
        let columns = par::map_indexed(ExecPolicy::default(), nx, |i| {
            let x = a + (i as f64 + 0.5) * hx;
            let bx = bracket(x);
            let ny = (bx / mesh.h).ceil() as usize;
            let hy = bx / ny as f64;
            let d = f.jet(x).derivatives();
            let mut col = Vec::new();
            for j in 0..ny {
                let y = (j as f64 + 0.5) * hy;
                if y < mesh.y_cut {
                    continue;
                }
                for y in [y, -y] {
                    let g = dbar_from(&d, order, &bump, x, y);
                    if g != C64::new(0.0, 0.0) {
                        col.push((C64::new(x, y), g * (-hx * hy / PI)));
                    }
                }
            }
            col
        });
        let (nodes, weights): (Vec<C64>, Vec<C64>) = columns.into_iter().flatten().unzip();
        let min_y = nodes.iter().map(|z| z.im.abs()).fold(f64::INFINITY, f64::min);
        Ok(Self {
            nodes,
            weights,
            order,
            mesh,
            truncation,
            min_y,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mesh(&self) -> HsMesh {
        self.mesh
    }

    pub fn truncation_radius(&self) -> Option<f64> {
        self.truncation
    }

    /// Smallest `|Im z|` among the nodes.
    pub fn min_y(&self) -> f64 {
        self.min_y
    }

    fn check_radius(&self, radius: f64) -> Result<()> {
        match self.truncation {
            Some(r) if radius > 0.5 * r => Err(Error::InvalidParameter(format!(
                "spectral radius {radius} exceeds half the truncation radius {r}"
            ))),
            _ => Ok(()),
        }
    }

    /// `Σ_j w_j k! / (z_j - λ)^{k+1}` for each `λ`; chunked and summed in a
    /// fixed order so the result does not depend on the policy.
    pub fn scalar(&self, lambdas: &[f64], k: usize, policy: ExecPolicy) -> Result<Vec<f64>> {
        if k > self.order {
            return Err(Error::DerivativeOrder {
                requested: k,
                max: self.order,
            });
        }
        let kf = factorial(k);
        let parts = par::map_chunks(policy, self.nodes.len(), 4096, |range| {
            let mut acc = vec![C64::new(0.0, 0.0); lambdas.len()];
            for j in range {
                let (z, w) = (self.nodes[j], self.weights[j]);
                for (a, &l) in acc.iter_mut().zip(lambdas) {
                    let r = (z - l).inv();
                    *a += w * r.powu(k as u32 + 1);
                }
            }
            acc
        });
        let mut out = vec![0.0; lambdas.len()];
        for p in parts {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v.re;
            }
        }
        Ok(out.into_iter().map(|v| v * kf).collect())
    }

    /// `-(1/π)∫ ∂̄φ̃ / ((z - λ_i)(z - λ_j))` for all pairs.
    pub fn pair_kernel(&self, lambdas: &[f64], policy: ExecPolicy) -> DMatrix<C64> {
        let n = lambdas.len();
        let parts = par::map_chunks(policy, self.nodes.len(), 4096, |range| {
            let mut acc = DMatrix::<C64>::zeros(n, n);
            let mut r = vec![C64::new(0.0, 0.0); n];
            for j in range {
                let (z, w) = (self.nodes[j], self.weights[j]);
                for (ri, &l) in r.iter_mut().zip(lambdas) {
                    *ri = (z - l).inv();
                }
                for b in 0..n {
                    let wb = w * r[b];
                    for a in 0..n {
                        acc[(a, b)] += wb * r[a];
                    }
                }
            }
            acc
        });
        parts.into_iter().fold(DMatrix::zeros(n, n), |s, p| s + p)
    }

    /// `φ^{(k)}(A)` through the eigenbasis of `A`.
    pub fn apply_spectral(&self, eig: &HermitianEigen, k: usize, policy: ExecPolicy) -> Result<DMatrix<C64>> {
        self.check_radius(spectral_radius(eig))?;
        let vals = self.scalar(&eig.values, k, policy)?;
        let n = eig.dim();
        let mut scaled = eig.vectors.clone();
        for c in 0..n {
            for r in 0..n {
                scaled[(r, c)] *= vals[c];
            }
        }
        Ok(scaled * eig.vectors.adjoint())
    }

    /// `Σ_j w_j (z_j - A)^{-1}` with one dense LU per node. Reference path
    /// for small matrices.
    pub fn apply_direct(&self, a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        let n = a.nrows();
        let mut out = DMatrix::<C64>::zeros(n, n);
        let id = DMatrix::<C64>::identity(n, n);
        for (&z, &w) in self.nodes.iter().zip(&self.weights) {
            let m = &id * z - a;
            let inv = m.try_inverse().ok_or(Error::MeshRejected { min_y: z.im.abs() })?;
            out += inv * w;
        }
        Ok(out)
    }
}

fn spectral_radius(eig: &HermitianEigen) -> f64 {
    eig.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn dense_hermitian(a: &LinearOperator) -> Result<DMatrix<C64>> {
    if !a.is_hermitian() {
        return Err(Error::Misuse(format!("{} is not hermitian", a.label())));
    }
    if a.dim() > MAX_DENSE_DIM {
        return Err(Error::Capacity {
            what: "dense functional calculus",
            dim: a.dim(),
            limit: MAX_DENSE_DIM,
        });
    }
    Ok(a.matrix().to_dense())
}

/// `φ(A)` by quadrature.
pub fn hs_operator(phi: &dyn SmoothFunction, a: &LinearOperator, order: usize, mesh: HsMesh) -> Result<LinearOperator> {
    hs_derivative(phi, a, 0, order, mesh)
}

/// `φ^{(k)}(A) = k!·(-1/π)∫ ∂̄φ̃_N (z - A)^{-1-k}`.
pub fn hs_derivative(
    phi: &dyn SmoothFunction,
    a: &LinearOperator,
    k: usize,
    order: usize,
    mesh: HsMesh,
) -> Result<LinearOperator> {
    if k > order {
        return Err(Error::DerivativeOrder {
            requested: k,
            max: order,
        });
    }
    let dense = dense_hermitian(a)?;
    let eig = HermitianEigen::new(&dense);
    let q = HsQuadrature::new(phi, order, mesh, spectral_radius(&eig))?;
    let m = q.apply_spectral(&eig, k, ExecPolicy::default())?;
    let label = if k == 0 {
        format!("{}({})", phi.name(), a.label())
    } else {
        format!("{}^({k})({})", phi.name(), a.label())
    };
    Ok(LinearOperator::hermitian(label, SparseMatrix::from_dense(&m)))
}

/// `[T, φ(A)] = -(1/π)∫ ∂̄φ̃_N (z - A)^{-1}[T, A](z - A)^{-1}`.
pub fn hs_commutator(
    t: &LinearOperator,
    a: &LinearOperator,
    phi: &dyn SmoothFunction,
    order: usize,
    mesh: HsMesh,
) -> Result<LinearOperator> {
    t.check_dim(a)?;
    if phi.class_exponent() >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "commutator formula needs class exponent < 1, got {}",
            phi.class_exponent()
        )));
    }
    let dense = dense_hermitian(a)?;
    let eig = HermitianEigen::new(&dense);
    let q = HsQuadrature::new(phi, order, mesh, spectral_radius(&eig))?;
    let m = commutator_in_basis(&q, &eig, &t.matrix().to_dense(), ExecPolicy::default());
    Ok(LinearOperator::general(
        format!("[{}, {}({})]", t.label(), phi.name(), a.label()),
        SparseMatrix::from_dense(&m),
    ))
}

fn commutator_in_basis(q: &HsQuadrature, eig: &HermitianEigen, t: &DMatrix<C64>, policy: ExecPolicy) -> DMatrix<C64> {
    let v = &eig.vectors;
    let mut c = v.adjoint() * t * v;
    let n = eig.dim();
    let kernel = q.pair_kernel(&eig.values, policy);
    for j in 0..n {
        for i in 0..n {
            // [T, A] in the eigenbasis is (λ_j - λ_i) T_ij.
            c[(i, j)] *= kernel[(i, j)] * (eig.values[j] - eig.values[i]);
        }
    }
    v * c * v.adjoint()
}

/// `max ‖⟨A⟩^s (A - z)^{-1}‖ / (⟨x⟩^s |y|^{-1})` over the samples, which
/// must lie in `0 < |y| ≤ ⟨x⟩`.
pub fn check_resolvent_weight_bound(a: &LinearOperator, s: f64, samples: &[C64]) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("weight exponent {s} outside [0, 1]")));
    }
    let eig = HermitianEigen::new(&dense_hermitian(a)?);
    let mut worst = 0.0f64;
    for &z in samples {
        if !(z.im != 0.0 && z.im.abs() <= bracket(z.re)) {
            return Err(Error::InvalidParameter(format!("sample {z} outside 0 < |y| <= <x>")));
        }
        let norm = eig
            .values
            .iter()
            .map(|&l| bracket(l).powf(s) / (C64::new(l, 0.0) - z).norm())
            .fold(0.0, f64::max);
        worst = worst.max(norm * z.im.abs() / bracket(z.re).powf(s));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::{Bracket, IntegratedBracket, Polynomial};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, scale: f64, seed: u64) -> DMatrix<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        (&m + m.adjoint()) * C64::new(scale, 0.0)
    }

    fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    #[test]
    fn scalar_orientation() {
        let phi = Bracket { power: -2.0 };
        let q = HsQuadrature::new(&phi, DEFAULT_ORDER, HsMesh::default(), 0.0).unwrap();
        let v = q.scalar(&[0.0], 0, ExecPolicy::Sequential).unwrap()[0];
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn extension_restricts_to_function_and_has_strip_support() {
        let phi = Bracket { power: -2.0 };
        let ext = AlmostAnalyticExtension::new(&phi, 3).unwrap();
        for &x in &[-3.0, 0.0, 0.7, 5.0] {
            assert_eq!(ext.extension_eval(C64::new(x, 0.0)).re, phi.value(x));
            let b = bracket(x);
            assert_eq!(ext.extension_eval(C64::new(x, 1.01 * b)), C64::new(0.0, 0.0));
            assert_eq!(ext.dbar_eval(C64::new(x, -1.01 * b)), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn dbar_vanishes_for_linear_function_on_plateau() {
        let phi = Polynomial { coeffs: vec![0.3, 1.0] };
        let ext = AlmostAnalyticExtension::new(&phi, 1).unwrap();
        for &(x, y) in &[(0.0, 0.2), (2.0, 1.0), (-4.0, -2.0)] {
            assert_eq!(ext.dbar_eval(C64::new(x, y)).norm(), 0.0);
        }
    }

    #[test]
    fn dbar_constants_are_finite() {
        let phi = Bracket { power: -2.0 };
        let ext = AlmostAnalyticExtension::new(&phi, 3).unwrap();
        let mut samples = Vec::new();
        for i in 0..60 {
            let x = -30.0 + i as f64;
            for j in 1..20 {
                samples.push(C64::new(x, bracket(x) * j as f64 / 20.0));
            }
        }
        let c = dbar_constants(&ext, -2.0, &samples);
        assert!(c.iter().all(|v| v.is_finite() && *v < 1e3), "{c:?}");
    }

    #[test]
    fn matches_eigendecomposition_for_window() {
        let a = random_hermitian(8, 0.5, 7);
        let eig = HermitianEigen::new(&a);
        let phi = SmoothWindow::new(0.0, 1.0, 2.0).unwrap();
        let q = HsQuadrature::new(&phi, 3, HsMesh::default(), 0.0).unwrap();
        let hs = q.apply_spectral(&eig, 0, ExecPolicy::Sequential).unwrap();
        let exact = eig.apply_function(|l| C64::new(phi.value(l), 0.0));
        assert!(max_diff(&hs, &exact) < 1e-6, "{}", max_diff(&hs, &exact));
    }

    #[test]
    fn integrated_weight_matches_arctan() {
        let phi = IntegratedBracket::new(1.0).unwrap();
        let l = [-2.5, -0.4, 0.0, 1.3, 2.9];
        let q = HsQuadrature::new(&phi, 3, HsMesh::default(), 3.0).unwrap();
        let v = q.scalar(&l, 0, ExecPolicy::Sequential).unwrap();
        for (x, y) in l.iter().zip(v) {
            assert!((x.atan() + 0.5 * PI - y).abs() < 1e-6);
        }
    }

    #[test]
    fn derivative_on_diagonal() {
        let phi = Bracket { power: -2.0 };
        let q = HsQuadrature::new(&phi, 3, HsMesh::default(), 1.0).unwrap();
        let l = [-1.0, 0.0, 1.0];
        let d = q.scalar(&l, 1, ExecPolicy::Sequential).unwrap();
        for (x, y) in l.iter().zip(d) {
            assert!((y + 2.0 * x / (1.0 + x * x).powi(2)).abs() < 1e-5, "{x}: {y}");
        }
        assert!(q.scalar(&l, 4, ExecPolicy::Sequential).is_err());
    }

    #[test]
    fn direct_backend_agrees_with_spectral() {
        let a = random_hermitian(4, 0.4, 3);
        let eig = HermitianEigen::new(&a);
        let phi = Bracket { power: -2.0 };
        let q = HsQuadrature::new(&phi, 3, HsMesh::with_step(0.1), 2.0).unwrap();
        let s = q.apply_spectral(&eig, 0, ExecPolicy::Sequential).unwrap();
        let d = q.apply_direct(&a).unwrap();
        assert!(max_diff(&s, &d) < 1e-10);
    }

    #[test]
    fn policies_agree_bitwise() {
        let phi = Bracket { power: -2.0 };
        let q = HsQuadrature::new(&phi, 3, HsMesh::with_step(0.05), 2.0).unwrap();
        let l = [-1.5, 0.2, 1.9];
        assert_eq!(
            q.scalar(&l, 0, ExecPolicy::Sequential).unwrap(),
            q.scalar(&l, 0, ExecPolicy::Parallel).unwrap()
        );
    }

    #[test]
    fn resolvent_weight_bound() {
        let a = LinearOperator::hermitian("a", SparseMatrix::from_dense(&random_hermitian(6, 2.0, 1)));
        let z: Vec<C64> = (0..10).map(|i| C64::new(0.3, 0.1 + 0.09 * i as f64)).collect();
        assert!(check_resolvent_weight_bound(&a, 0.0, &z).unwrap() <= 1.0 + 1e-15);
        assert!(check_resolvent_weight_bound(&a, 1.0, &[C64::new(0.0, 3.0)]).is_err());
    }
}
