//! Mourre estimates and window identities on finite boxes.

mod annihilation;
mod census;

pub use annihilation::{snap_wavenumber, window_annihilation, Annihilation};
pub use census::{census_box, eigenvalue_census, CensusRow, CensusState, DRIFT_TOL, PR_FRACTION};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{self, LatticeBox, ModelSpec};
use crate::linalg::{HermitianEigen, SparseMatrix, SymTridiagonal, MAX_DENSE_DIM};
use crate::operator::LinearOperator;
use crate::smooth::{SmoothFunction, SmoothWindow};
use crate::thresholds::Interval;

type C64 = Complex64;

/// Energy interval with a smooth window supported inside it.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralWindow {
    pub interval: Interval,
    pub theta: SmoothWindow,
    pub rank: Option<usize>,
}

impl SpectralWindow {
    /// `θ` vanishes at the endpoints and equals one on the middle
    /// `1 - margin_fraction` of the interval.
    pub fn new(interval: Interval, margin_fraction: f64) -> Result<Self> {
        if !(interval.lo < interval.hi) {
            return Err(Error::InvalidParameter(format!(
                "window needs lo < hi, got ({}, {})",
                interval.lo, interval.hi
            )));
        }
        if !(margin_fraction > 0.0 && margin_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!("margin fraction {margin_fraction} outside (0, 1]")));
        }
        let half = 0.5 * (interval.hi - interval.lo);
        let m = margin_fraction * half;
        Ok(Self {
            interval,
            theta: SmoothWindow::new(0.5 * (interval.lo + interval.hi), half - m, m)?,
            rank: None,
        })
    }

    pub fn open(lo: f64, hi: f64, margin_fraction: f64) -> Result<Self> {
        Self::new(Interval::open(lo, hi), margin_fraction)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.interval.contains(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectorMode {
    Sharp,
    Smooth,
}

fn dense_eigen(t: &LinearOperator) -> Result<HermitianEigen> {
    if !t.is_hermitian() {
        return Err(Error::Misuse(format!("{} is not hermitian", t.label())));
    }
    if t.dim() > MAX_DENSE_DIM {
        return Err(Error::Capacity {
            what: "dense spectral projector",
            dim: t.dim(),
            limit: MAX_DENSE_DIM,
        });
    }
    Ok(HermitianEigen::new(&t.matrix().to_dense()))
}

/// `E_𝓘(T)` (sharp) or `θ(T)` (smooth) by eigendecomposition; records the
/// number of eigenvalues in the interval as the window rank.
pub fn spectral_projector(t: &LinearOperator, w: &mut SpectralWindow, mode: ProjectorMode) -> Result<LinearOperator> {
    let eig = dense_eigen(t)?;
    let rank = eig.values.iter().filter(|&&l| w.contains(l)).count();
    w.rank = Some(rank);
    let m = match mode {
        ProjectorMode::Sharp => {
            let iv = w.interval;
            eig.apply_function(|l| C64::new(if iv.contains(l) { 1.0 } else { 0.0 }, 0.0))
        }
        ProjectorMode::Smooth => {
            let th = w.theta;
            eig.apply_function(|l| C64::new(th.value(l), 0.0))
        }
    };
    Ok(LinearOperator::hermitian(
        format!("E[{}, {}]({})", w.interval.lo, w.interval.hi, t.label()),
        SparseMatrix::from_dense(&m),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct MourreEstimate {
    pub rank: usize,
    /// Smallest eigenvalue of the projected commutator, `None` on an empty range.
    pub c_est: Option<f64>,
    pub negative_count: usize,
    pub theory: Option<f64>,
    pub below_theory: Option<usize>,
    pub eigenvalues: Vec<f64>,
}

/// Spectrum of `E_𝓘(T) C E_𝓘(T)` on the range of `E_𝓘(T)`.
pub fn mourre_constant(
    t: &LinearOperator,
    comm: &LinearOperator,
    w: &SpectralWindow,
    theory: Option<f64>,
) -> Result<MourreEstimate> {
    t.check_dim(comm)?;
    if !comm.is_hermitian() {
        return Err(Error::Misuse(format!("{} is not hermitian", comm.label())));
    }
    let eig = dense_eigen(t)?;
    let idx: Vec<usize> = (0..eig.dim()).filter(|&i| w.contains(eig.values[i])).collect();
    let r = idx.len();
    if r == 0 {
        return Ok(MourreEstimate {
            rank: 0,
            c_est: None,
            negative_count: 0,
            theory,
            below_theory: theory.map(|_| 0),
            eigenvalues: Vec::new(),
        });
    }
    let v = DMatrix::from_fn(eig.dim(), r, |row, c| eig.vectors[(row, idx[c])]);
    let proj = v.adjoint() * comm.matrix().to_dense() * &v;
    let proj = (&proj + proj.adjoint()) * C64::new(0.5, 0.0);
    let values = HermitianEigen::new(&proj).values;
    let tol = 1e-10 * comm.matrix().max_abs().max(1.0);
    Ok(MourreEstimate {
        rank: r,
        c_est: values.first().copied(),
        negative_count: values.iter().filter(|&&x| x < -tol).count(),
        theory,
        below_theory: theory.map(|c| values.iter().filter(|&&x| x < c - tol).count()),
        eigenvalues: values,
    })
}

/// `ϱ_Δ(E)`: `E(4-E)` for `d = 1`, and for `d ≥ 2` the infimum of
/// `ϱ_{d-1}(x) + ϱ_1(E - x)` over admissible splits.
pub fn varrho_delta(e: f64, d: usize) -> Result<f64> {
    let top = 4.0 * d as f64;
    if d == 0 || !(-1e-12..=top + 1e-12).contains(&e) {
        return Err(Error::InvalidParameter(format!("energy {e} outside [0, {top}]")));
    }
    let e = e.clamp(0.0, top);
    if d == 1 {
        return Ok(e * (4.0 - e));
    }
    // Each summand is concave in the split, so the infimum sits at an
    // endpoint; a grid is kept as a guard for the nested levels.
    let lo = (e - 4.0).max(0.0);
    let hi = e.min(4.0 * (d - 1) as f64);
    let n = 256;
    let mut best = f64::INFINITY;
    for i in 0..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let y = e - x;
        best = best.min(varrho_delta(x, d - 1)? + y * (4.0 - y));
    }
    Ok(best.max(0.0))
}

/// Eigenvalues of a hermitian operator, ascending; tridiagonal matrices use
/// bisection, others a dense solver.
pub fn spectrum(op: &LinearOperator) -> Result<Vec<f64>> {
    if let Some(t) = SymTridiagonal::from_sparse(op.matrix()) {
        return Ok((0..t.dim()).map(|j| t.eigenvalue(j)).collect());
    }
    Ok(dense_eigen(op)?.values)
}

#[derive(Debug, Clone, Serialize)]
pub struct BipartiteReport {
    pub dim: usize,
    /// `max_j |λ_j(Δ+W+V) - (4d - λ_{n-1-j}(Δ-W-V))|`.
    pub distance: f64,
}

/// Compares `σ(Δ+W+V)` with `4d - σ(Δ-W-V)` on a Dirichlet box.
pub fn bipartite_check(lat: &LatticeBox, spec: &ModelSpec) -> Result<BipartiteReport> {
    if lat.wraps() {
        return Err(Error::Misuse("periodic boxes have an odd ring and are not bipartite".into()));
    }
    let lap = lattice::laplacian(lat);
    let h = lattice::hamiltonian(lat, spec)?;
    let rest = h.minus(&lap)?;
    let flipped = lap.minus(&rest)?;
    let a = spectrum(&h)?;
    let b = spectrum(&flipped)?;
    let top = 4.0 * lat.dim() as f64;
    let n = a.len();
    let distance = (0..n).map(|j| (a[j] - (top - b[n - 1 - j])).abs()).fold(0.0, f64::max);
    Ok(BipartiteReport { dim: n, distance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commutators::laplacian_commutator;
    use crate::lattice::Boundary;

    #[test]
    fn full_window_projector_is_identity() {
        let lat = LatticeBox::new(1, 6, Boundary::Periodic).unwrap();
        let lap = lattice::laplacian(&lat);
        let mut w = SpectralWindow::open(-0.5, 4.5, 0.05).unwrap();
        let p = spectral_projector(&lap, &mut w, ProjectorMode::Sharp).unwrap();
        assert_eq!(w.rank, Some(13));
        let id = SparseMatrix::identity(13);
        assert!(p.matrix().sub(&id).max_abs() < 1e-12);
    }

    #[test]
    fn smooth_agrees_with_sharp_on_plateau() {
        let lat = LatticeBox::new(1, 10, Boundary::Dirichlet).unwrap();
        let lap = lattice::laplacian(&lat);
        let mut w = SpectralWindow::open(0.5, 3.5, 0.3).unwrap();
        let s = spectral_projector(&lap, &mut w, ProjectorMode::Smooth).unwrap().matrix().to_dense();
        let eig = HermitianEigen::new(&lap.matrix().to_dense());
        let (a, b) = w.theta.core();
        for (i, &l) in eig.values.iter().enumerate() {
            if l > a && l < b {
                let v = eig.vectors.column(i);
                let r = &s * v - v;
                assert!(r.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn strict_estimate_for_laplacian_1d() {
        let lat = LatticeBox::new(1, 20, Boundary::Periodic).unwrap();
        let lap = lattice::laplacian(&lat);
        let comm = laplacian_commutator(&lat);
        let eps = 0.5;
        let w = SpectralWindow::open(eps, 4.0 - eps, 0.1).unwrap();
        let m = mourre_constant(&lap, &comm, &w, Some(eps * (4.0 - eps))).unwrap();
        let exact = spectrum(&lap)
            .unwrap()
            .into_iter()
            .filter(|&x| x > eps && x < 4.0 - eps)
            .map(|x| x * (4.0 - x))
            .fold(f64::INFINITY, f64::min);
        assert!((m.c_est.unwrap() - exact).abs() < 1e-10);
        assert_eq!(m.negative_count, 0);
        assert_eq!(m.below_theory, Some(0));
    }

    #[test]
    fn varrho_values() {
        assert_eq!(varrho_delta(2.0, 1).unwrap(), 4.0);
        assert!(varrho_delta(4.0, 2).unwrap().abs() < 1e-12);
        for i in 1..80 {
            let e = 0.1 * i as f64;
            let v = varrho_delta(e, 2).unwrap();
            if (e - 4.0).abs() > 1e-9 {
                assert!(v > 0.0);
            }
            assert!((v - varrho_delta(8.0 - e, 2).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn bipartite_free_and_perturbed() {
        let lat = LatticeBox::new(1, 30, Boundary::Dirichlet).unwrap();
        let spec = ModelSpec::isotropic(0.5, std::f64::consts::PI / 3.0);
        assert!(bipartite_check(&lat, &spec).unwrap().distance < 1e-10);
        let lat2 = LatticeBox::new(2, 4, Boundary::Dirichlet).unwrap();
        assert!(bipartite_check(&lat2, &spec).unwrap().distance < 1e-10);
        let per = LatticeBox::new(1, 4, Boundary::Periodic).unwrap();
        assert!(bipartite_check(&per, &spec).is_err());
    }
}
