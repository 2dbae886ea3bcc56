//! Truncated lattice boxes, model parameters and the operator builders.
//!
//! Sites are indexed lexicographically with the last axis fastest. Axes are
//! zero-based throughout the library.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::operator::LinearOperator;

/// Tolerance for the `k ∉ πℤ` check.
pub const PI_Z_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Dirichlet => "dirichlet",
            Boundary::Periodic => "periodic",
        })
    }
}

/// The cube `{n ∈ ℤ^d : |n_i| ≤ L}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    dim: usize,
    half_width: usize,
    boundary: Boundary,
}

impl LatticeBox {
    pub fn new(dim: usize, half_width: usize, boundary: Boundary) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if half_width == 0 {
            return Err(Error::InvalidParameter("half width must be positive".into()));
        }
        let side = 2 * half_width + 1;
        let mut len: usize = 1;
        for _ in 0..dim {
            len = len.checked_mul(side).ok_or(Error::Capacity {
                what: "lattice box",
                dim: usize::MAX,
                limit: usize::MAX,
            })?;
        }
        Ok(Self {
            dim,
            half_width,
            boundary,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Number of sites per axis, `2L + 1`.
    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Number of sites, `(2L + 1)^d`.
    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index stride of `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.side().pow((self.dim - 1 - axis) as u32)
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.dim {
            return Err(Error::AxisOutOfRange {
                axis,
                dim: self.dim,
            });
        }
        Ok(())
    }

    /// Index of `site`, or `None` when it lies outside the box.
    pub fn index(&self, site: &[i64]) -> Option<usize> {
        if site.len() != self.dim {
            return None;
        }
        let l = self.half_width as i64;
        let mut idx = 0usize;
        for &n in site {
            if n < -l || n > l {
                return None;
            }
            idx = idx * self.side() + (n + l) as usize;
        }
        Some(idx)
    }

    /// Coordinates of site `index`.
    pub fn site(&self, index: usize) -> Vec<i64> {
        let mut out = vec![0; self.dim];
        self.site_into(index, &mut out);
        out
    }

    pub fn site_into(&self, mut index: usize, out: &mut [i64]) {
        let side = self.side();
        let l = self.half_width as i64;
        for slot in out.iter_mut().rev() {
            *slot = (index % side) as i64 - l;
            index /= side;
        }
    }

    /// Coordinate `axis` of site `index`.
    pub fn coord(&self, index: usize, axis: usize) -> i64 {
        ((index / self.stride(axis)) % self.side()) as i64 - self.half_width as i64
    }

    /// Neighbour of `index` one step along `axis`; `forward` means `+e_axis`.
    /// Periodic boxes wrap when `wrap` is set; otherwise `None` past the cut.
    pub fn neighbor(&self, index: usize, axis: usize, forward: bool, wrap: bool) -> Option<usize> {
        let c = self.coord(index, axis);
        let l = self.half_width as i64;
        let stride = self.stride(axis);
        let side = self.side();
        if forward {
            if c < l {
                Some(index + stride)
            } else if wrap {
                Some(index + stride - side * stride)
            } else {
                None
            }
        } else if c > -l {
            Some(index - stride)
        } else if wrap {
            Some(index + side * stride - stride)
        } else {
            None
        }
    }

    /// True if every coordinate satisfies `|n_i| ≤ L - collar`.
    pub fn is_interior(&self, index: usize, collar: usize) -> bool {
        let bound = self.half_width as i64 - collar as i64;
        (0..self.dim).all(|a| self.coord(index, a).abs() <= bound)
    }

    pub fn wraps(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn descriptor(&self) -> String {
        format!("d={} L={} boundary={}", self.dim, self.half_width, self.boundary)
    }

    /// `|n|` for every site.
    pub fn radii(&self) -> Vec<f64> {
        let mut buf = vec![0i64; self.dim];
        (0..self.len())
            .map(|i| {
                self.site_into(i, &mut buf);
                buf.iter().map(|&n| (n * n) as f64).sum::<f64>().sqrt()
            })
            .collect()
    }
}

/// `⟨n⟩ = (1 + |n|²)^{1/2}`.
pub fn japanese_bracket(site: &[i64]) -> f64 {
    (1.0 + site.iter().map(|&n| (n * n) as f64).sum::<f64>()).sqrt()
}

/// Oscillating part of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Wigner {
    None,
    /// `W(n) = q sin(k(n_1 + … + n_d)) / |n|`.
    Isotropic { q: f64, k: f64 },
    /// `W′(n) = Π_i q_i sin(k_i n_i) / n_i`.
    Separable { q: Vec<f64>, k: Vec<f64> },
}

/// Long-range part of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    None,
    /// `V(n) = C⟨n⟩^{-ρ}`.
    InversePower { c: f64, rho: f64 },
    /// `V(n) = C⟨n⟩^{-1-ρ}`, the extremal member of the short-range class.
    ShortRange { c: f64, rho: f64 },
    /// Explicit site values; must cover every site of the box it is used on.
    Table { values: BTreeMap<Vec<i64>, f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub wigner: Wigner,
    pub potential: Potential,
}

/// Rejects `k` with `|sin k| ≤ 1e-12`.
pub fn check_wavenumber(k: f64) -> Result<()> {
    if !k.is_finite() || k.sin().abs() <= PI_Z_TOL {
        return Err(Error::WavenumberInPiZ(k));
    }
    Ok(())
}

impl ModelSpec {
    pub fn free() -> Self {
        Self {
            wigner: Wigner::None,
            potential: Potential::None,
        }
    }

    pub fn isotropic(q: f64, k: f64) -> Self {
        Self {
            wigner: Wigner::Isotropic { q, k },
            potential: Potential::None,
        }
    }

    pub fn separable(q: Vec<f64>, k: Vec<f64>) -> Self {
        Self {
            wigner: Wigner::Separable { q, k },
            potential: Potential::None,
        }
    }

    pub fn with_potential(mut self, potential: Potential) -> Self {
        self.potential = potential;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.wigner {
            Wigner::None => {}
            Wigner::Isotropic { q, k } => {
                if *q == 0.0 || !q.is_finite() {
                    return Err(Error::InvalidParameter("q must be finite and nonzero".into()));
                }
                check_wavenumber(*k)?;
            }
            Wigner::Separable { q, k } => {
                if q.len() != k.len() || q.is_empty() {
                    return Err(Error::InvalidParameter(
                        "separable variant needs q and k vectors of equal, positive length".into(),
                    ));
                }
                if q.iter().any(|v| *v == 0.0 || !v.is_finite()) {
                    return Err(Error::InvalidParameter("each q_i must be finite and nonzero".into()));
                }
                for &ki in k {
                    check_wavenumber(ki)?;
                }
            }
        }
        match &self.potential {
            Potential::InversePower { c, rho } | Potential::ShortRange { c, rho } => {
                if !(*c >= 0.0) || !c.is_finite() {
                    return Err(Error::InvalidParameter("C must be finite and >= 0".into()));
                }
                if !(*rho > 0.0) || !rho.is_finite() {
                    return Err(Error::InvalidParameter("rho must be finite and > 0".into()));
                }
            }
            Potential::None | Potential::Table { .. } => {}
        }
        Ok(())
    }

    /// Validation plus compatibility with `lattice`.
    pub fn validate_for(&self, lattice: &LatticeBox) -> Result<()> {
        self.validate()?;
        if let Wigner::Separable { q, .. } = &self.wigner {
            if q.len() != lattice.dim() {
                return Err(Error::DimensionMismatch {
                    expected: lattice.dim(),
                    got: q.len(),
                });
            }
        }
        Ok(())
    }

    /// `V` at an arbitrary site of ℤ^d (tables return `None` off their domain).
    pub fn potential_at(&self, site: &[i64]) -> Option<f64> {
        match &self.potential {
            Potential::None => Some(0.0),
            Potential::InversePower { c, rho } => Some(c * japanese_bracket(site).powf(-rho)),
            Potential::ShortRange { c, rho } => Some(c * japanese_bracket(site).powf(-1.0 - rho)),
            Potential::Table { values } => values.get(site).copied(),
        }
    }

    /// `W` or `W′` at an arbitrary site.
    pub fn wigner_at(&self, site: &[i64]) -> f64 {
        match &self.wigner {
            Wigner::None => 0.0,
            Wigner::Isotropic { q, k } => {
                if site.iter().all(|&n| n == 0) {
                    *q
                } else {
                    let s: i64 = site.iter().sum();
                    let r = site.iter().map(|&n| (n * n) as f64).sum::<f64>().sqrt();
                    q * (k * s as f64).sin() / r
                }
            }
            Wigner::Separable { q, k } => site
                .iter()
                .zip(q.iter().zip(k))
                .map(|(&n, (&qi, &ki))| separable_factor(qi, ki, n))
                .product(),
        }
    }
}

/// `q sin(kn)/n` with the value `q` at `n = 0`.
pub fn separable_factor(q: f64, k: f64, n: i64) -> f64 {
    if n == 0 {
        q
    } else {
        q * (k * n as f64).sin() / n as f64
    }
}

fn diag_operator(label: &str, values: Vec<f64>) -> LinearOperator {
    LinearOperator::hermitian(label, SparseMatrix::from_real_diagonal(&values))
}

fn site_values<F: FnMut(&[i64]) -> f64>(lattice: &LatticeBox, mut f: F) -> Vec<f64> {
    let mut buf = vec![0i64; lattice.dim()];
    (0..lattice.len())
        .map(|i| {
            lattice.site_into(i, &mut buf);
            f(&buf)
        })
        .collect()
}

/// Discrete Laplacian: `2d` on the diagonal, `-1` to each neighbour.
pub fn laplacian(lattice: &LatticeBox) -> LinearOperator {
    let n = lattice.len();
    let wrap = lattice.wraps();
    let mut trip = Vec::with_capacity(n * (2 * lattice.dim() + 1));
    for i in 0..n {
        trip.push((i, i, Complex64::new(2.0 * lattice.dim() as f64, 0.0)));
        for axis in 0..lattice.dim() {
            for fwd in [false, true] {
                if let Some(j) = lattice.neighbor(i, axis, fwd, wrap) {
                    trip.push((i, j, Complex64::new(-1.0, 0.0)));
                }
            }
        }
    }
    LinearOperator::hermitian(
        format!("laplacian ({})", lattice.descriptor()),
        SparseMatrix::from_triplets(n, n, trip),
    )
}

/// One-axis Laplacian `Δ_i = 2 - S_i - S_i^*` on the box.
pub fn laplacian_axis(lattice: &LatticeBox, axis: usize) -> Result<LinearOperator> {
    lattice.check_axis(axis)?;
    let n = lattice.len();
    let wrap = lattice.wraps();
    let mut trip = Vec::with_capacity(3 * n);
    for i in 0..n {
        trip.push((i, i, Complex64::new(2.0, 0.0)));
        for fwd in [false, true] {
            if let Some(j) = lattice.neighbor(i, axis, fwd, wrap) {
                trip.push((i, j, Complex64::new(-1.0, 0.0)));
            }
        }
    }
    Ok(LinearOperator::hermitian(
        format!("laplacian along axis {axis}"),
        SparseMatrix::from_triplets(n, n, trip),
    ))
}

/// Diagonal Wigner–von Neumann term `W` or `W′`.
pub fn wigner(lattice: &LatticeBox, spec: &ModelSpec) -> Result<LinearOperator> {
    spec.validate_for(lattice)?;
    let label = match spec.wigner {
        Wigner::None => return Err(Error::Misuse("model has no Wigner-von Neumann term".into())),
        Wigner::Isotropic { q, k } => format!("W q={q} k={k}"),
        Wigner::Separable { .. } => "W' (separable)".to_string(),
    };
    Ok(diag_operator(&label, site_values(lattice, |s| spec.wigner_at(s))))
}

/// Diagonal long-range potential `V`.
pub fn potential(lattice: &LatticeBox, spec: &ModelSpec) -> Result<LinearOperator> {
    spec.validate_for(lattice)?;
    let mut missing = None;
    let values = site_values(lattice, |s| match spec.potential_at(s) {
        Some(v) => v,
        None => {
            if missing.is_none() {
                missing = Some(s.to_vec());
            }
            0.0
        }
    });
    if let Some(site) = missing {
        return Err(Error::InvalidParameter(format!(
            "potential table has no entry for site {site:?}"
        )));
    }
    Ok(diag_operator("V", values))
}

/// `H = Δ + W + V` (absent terms omitted).
pub fn hamiltonian(lattice: &LatticeBox, spec: &ModelSpec) -> Result<LinearOperator> {
    spec.validate_for(lattice)?;
    let mut h = laplacian(lattice);
    if spec.wigner != Wigner::None {
        h = h.plus(&wigner(lattice, spec)?)?;
    }
    if spec.potential != Potential::None {
        h = h.plus(&potential(lattice, spec)?)?;
    }
    Ok(h.with_label(format!("H = laplacian + W + V ({})", lattice.descriptor())))
}

/// Shift `(S_i u)(n) = u(n - e_i)`, or its adjoint. Periodic boxes wrap.
pub fn shift(lattice: &LatticeBox, axis: usize, adjoint: bool) -> Result<LinearOperator> {
    shift_with(lattice, axis, adjoint, lattice.wraps())
}

/// Shift that never wraps, as used inside the dilation generator.
pub fn truncated_shift(lattice: &LatticeBox, axis: usize, adjoint: bool) -> Result<LinearOperator> {
    shift_with(lattice, axis, adjoint, false)
}

fn shift_with(lattice: &LatticeBox, axis: usize, adjoint: bool, wrap: bool) -> Result<LinearOperator> {
    lattice.check_axis(axis)?;
    let n = lattice.len();
    let one = Complex64::new(1.0, 0.0);
    let trip = (0..n).filter_map(|i| {
        lattice
            .neighbor(i, axis, false, wrap)
            .map(|j| if adjoint { (j, i, one) } else { (i, j, one) })
    });
    let m = SparseMatrix::from_triplets(n, n, trip.collect::<Vec<_>>());
    let name = if adjoint { "S^*" } else { "S" };
    Ok(LinearOperator::general(format!("{name} axis {axis}"), m))
}

/// Position operator `N_i`.
pub fn position(lattice: &LatticeBox, axis: usize) -> Result<LinearOperator> {
    lattice.check_axis(axis)?;
    let v = (0..lattice.len()).map(|i| lattice.coord(i, axis) as f64).collect();
    Ok(diag_operator(&format!("N axis {axis}"), v))
}

/// `U_i = n_i / |n|` with `U_i(0) = 0`; equals `sign(n)` in one dimension.
pub fn sign_weight(lattice: &LatticeBox, axis: usize) -> Result<LinearOperator> {
    lattice.check_axis(axis)?;
    let v = site_values(lattice, |s| {
        let r = s.iter().map(|&n| (n * n) as f64).sum::<f64>().sqrt();
        if r == 0.0 {
            0.0
        } else {
            s[axis] as f64 / r
        }
    });
    Ok(diag_operator(&format!("U axis {axis}"), v))
}

/// `(T_k u)(n) = e^{ik(n_1+…+n_d)} u(n)`.
pub fn modulation(lattice: &LatticeBox, k: f64) -> LinearOperator {
    let n = lattice.len();
    let mut buf = vec![0i64; lattice.dim()];
    let trip: Vec<_> = (0..n)
        .map(|i| {
            lattice.site_into(i, &mut buf);
            let s: i64 = buf.iter().sum();
            (i, i, Complex64::from_polar(1.0, k * s as f64))
        })
        .collect();
    LinearOperator::general(format!("T_k k={k}"), SparseMatrix::from_triplets(n, n, trip))
}

/// `W̃ = q sin(k(n_1+…+n_d))` for the isotropic variant.
pub fn wtilde(lattice: &LatticeBox, spec: &ModelSpec) -> Result<LinearOperator> {
    spec.validate_for(lattice)?;
    match spec.wigner {
        Wigner::Isotropic { q, k } => Ok(diag_operator(
            "W~",
            site_values(lattice, |s| q * (k * s.iter().sum::<i64>() as f64).sin()),
        )),
        _ => Err(Error::Misuse(
            "W~ needs the isotropic variant; use wtilde_axis for the separable one".into(),
        )),
    }
}

/// `W̃′_i = q_i sin(k_i n_i)` for the separable variant.
pub fn wtilde_axis(lattice: &LatticeBox, spec: &ModelSpec, axis: usize) -> Result<LinearOperator> {
    spec.validate_for(lattice)?;
    lattice.check_axis(axis)?;
    match &spec.wigner {
        Wigner::Separable { q, k } => {
            let (qi, ki) = (q[axis], k[axis]);
            Ok(diag_operator(
                &format!("W~' axis {axis}"),
                site_values(lattice, |s| qi * (ki * s[axis] as f64).sin()),
            ))
        }
        _ => Err(Error::Misuse("W~'_i needs the separable variant".into())),
    }
}

/// Single factor `W′_i(n_i) = q_i sin(k_i n_i)/n_i` of the separable variant.
pub fn wigner_factor(lattice: &LatticeBox, spec: &ModelSpec, axis: usize) -> Result<LinearOperator> {
    spec.validate_for(lattice)?;
    lattice.check_axis(axis)?;
    match &spec.wigner {
        Wigner::Separable { q, k } => {
            let (qi, ki) = (q[axis], k[axis]);
            Ok(diag_operator(
                &format!("W' factor axis {axis}"),
                site_values(lattice, |s| separable_factor(qi, ki, s[axis])),
            ))
        }
        _ => Err(Error::Misuse("W'_i needs the separable variant".into())),
    }
}

/// Generator of dilations
/// `A = (i/2) Σ_i [(S_i - S_i^*) N_i + N_i (S_i - S_i^*)]`
/// built with shifts that never wrap.
pub fn dilation_generator(lattice: &LatticeBox) -> LinearOperator {
    let n = lattice.len();
    let mut trip = Vec::with_capacity(2 * n * lattice.dim());
    for i in 0..n {
        for axis in 0..lattice.dim() {
            let c = lattice.coord(i, axis) as f64;
            if let Some(j) = lattice.neighbor(i, axis, false, false) {
                trip.push((i, j, Complex64::new(0.0, c - 0.5)));
            }
            if let Some(j) = lattice.neighbor(i, axis, true, false) {
                trip.push((i, j, Complex64::new(0.0, -(c + 0.5))));
            }
        }
    }
    LinearOperator::hermitian(
        format!(
            "dilation generator ({}; truncated shifts, rows within one site of the cut differ from infinite volume)",
            lattice.descriptor()
        ),
        SparseMatrix::from_triplets(n, n, trip),
    )
}

/// Bipartite sign `(-1)^{n_1+…+n_d}`.
pub fn bipartite_sign(lattice: &LatticeBox) -> LinearOperator {
    let v = site_values(lattice, |s| if s.iter().sum::<i64>().rem_euclid(2) == 0 { 1.0 } else { -1.0 });
    diag_operator("bipartite sign", v)
}

/// Diagonal `⟨n⟩^{-s}`.
pub fn position_weight(lattice: &LatticeBox, s: f64) -> Vec<f64> {
    site_values(lattice, |site| japanese_bracket(site).powf(-s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HermitianEigen;

    fn line(l: usize, b: Boundary) -> LatticeBox {
        LatticeBox::new(1, l, b).unwrap()
    }

    #[test]
    fn index_map_roundtrip() {
        let b = LatticeBox::new(3, 2, Boundary::Dirichlet).unwrap();
        assert_eq!(b.len(), 125);
        for i in 0..b.len() {
            assert_eq!(b.index(&b.site(i)), Some(i));
        }
        assert_eq!(b.index(&[3, 0, 0]), None);
    }

    #[test]
    fn laplacian_on_origin() {
        let b = line(3, Boundary::Dirichlet);
        let d = laplacian(&b);
        let o = b.index(&[0]).unwrap();
        assert_eq!(d.matrix().get(o, o).re, 2.0);
        assert_eq!(d.matrix().get(o + 1, o).re, -1.0);
        assert_eq!(d.matrix().get(o - 1, o).re, -1.0);
    }

    #[test]
    fn periodic_ring_spectrum() {
        let b = line(2, Boundary::Periodic);
        let eig = HermitianEigen::new(&laplacian(&b).matrix().to_dense());
        let mut exact: Vec<f64> = (0..5)
            .map(|j| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * j as f64 / 5.0).cos())
            .collect();
        exact.sort_by(f64::total_cmp);
        for (a, b) in eig.values.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn wigner_convention_at_origin() {
        let b = line(4, Boundary::Dirichlet);
        let w = wigner(&b, &ModelSpec::isotropic(0.7, 1.0)).unwrap();
        let o = b.index(&[0]).unwrap();
        assert_eq!(w.matrix().get(o, o).re, 0.7);
        let spec = ModelSpec::isotropic(1.0, std::f64::consts::PI / 3.0);
        let w = wigner(&b, &spec).unwrap();
        let i3 = b.index(&[3]).unwrap();
        assert!(w.matrix().get(i3, i3).re.abs() < 1e-15);
    }

    #[test]
    fn wigner_rejects_free_model() {
        let b = line(2, Boundary::Dirichlet);
        assert!(matches!(wigner(&b, &ModelSpec::free()), Err(Error::Misuse(_))));
    }

    #[test]
    fn inverse_power_examples() {
        let b = LatticeBox::new(3, 1, Boundary::Dirichlet).unwrap();
        let spec = ModelSpec::free().with_potential(Potential::InversePower { c: 2.0, rho: 2.0 });
        let v = potential(&b, &spec).unwrap();
        let i = b.index(&[1, 1, 1]).unwrap();
        assert!((v.matrix().get(i, i).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn table_potential_must_cover_box() {
        let b = line(1, Boundary::Dirichlet);
        let mut values = BTreeMap::new();
        values.insert(vec![0], 1.0);
        let spec = ModelSpec::free().with_potential(Potential::Table { values });
        assert!(potential(&b, &spec).is_err());
    }

    #[test]
    fn dilation_generator_elements() {
        let b = line(6, Boundary::Dirichlet);
        let a = dilation_generator(&b);
        let o = b.index(&[0]).unwrap();
        assert_eq!(a.matrix().get(o + 1, o), Complex64::new(0.0, 0.5));
        assert_eq!(a.matrix().get(o - 1, o), Complex64::new(0.0, 0.5));
        let n = 3i64;
        let i = b.index(&[n]).unwrap();
        assert_eq!(a.matrix().get(i, i + 1), Complex64::new(0.0, -(n as f64 + 0.5)));
        assert_eq!(a.matrix().get(i + 1, i), Complex64::new(0.0, n as f64 + 0.5));
        assert_eq!(a.matrix().hermitian_defect(), 0.0);
    }

    #[test]
    fn shift_moves_delta_forward() {
        let b = line(3, Boundary::Dirichlet);
        let s = shift(&b, 0, false).unwrap();
        let o = b.index(&[0]).unwrap();
        let mut e = vec![Complex64::new(0.0, 0.0); b.len()];
        e[o] = Complex64::new(1.0, 0.0);
        let out = s.apply(&e);
        assert_eq!(out[o + 1], Complex64::new(1.0, 0.0));
        assert!(shift(&b, 1, false).is_err());
    }

    #[test]
    fn sign_weight_example() {
        let b = LatticeBox::new(2, 4, Boundary::Dirichlet).unwrap();
        let u = sign_weight(&b, 0).unwrap();
        let i = b.index(&[3, 4]).unwrap();
        assert!((u.matrix().get(i, i).re - 0.6).abs() < 1e-15);
        let o = b.index(&[0, 0]).unwrap();
        assert_eq!(u.matrix().get(o, o).re, 0.0);
    }

    #[test]
    fn separable_factor_example() {
        let b = LatticeBox::new(2, 5, Boundary::Dirichlet).unwrap();
        let spec = ModelSpec::separable(vec![1.0, 1.0], vec![0.9, 1.3]);
        let w = wigner(&b, &spec).unwrap();
        for m in [-4i64, -1, 2, 5] {
            let i = b.index(&[0, m]).unwrap();
            let reference = (1.3 * m as f64).sin() / m as f64;
            assert!((w.matrix().get(i, i).re - reference).abs() < 1e-15);
        }
    }
}
