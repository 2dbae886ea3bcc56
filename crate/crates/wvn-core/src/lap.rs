//! Weighted resolvent scans near the real axis and local decay by time
//! propagation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::chebyshev::{gershgorin, ChebyshevSeries, Propagator};
use crate::error::{Error, Result};
use crate::lattice::{self, Boundary, LatticeBox, ModelSpec};
use crate::linalg::{dot, norm2, real_symmetric_eigen, BandedLu, SymTridiagonal, MAX_DENSE_DIM};
use crate::mourre::{eigenvalue_census, SpectralWindow};
use crate::operator::LinearOperator;
use crate::par::{self, ExecPolicy};
use crate::smooth::SmoothFunction;
use crate::thresholds::Interval;

type C64 = Complex64;

/// Exponent fits at or below this value count as bounded.
pub const PASS_EXPONENT: f64 = 0.1;
/// Exponent fits at or above this value count as growth.
pub const FAIL_EXPONENT: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Position,
    Dilation,
}

/// `⟨N⟩^{-s}` (diagonal) or `⟨A⟩^{-s}` (dense, from `A² = KᵀK`, `A = iK`).
#[derive(Debug, Clone)]
pub struct Weight {
    pub kind: WeightKind,
    pub s: f64,
    diag: Vec<f64>,
    dense: Option<DMatrix<f64>>,
}

impl Weight {
    pub fn new(lat: &LatticeBox, kind: WeightKind, s: f64) -> Result<Self> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight exponent {s} must be >= 0")));
        }
        match kind {
            WeightKind::Position => Ok(Self {
                kind,
                s,
                diag: lattice::position_weight(lat, s),
                dense: None,
            }),
            WeightKind::Dilation => {
                let n = lat.len();
                if n > MAX_DENSE_DIM {
                    return Err(Error::Capacity {
                        what: "dilation weight",
                        dim: n,
                        limit: MAX_DENSE_DIM,
                    });
                }
                let a = lattice::dilation_generator(lat);
                let mut k = DMatrix::<f64>::zeros(n, n);
                for (r, c, v) in a.matrix().iter() {
                    k[(r, c)] = v.im;
                }
                let (vals, vecs) = real_symmetric_eigen(k.transpose() * &k);
                let mut scaled = vecs.clone();
                for (c, &l) in vals.iter().enumerate() {
                    let f = (1.0 + l.max(0.0)).powf(-0.5 * s);
                    for r in 0..n {
                        scaled[(r, c)] *= f;
                    }
                }
                Ok(Self {
                    kind,
                    s,
                    diag: Vec::new(),
                    dense: Some(scaled * vecs.transpose()),
                })
            }
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        match &self.dense {
            None => v.iter().zip(&self.diag).map(|(x, w)| x * w).collect(),
            Some(m) => {
                let n = v.len();
                let mut out = vec![C64::new(0.0, 0.0); n];
                for c in 0..n {
                    let x = v[c];
                    if x == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for (r, o) in out.iter_mut().enumerate() {
                        *o += x * m[(r, c)];
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRecord {
    pub e: f64,
    pub y: f64,
    pub s: f64,
    pub weight: WeightKind,
    pub half_width: usize,
    pub norm: f64,
    pub iterations: usize,
}

/// `P^⊥ v` for orthonormal `deflate`.
fn project_out(v: &mut [C64], deflate: &[Vec<C64>]) {
    for u in deflate {
        let c = dot(u, v);
        for (x, ui) in v.iter_mut().zip(u) {
            *x -= c * ui;
        }
    }
}

/// `10 ×` mean level spacing of `H` in the window.
pub fn y_floor(h: &LinearOperator, window: &Interval) -> Result<f64> {
    let count = match SymTridiagonal::from_sparse(h.matrix()) {
        Some(t) => t.count_below(window.hi) - t.count_below(window.lo),
        None => crate::mourre::spectrum(h)?
            .into_iter()
            .filter(|&e| e >= window.lo && e < window.hi)
            .count(),
    };
    if count == 0 {
        return Err(Error::InvalidParameter(format!(
            "no eigenvalues in [{}, {}); y floor undefined",
            window.lo, window.hi
        )));
    }
    Ok(10.0 * (window.hi - window.lo) / count as f64)
}

/// Largest singular value of `w (H - E - iy)^{-1} P^⊥ w` by a Lanczos
/// iteration on `M^†M` with full reorthogonalization.
#[allow(clippy::too_many_arguments)]
pub fn weighted_resolvent_norm(
    h: &LinearOperator,
    weight: &Weight,
    half_width: usize,
    e: f64,
    y: f64,
    deflate: &[Vec<C64>],
    floor: f64,
) -> Result<ScanRecord> {
    if !(y >= floor) {
        return Err(Error::BelowFloor { y, floor });
    }
    if weight.s <= 0.5 {
        return Err(Error::InvalidParameter(format!("weight exponent {} must exceed 1/2", weight.s)));
    }
    let z = C64::new(e, y);
    let lu = BandedLu::factor(h.matrix(), z)?;
    let lu_adj = BandedLu::factor(h.matrix(), z.conj())?;
    let n = h.dim();
    let apply = |v: &[C64]| -> Vec<C64> {
        let mut x = weight.apply(v);
        project_out(&mut x, deflate);
        lu.solve_in_place(&mut x);
        let mut x = weight.apply(&x);
        let mut x2 = weight.apply(&std::mem::take(&mut x));
        lu_adj.solve_in_place(&mut x2);
        project_out(&mut x2, deflate);
        weight.apply(&x2)
    };
    let (lambda, iterations) = lanczos_top(n, apply, 1e-10, 120);
    let norm = lambda.max(0.0).sqrt();
    if norm > (1.0 + 1e-9) / y {
        return Err(Error::Solver {
            shift_re: e,
            shift_im: y,
            reason: format!("weighted norm {norm} exceeds 1/y"),
        });
    }
    Ok(ScanRecord {
        e,
        y,
        s: weight.s,
        weight: weight.kind,
        half_width,
        norm,
        iterations,
    })
}

fn lanczos_top(n: usize, apply: impl Fn(&[C64]) -> Vec<C64>, tol: f64, max_iter: usize) -> (f64, usize) {
    let mut q: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0 + 0.37 * ((i * 2654435761) % 1000) as f64 / 1000.0, 0.0))
        .collect();
    let nq = norm2(&q);
    q.iter_mut().for_each(|x| *x /= nq);
    let mut basis: Vec<Vec<C64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    let steps = max_iter.min(n);
    for it in 0..steps {
        let mut w = apply(&basis[it]);
        let a = dot(&basis[it], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (x, bi) in w.iter_mut().zip(b) {
                    *x -= c * bi;
                }
            }
        }
        let t = SymTridiagonal::new(alpha.clone(), beta.clone());
        let top = t.eigenvalue(alpha.len() - 1);
        let bnorm = norm2(&w);
        if (top - last).abs() <= tol * top.abs().max(1e-300) || bnorm < 1e-14 * top.abs().max(1.0) {
            return (top, it + 1);
        }
        last = top;
        if it + 1 == steps {
            return (top, it + 1);
        }
        beta.push(bnorm);
        w.iter_mut().for_each(|x| *x /= bnorm);
        basis.push(w);
    }
    (last, steps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_exponent(x: f64) -> Self {
        if x <= PASS_EXPONENT {
            Verdict::Pass
        } else if x >= FAIL_EXPONENT {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentFit {
    pub e: f64,
    pub half_widths: Vec<usize>,
    pub sups: Vec<f64>,
    /// Least-squares slope of `log sup` against `log(2L+1)`.
    pub exponent: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct LapScan {
    pub records: Vec<ScanRecord>,
    pub fits: Vec<ExponentFit>,
    pub deflated: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LapConfig {
    pub e_grid: Vec<f64>,
    pub y_count: usize,
    pub s: f64,
    pub weight: WeightKind,
    pub half_widths: Vec<usize>,
    pub boundary: Boundary,
    /// Deflate census-flagged localized states.
    pub deflate: bool,
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

/// Census-flagged localized eigenvectors of the box of half-width `l`
/// with energies in `window`, compared against the box of half-width `l/2`.
pub fn flagged_states(
    spec: &ModelSpec,
    d: usize,
    l: usize,
    boundary: Boundary,
    window: &Interval,
) -> Result<Vec<Vec<C64>>> {
    let rows = eigenvalue_census(spec, d, &[(l / 2).max(1), l], boundary, window, ExecPolicy::Sequential)?;
    Ok(rows[1]
        .states
        .iter()
        .filter(|s| s.flagged)
        .map(|s| s.vector.iter().map(|&x| C64::new(x, 0.0)).collect())
        .collect())
}

/// For each box: the y grid runs geometrically from the floor to 1; the
/// supremum over y per energy is fitted against box size.
pub fn lap_scan(spec: &ModelSpec, d: usize, cfg: &LapConfig, policy: ExecPolicy) -> Result<LapScan> {
    if cfg.half_widths.len() < 2 || cfg.half_widths.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidParameter("need at least two increasing boxes".into()));
    }
    if cfg.y_count < 2 {
        return Err(Error::InvalidParameter("need at least two y values".into()));
    }
    let top = 4.0 * d as f64;
    if cfg.e_grid.iter().any(|e| !(0.0..=top).contains(e)) {
        return Err(Error::InvalidParameter(format!("energies must lie in [0, {top}]")));
    }
    let band = Interval {
        lo: 0.0,
        hi: top,
        lo_closed: true,
        hi_closed: false,
    };
    let mut records = Vec::new();
    let mut deflated = Vec::new();
    for &l in &cfg.half_widths {
        let lat = LatticeBox::new(d, l, cfg.boundary)?;
        let h = lattice::hamiltonian(&lat, spec)?;
        let weight = Weight::new(&lat, cfg.weight, cfg.s)?;
        let defl = if cfg.deflate {
            let (glo, ghi) = gershgorin(h.matrix());
            flagged_states(spec, d, l, cfg.boundary, &Interval::open(glo - 1.0, ghi + 1.0))?
        } else {
            Vec::new()
        };
        deflated.push(defl.len());
        let floor = y_floor(&h, &band)?;
        if floor >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "box L = {l} is too small: y floor {floor} is not below 1"
            )));
        }
        let ys: Vec<f64> = (0..cfg.y_count)
            .map(|i| floor * (1.0 / floor).powf(i as f64 / (cfg.y_count - 1) as f64))
            .collect();
        let tasks: Vec<(f64, f64)> = cfg.e_grid.iter().flat_map(|&e| ys.iter().map(move |&y| (e, y))).collect();
        let out = par::map_slice(policy, &tasks, |&(e, y)| weighted_resolvent_norm(&h, &weight, l, e, y, &defl, floor));
        for r in out {
            records.push(r?);
        }
    }
    let xs: Vec<f64> = cfg.half_widths.iter().map(|&l| ((2 * l + 1) as f64).ln()).collect();
    let fits = cfg
        .e_grid
        .iter()
        .map(|&e| {
            let sups: Vec<f64> = cfg
                .half_widths
                .iter()
                .map(|&l| {
                    records
                        .iter()
                        .filter(|r| r.e == e && r.half_width == l)
                        .map(|r| r.norm)
                        .fold(0.0, f64::max)
                })
                .collect();
            let ln: Vec<f64> = sups.iter().map(|s| s.ln()).collect();
            let exponent = slope(&xs, &ln);
            ExponentFit {
                e,
                half_widths: cfg.half_widths.clone(),
                sups,
                exponent,
                verdict: Verdict::from_exponent(exponent),
            }
        })
        .collect();
    Ok(LapScan {
        records,
        fits,
        deflated,
    })
}

/// Per box, the largest ratio of dilation-weighted to position-weighted
/// norm over matching `(E, y)` records.
pub fn weight_consistency(dilation: &LapScan, position: &LapScan) -> Result<Vec<(usize, f64)>> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for a in &dilation.records {
        let b = position
            .records
            .iter()
            .find(|b| b.half_width == a.half_width && b.e == a.e && b.y == a.y)
            .ok_or_else(|| Error::Misuse("scans use different grids".into()))?;
        let r = a.norm / b.norm;
        match out.iter_mut().find(|(l, _)| *l == a.half_width) {
            Some(entry) => entry.1 = entry.1.max(r),
            None => out.push((a.half_width, r)),
        }
    }
    Ok(out)
}

/// `‖(θ(H) - θ(Δ))⟨N⟩^ε 1_{|n| ≥ r}‖` for each radius, by dense
/// diagonalization.
pub fn compact_difference(
    lat: &LatticeBox,
    spec: &ModelSpec,
    theta: &dyn SmoothFunction,
    eps: f64,
    radii: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let n = lat.len();
    if n > MAX_DENSE_DIM {
        return Err(Error::Capacity {
            what: "compact difference",
            dim: n,
            limit: MAX_DENSE_DIM,
        });
    }
    let f = |op: &LinearOperator| -> Result<DMatrix<f64>> {
        let (vals, vecs) = real_symmetric_eigen(op.matrix().to_dense_real()?);
        let mut scaled = vecs.clone();
        for (c, &l) in vals.iter().enumerate() {
            let t = theta.value(l);
            for r in 0..n {
                scaled[(r, c)] *= t;
            }
        }
        Ok(scaled * vecs.transpose())
    };
    let diff = f(&lattice::hamiltonian(lat, spec)?)? - f(&lattice::laplacian(lat))?;
    let grow = lattice::position_weight(lat, -eps);
    let radius = lat.radii();
    Ok(radii
        .iter()
        .map(|&r0| {
            let m = DMatrix::from_fn(n, n, |i, j| {
                if radius[j] >= r0 {
                    C64::new(diff[(i, j)] * grow[j], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            (r0, crate::linalg::spectral_norm(&m))
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayPoint {
    pub t: f64,
    pub integrand: f64,
    pub integral: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayRecord {
    pub t_max: f64,
    pub s: f64,
    pub half_width: usize,
    pub integral: f64,
    pub integral_half: f64,
    pub saturation_ratio: f64,
    /// `integral / t_max`; equals one for `s = 0` and a normalized packet.
    pub mean_rate: f64,
    pub unitarity_drift: f64,
    /// Sum of per-step Chebyshev tail bounds.
    pub error_bound: f64,
    pub window_fit_degree: usize,
    pub window_fit_error: f64,
    pub packet_norm_before_normalization: f64,
    pub series: Vec<DecayPoint>,
}

/// `∫_0^T ‖⟨N⟩^{-s} e^{-itH} P^⊥ θ(H) u‖² dt` by Chebyshev propagation and
/// the trapezoid rule on the report grid. The packet is normalized after
/// windowing.
#[allow(clippy::too_many_arguments)]
pub fn local_decay(
    h: &LinearOperator,
    lat: &LatticeBox,
    w: &SpectralWindow,
    u: &[C64],
    s: f64,
    t_max: f64,
    dt_report: f64,
    deflate: &[Vec<C64>],
) -> Result<DecayRecord> {
    let top = 4.0 * lat.dim() as f64;
    let (a, b) = w.theta.outer();
    if a < 0.0 || b > top {
        return Err(Error::InvalidParameter(format!("window [{a}, {b}] leaves [0, {top}]")));
    }
    if u.len() != h.dim() || lat.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: u.len(),
        });
    }
    if !(t_max > 0.0 && dt_report > 0.0 && dt_report <= t_max) {
        return Err(Error::InvalidParameter("need 0 < dt_report <= t_max".into()));
    }
    let (glo, ghi) = gershgorin(h.matrix());
    let theta = w.theta;
    let fit = ChebyshevSeries::fit(|x| theta.value(x), glo, ghi, 1e-8, 1 << 16)?;
    let mut psi = fit.apply(h.matrix(), u)?;
    project_out(&mut psi, deflate);
    let n0 = norm2(&psi);
    if n0 == 0.0 {
        return Err(Error::InvalidParameter("windowed packet vanishes".into()));
    }
    psi.iter_mut().for_each(|x| *x /= n0);
    let weight2 = lattice::position_weight(lat, 2.0 * s);
    let integrand = |v: &[C64]| v.iter().zip(&weight2).map(|(x, w)| x.norm_sqr() * w).sum::<f64>();
    let steps = (t_max / dt_report).round() as usize;
    let dt = t_max / steps as f64;
    let prop = Propagator::new(h.matrix(), dt, 1e-12)?;
    let mut series = Vec::with_capacity(steps + 1);
    let mut f_prev = integrand(&psi);
    let mut acc = 0.0;
    series.push(DecayPoint {
        t: 0.0,
        integrand: f_prev,
        integral: 0.0,
    });
    let mut drift = 0.0f64;
    for i in 1..=steps {
        psi = prop.step(&psi);
        drift = drift.max((norm2(&psi) - 1.0).abs());
        let f = integrand(&psi);
        acc += 0.5 * dt * (f + f_prev);
        f_prev = f;
        series.push(DecayPoint {
            t: i as f64 * dt,
            integrand: f,
            integral: acc,
        });
    }
    let half = series[steps / 2].integral;
    Ok(DecayRecord {
        t_max,
        s,
        half_width: lat.half_width(),
        integral: acc,
        integral_half: half,
        saturation_ratio: acc / half,
        mean_rate: acc / t_max,
        unitarity_drift: drift,
        error_bound: steps as f64 * prop.info().tail_bound,
        window_fit_degree: fit.degree(),
        window_fit_error: fit.sup_error,
        packet_norm_before_normalization: n0,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HermitianEigen;

    fn dense_norm(h: &LinearOperator, w: &Weight, e: f64, y: f64) -> f64 {
        let n = h.dim();
        let m = h.matrix().to_dense() - DMatrix::<C64>::identity(n, n) * C64::new(e, y);
        let r = m.try_inverse().unwrap();
        let wd = DMatrix::from_fn(n, n, |i, j| {
            let mut col = vec![C64::new(0.0, 0.0); n];
            col[j] = C64::new(1.0, 0.0);
            w.apply(&col)[i]
        });
        crate::linalg::spectral_norm(&(&wd * r * &wd))
    }

    #[test]
    fn lanczos_matches_dense_norm() {
        let lat = LatticeBox::new(1, 20, Boundary::Dirichlet).unwrap();
        let spec = ModelSpec::isotropic(0.5, std::f64::consts::PI / 3.0);
        let h = lattice::hamiltonian(&lat, &spec).unwrap();
        for kind in [WeightKind::Position, WeightKind::Dilation] {
            let w = Weight::new(&lat, kind, 0.8).unwrap();
            let r = weighted_resolvent_norm(&h, &w, 20, 1.7, 0.05, &[], 0.01).unwrap();
            let exact = dense_norm(&h, &w, 1.7, 0.05);
            assert!((r.norm - exact).abs() < 1e-8 * exact, "{kind:?}: {} vs {exact}", r.norm);
            assert!(r.norm <= 1.0 / 0.05);
        }
    }

    #[test]
    fn dilation_weight_is_bracket_of_a() {
        let lat = LatticeBox::new(1, 6, Boundary::Dirichlet).unwrap();
        let w = Weight::new(&lat, WeightKind::Dilation, 1.0).unwrap();
        let a = lattice::dilation_generator(&lat).matrix().to_dense();
        let eig = HermitianEigen::new(&a);
        let m = eig.apply_function(|l| C64::new((1.0 + l * l).powf(-0.5), 0.0));
        let n = lat.len();
        for j in 0..n {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            let col = w.apply(&e);
            for i in 0..n {
                assert!((col[i] - m[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn conjugate_shift_has_equal_norm() {
        let lat = LatticeBox::new(1, 12, Boundary::Dirichlet).unwrap();
        let h = lattice::hamiltonian(&lat, &ModelSpec::isotropic(0.8, 1.0)).unwrap();
        let w = Weight::new(&lat, WeightKind::Position, 0.7).unwrap();
        let up = dense_norm(&h, &w, 1.2, 0.1);
        let down = dense_norm(&h, &w, 1.2, -0.1);
        let r = weighted_resolvent_norm(&h, &w, 12, 1.2, 0.1, &[], 0.01).unwrap();
        assert!((up - down).abs() < 1e-10 * up);
        assert!((r.norm - down).abs() < 1e-8 * up);
    }

    #[test]
    fn compact_difference_decays_with_radius() {
        let lat = LatticeBox::new(1, 150, Boundary::Dirichlet).unwrap();
        let spec = ModelSpec::isotropic(0.5, std::f64::consts::PI / 3.0)
            .with_potential(crate::lattice::Potential::InversePower { c: 0.3, rho: 1.0 });
        let theta = crate::smooth::SmoothWindow::from_core(1.0, 3.0, 0.3).unwrap();
        let out = compact_difference(&lat, &spec, &theta, 0.5, &[10.0, 40.0, 120.0]).unwrap();
        assert!(out.windows(2).all(|p| p[1].1 < p[0].1), "{out:?}");
    }

    #[test]
    fn floor_and_rejection() {
        let lat = LatticeBox::new(1, 256, Boundary::Dirichlet).unwrap();
        let h = lattice::laplacian(&lat);
        let band = Interval::open(0.0, 4.0);
        let f = y_floor(&h, &band).unwrap();
        assert!((f - 40.0 / 513.0).abs() < 1e-12);
        let w = Weight::new(&lat, WeightKind::Position, 0.6).unwrap();
        assert!(matches!(
            weighted_resolvent_norm(&h, &w, 256, 2.0, 0.5 * f, &[], f),
            Err(Error::BelowFloor { .. })
        ));
    }

    #[test]
    fn unweighted_decay_is_linear() {
        let lat = LatticeBox::new(1, 60, Boundary::Dirichlet).unwrap();
        let h = lattice::laplacian(&lat);
        let w = SpectralWindow::open(0.5, 3.5, 0.3).unwrap();
        let mut u = vec![C64::new(0.0, 0.0); lat.len()];
        u[60] = C64::new(1.0, 0.0);
        let r = local_decay(&h, &lat, &w, &u, 0.0, 10.0, 0.5, &[]).unwrap();
        assert!((r.mean_rate - 1.0).abs() < 1e-9);
        assert!(r.unitarity_drift < 1e-10);
        assert!(r.series.windows(2).all(|p| p[1].integral >= p[0].integral));
    }
}
