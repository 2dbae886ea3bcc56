//! `θ(Δ) W̃ θ(Δ)` and `E_𝓘(Δ) B_{W′} E_𝓘(Δ)` on periodic boxes, evaluated
//! in the Fourier basis where the modulation `e^{ik·n}` is a translation of
//! modes.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{ProjectorMode, SpectralWindow};
use crate::error::{Error, Result};
use crate::lattice::{separable_factor, Boundary, LatticeBox, ModelSpec, Wigner};
use crate::linalg::{spectral_norm, SymTridiagonal};
use crate::smooth::SmoothFunction;

type C64 = Complex64;

#[derive(Debug, Clone, Serialize)]
pub struct Annihilation {
    /// Operator norm (isotropic) or a Frobenius upper bound (separable).
    pub norm: f64,
    pub exact_operator_norm: bool,
    pub requested_k: Vec<f64>,
    pub snapped_k: Vec<f64>,
    pub snap_distance: f64,
}

/// Nearest `2πm/M` to `k` and its index `m`.
pub fn snap_wavenumber(k: f64, circumference: usize) -> (f64, usize) {
    let m = circumference as f64;
    let idx = (k.rem_euclid(2.0 * PI) * m / (2.0 * PI)).round() as usize % circumference;
    (2.0 * PI * idx as f64 / m, idx)
}

fn mode_energy(m: usize, circ: usize) -> f64 {
    2.0 - 2.0 * (2.0 * PI * m as f64 / circ as f64).cos()
}

/// Norm of the window-compressed oscillating factor. With `snap = false` an
/// incommensurate `k` is an error carrying the nearest commensurate value.
pub fn window_annihilation(
    lat: &LatticeBox,
    spec: &ModelSpec,
    w: &SpectralWindow,
    mode: ProjectorMode,
    snap: bool,
) -> Result<Annihilation> {
    if lat.boundary() != Boundary::Periodic {
        return Err(Error::Misuse("window annihilation needs a periodic box".into()));
    }
    spec.validate_for(lat)?;
    let circ = lat.side();
    let (q, k): (Vec<f64>, Vec<f64>) = match &spec.wigner {
        Wigner::Isotropic { q, k } => (vec![*q], vec![*k]),
        Wigner::Separable { q, k } => (q.clone(), k.clone()),
        Wigner::None => return Err(Error::Misuse("free model has no oscillating part".into())),
    };
    let mut snapped = Vec::new();
    let mut idx = Vec::new();
    let mut dist = 0.0f64;
    for &ki in &k {
        let (s, m) = snap_wavenumber(ki, circ);
        let d = (s - ki.rem_euclid(2.0 * PI)).abs();
        if d > 1e-12 && !snap {
            return Err(Error::Incommensurate {
                k: ki,
                circumference: circ,
                suggestion: s,
            });
        }
        if m == 0 {
            return Err(Error::WavenumberInPiZ(s));
        }
        dist = dist.max(d);
        snapped.push(s);
        idx.push(m);
    }
    let theta = |x: f64| match mode {
        ProjectorMode::Sharp => {
            if w.contains(x) {
                1.0
            } else {
                0.0
            }
        }
        ProjectorMode::Smooth => w.theta.value(x),
    };
    let (norm, exact) = match spec.wigner {
        Wigner::Isotropic { .. } => (isotropic_norm(lat.dim(), circ, q[0], idx[0], &theta), true),
        _ => {
            if lat.dim() != 2 {
                return Err(Error::InvalidParameter("separable annihilation is implemented for d = 2".into()));
            }
            (separable_bound(circ, &q, &snapped, &idx, &theta), false)
        }
    };
    Ok(Annihilation {
        norm,
        exact_operator_norm: exact,
        requested_k: k,
        snapped_k: snapped,
        snap_distance: dist,
    })
}

/// `W̃ = (q/2i)(T_k - T_k^*)` moves mode `m` to `m ± m_k(1,…,1)`; the
/// compressed operator splits into cycles of this translation.
fn isotropic_norm(d: usize, circ: usize, q: f64, mk: usize, theta: &dyn Fn(f64) -> f64) -> f64 {
    let total = circ.pow(d as u32);
    let weight = |flat: usize| {
        let mut r = flat;
        let mut e = 0.0;
        for _ in 0..d {
            e += mode_energy(r % circ, circ);
            r /= circ;
        }
        theta(e)
    };
    let step = |flat: usize| {
        let mut r = flat;
        let mut out = 0;
        let mut stride = 1;
        for _ in 0..d {
            out += ((r % circ + mk) % circ) * stride;
            r /= circ;
            stride *= circ;
        }
        out
    };
    let mut seen = vec![false; total];
    let mut best = 0.0f64;
    for start in 0..total {
        if seen[start] {
            continue;
        }
        let mut cycle = vec![start];
        seen[start] = true;
        let mut cur = step(start);
        while cur != start {
            seen[cur] = true;
            cycle.push(cur);
            cur = step(cur);
        }
        let th: Vec<f64> = cycle.iter().map(|&i| weight(i)).collect();
        let c = cycle.len();
        // Edge j joins cycle[j] and cycle[j+1].
        let edges: Vec<f64> = (0..c).map(|j| 0.5 * q.abs() * th[j] * th[(j + 1) % c]).collect();
        if edges.iter().all(|&e| e == 0.0) {
            continue;
        }
        best = best.max(match edges.iter().position(|&e| e == 0.0) {
            Some(cut) => chains_norm(&edges, cut),
            None => cycle_norm(&edges, q),
        });
    }
    best
}

/// The cycle cut open at a zero edge is a union of paths; each is a
/// zero-diagonal Jacobi matrix whose norm is its top eigenvalue.
fn chains_norm(edges: &[f64], cut: usize) -> f64 {
    let c = edges.len();
    let mut best = 0.0f64;
    let mut run = Vec::new();
    for j in 1..=c {
        let e = edges[(cut + j) % c];
        if e == 0.0 {
            if !run.is_empty() {
                let n = run.len() + 1;
                let t = SymTridiagonal::new(vec![0.0; n], std::mem::take(&mut run));
                best = best.max(t.eigenvalue(n - 1));
            }
        } else {
            run.push(e);
        }
    }
    best
}

fn cycle_norm(edges: &[f64], q: f64) -> f64 {
    let c = edges.len();
    let s = q.signum();
    let mut m = DMatrix::<C64>::zeros(c, c);
    for (j, &e) in edges.iter().enumerate() {
        let next = (j + 1) % c;
        // (q/2i) T_k: entry (next, j) = -i q/2, and the adjoint entry.
        m[(next, j)] += C64::new(0.0, -s * e);
        m[(j, next)] += C64::new(0.0, s * e);
    }
    spectral_norm(&m)
}

/// `‖E B_{W′_1}⊗W′_2 E‖_F + ‖E W′_1⊗B_{W′_2} E‖_F` with periodic shifts,
/// an upper bound for the operator norm.
fn separable_bound(circ: usize, q: &[f64], k: &[f64], idx: &[usize], theta: &dyn Fn(f64) -> f64) -> f64 {
    let l = (circ / 2) as i64;
    let energy: Vec<f64> = (0..circ).map(|m| mode_energy(m, circ)).collect();
    let dsym: Vec<C64> = (0..circ)
        .map(|m| C64::new(0.0, 2.0 * (2.0 * PI * m as f64 / circ as f64).sin()))
        .collect();
    let dft = |axis: usize| -> Vec<f64> {
        (0..circ)
            .map(|delta| {
                let mut acc = C64::new(0.0, 0.0);
                for n in -l..=l {
                    let ph = -2.0 * PI * (delta as f64) * (n as f64) / circ as f64;
                    acc += C64::from_polar(separable_factor(q[axis], k[axis], n), ph);
                }
                (acc / circ as f64).norm_sqr()
            })
            .collect()
    };
    let mut total = 0.0;
    for axis in 0..2 {
        let other = 1 - axis;
        let w2 = dft(other);
        let mut sum = 0.0;
        for a in 0..circ {
            for (sign, ap) in [(1.0, (a + idx[axis]) % circ), (-1.0, (a + circ - idx[axis]) % circ)] {
                let wt = C64::new(0.0, -0.5 * sign * q[axis]);
                let b = (wt * dsym[a] - dsym[ap] * wt).norm_sqr();
                if b == 0.0 {
                    continue;
                }
                for bb in 0..circ {
                    let ein = theta(energy[a] + energy[bb]);
                    if ein == 0.0 {
                        continue;
                    }
                    for bp in 0..circ {
                        let eout = theta(energy[ap] + energy[bp]);
                        if eout != 0.0 {
                            sum += b * (ein * eout).powi(2) * w2[(bp + circ - bb) % circ];
                        }
                    }
                }
            }
        }
        total += sum.sqrt();
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice;
    use crate::linalg::HermitianEigen;
    use crate::thresholds::{critical_points_1d, threshold_eprime, Interval};

    fn dense_reference(lat: &LatticeBox, spec: &ModelSpec, w: &SpectralWindow) -> f64 {
        let lap = lattice::laplacian(lat);
        let eig = HermitianEigen::new(&lap.matrix().to_dense());
        let th = eig.apply_function(|x| C64::new(w.theta.value(x), 0.0));
        let wt = lattice::wtilde(lat, spec).unwrap().matrix().to_dense();
        spectral_norm(&(&th * wt * &th))
    }

    #[test]
    fn matches_dense_reference() {
        let lat = LatticeBox::new(1, 15, Boundary::Periodic).unwrap();
        let (k, _) = snap_wavenumber(PI / 3.0, 31);
        let spec = ModelSpec::isotropic(0.7, k);
        let (em, _) = critical_points_1d(k).unwrap();
        for (lo, hi) in [(em - 0.4, em + 0.4), (1.5, 2.5), (0.1, 3.9)] {
            let w = SpectralWindow::open(lo, hi, 0.5).unwrap();
            let f = window_annihilation(&lat, &spec, &w, ProjectorMode::Smooth, false).unwrap();
            let r = dense_reference(&lat, &spec, &w);
            assert!((f.norm - r).abs() < 1e-10, "{lo}: {} vs {r}", f.norm);
        }
    }

    #[test]
    fn vanishes_between_critical_points() {
        let lat = LatticeBox::new(1, 150, Boundary::Periodic).unwrap();
        let (k, _) = snap_wavenumber(PI / 3.0, 301);
        let spec = ModelSpec::isotropic(1.0, k);
        let w = SpectralWindow::open(1.5, 2.5, 0.3).unwrap();
        let a = window_annihilation(&lat, &spec, &w, ProjectorMode::Smooth, false).unwrap();
        assert_eq!(a.norm, 0.0);
    }

    #[test]
    fn incommensurate_is_rejected_with_suggestion() {
        let lat = LatticeBox::new(1, 10, Boundary::Periodic).unwrap();
        let spec = ModelSpec::isotropic(1.0, 1.0);
        let w = SpectralWindow::open(1.5, 2.5, 0.3).unwrap();
        match window_annihilation(&lat, &spec, &w, ProjectorMode::Smooth, false) {
            Err(Error::Incommensurate { suggestion, .. }) => {
                assert!((suggestion - 2.0 * PI * 3.0 / 21.0).abs() < 1e-15)
            }
            other => panic!("{other:?}"),
        }
        let a = window_annihilation(&lat, &spec, &w, ProjectorMode::Smooth, true).unwrap();
        assert!(a.snap_distance > 0.0);
    }

    #[test]
    fn separable_window_below_eprime() {
        let lat = LatticeBox::new(2, 20, Boundary::Periodic).unwrap();
        let (k, _) = snap_wavenumber(PI / 2.0, 41);
        let spec = ModelSpec::separable(vec![1.0, 0.8], vec![k, k]);
        let ep = threshold_eprime(&[k, k]).unwrap();
        let iv = Interval {
            lo: 0.0,
            hi: 0.9 * ep,
            lo_closed: true,
            hi_closed: false,
        };
        let w = SpectralWindow::new(iv, 0.2).unwrap();
        let a = window_annihilation(&lat, &spec, &w, ProjectorMode::Sharp, false).unwrap();
        assert_eq!(a.norm, 0.0);
        let wide = SpectralWindow::new(Interval { hi: 3.0, ..iv }, 0.2).unwrap();
        let b = window_annihilation(&lat, &spec, &wide, ProjectorMode::Sharp, false).unwrap();
        assert!(b.norm > 1e-3);
    }
}
