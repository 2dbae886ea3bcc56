//! Brute-force search for the attained energies on the torus constraint set.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{normalize_wavenumber, Sign};
use crate::error::{Error, Result};
use crate::par::{self, ExecPolicy};

const POSITIVE: f64 = 1e-9;
const PENALTY_STAGES: usize = 5;
const CANDIDATES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleConfig {
    pub grid_n: usize,
    /// Defaults to four grid spacings.
    pub tol_constraint: Option<f64>,
    pub refine: bool,
}

impl OracleConfig {
    pub fn new(grid_n: usize) -> Self {
        Self {
            grid_n,
            tol_constraint: None,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSample {
    pub xi: Vec<f64>,
    pub energy: f64,
    /// Which constraint held: `Plus` for shift `ξ + k`, `Minus` for `ξ - k`.
    pub branch: Sign,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSet {
    pub d: usize,
    pub k: f64,
    pub grid_n: usize,
    pub grid_step: f64,
    pub tol_constraint: f64,
    /// Largest energy change between neighbouring grid points, `2h`.
    pub energy_step: f64,
    pub samples: Vec<OracleSample>,
    pub grid_min_positive: Option<f64>,
    pub grid_max: Option<f64>,
    pub refined_min_positive: Option<f64>,
    pub refined_argmin: Option<Vec<f64>>,
    pub refined_max: Option<f64>,
}

impl OracleSet {
    /// Sorted sample energies.
    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.samples.iter().map(|s| s.energy).collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Hausdorff distance between the two sampled energy sets.
    pub fn energy_distance(&self, other: &OracleSet) -> f64 {
        let a = self.energies();
        let b = other.energies();
        if a.is_empty() || b.is_empty() {
            return if a.is_empty() && b.is_empty() { 0.0 } else { f64::INFINITY };
        }
        one_sided(&a, &b).max(one_sided(&b, &a))
    }

    /// `(min, max)` of the refined energies, falling back to the grid values.
    pub fn hull(&self) -> Option<(f64, f64)> {
        let lo = self.refined_min_positive.or(self.grid_min_positive)?;
        let hi = self.refined_max.or(self.grid_max)?;
        Some((lo, hi))
    }
}

fn one_sided(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .map(|&x| {
            let i = b.partition_point(|&y| y < x);
            let mut d = f64::INFINITY;
            if i < b.len() {
                d = d.min(b[i] - x);
            }
            if i > 0 {
                d = d.min(x - b[i - 1]);
            }
            d
        })
        .fold(0.0, f64::max)
}

fn shift_of(branch: Sign, k: f64) -> f64 {
    match branch {
        Sign::Plus => k,
        Sign::Minus => -k,
    }
}

fn energy(xi: &[f64]) -> f64 {
    xi.iter().map(|&x| 2.0 - 2.0 * x.cos()).sum()
}

/// `Σ(2-2cos ξ_i) - Σ(2-2cos(ξ_i+s))`.
fn constraint(xi: &[f64], s: f64) -> f64 {
    xi.iter().map(|&x| 2.0 * (x + s).cos() - 2.0 * x.cos()).sum()
}

/// Scans the torus grid and refines the extreme candidates.
pub fn energy_set_oracle(d: usize, k: f64, cfg: &OracleConfig, policy: ExecPolicy) -> Result<OracleSet> {
    let k = normalize_wavenumber(k)?;
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if cfg.grid_n < 64 {
        return Err(Error::InvalidParameter(format!("grid_n = {} is below 64", cfg.grid_n)));
    }
    let n = cfg.grid_n;
    let total = n
        .checked_pow(d as u32)
        .filter(|&t| t <= 1 << 28)
        .ok_or(Error::Capacity {
            what: "oracle grid points",
            dim: usize::MAX,
            limit: 1 << 28,
        })?;
    let h = 2.0 * PI / n as f64;
    let tol = cfg.tol_constraint.unwrap_or(4.0 * h);
    let nodes: Vec<f64> = (0..n).map(|j| -PI + j as f64 * h).collect();
    let chunk = (total / 64).max(4096);
    let parts = par::map_chunks(policy, total, chunk, |range| {
        let mut out = Vec::new();
        let mut xi = vec![0.0; d];
        for flat in range {
            let mut r = flat;
            for a in (0..d).rev() {
                xi[a] = nodes[r % n];
                r /= n;
            }
            let e = energy(&xi);
            for branch in [Sign::Plus, Sign::Minus] {
                if constraint(&xi, shift_of(branch, k)).abs() <= tol {
                    out.push(OracleSample {
                        xi: xi.clone(),
                        energy: e,
                        branch,
                    });
                }
            }
        }
        out
    });
    let samples: Vec<OracleSample> = parts.into_iter().flatten().collect();
    let grid_min_positive = samples.iter().map(|s| s.energy).filter(|&e| e > POSITIVE).reduce(f64::min);
    let grid_max = samples.iter().map(|s| s.energy).reduce(f64::max);

    let mut set = OracleSet {
        d,
        k,
        grid_n: n,
        grid_step: h,
        tol_constraint: tol,
        energy_step: 2.0 * h,
        samples,
        grid_min_positive,
        grid_max,
        refined_min_positive: None,
        refined_argmin: None,
        refined_max: None,
    };
    if cfg.refine && !set.samples.is_empty() {
        refine(&mut set, k);
    }
    Ok(set)
}

fn refine(set: &mut OracleSet, k: f64) {
    let mut best_min: Option<(f64, Vec<f64>)> = None;
    let mut best_max: Option<f64> = None;
    for branch in [Sign::Plus, Sign::Minus] {
        let s = shift_of(branch, k);
        let mut pool: Vec<&OracleSample> = set
            .samples
            .iter()
            .filter(|x| x.branch == branch && x.energy > POSITIVE)
            .collect();
        pool.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        for cand in pool.iter().take(CANDIDATES) {
            if let Some(xi) = constrained_extremum(&cand.xi, s, 1.0) {
                let e = energy(&xi);
                if e > POSITIVE && best_min.as_ref().is_none_or(|(b, _)| e < *b) {
                    best_min = Some((e, xi));
                }
            }
        }
        for cand in pool.iter().rev().take(CANDIDATES) {
            if let Some(xi) = constrained_extremum(&cand.xi, s, -1.0) {
                let e = energy(&xi);
                if best_max.is_none_or(|b| e > b) {
                    best_max = Some(e);
                }
            }
        }
    }
    if let Some((e, xi)) = best_min {
        set.refined_min_positive = Some(e);
        set.refined_argmin = Some(xi.iter().map(|&x| wrap(x)).collect());
    }
    set.refined_max = best_max;
}

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Local extremum of `sign·E` on `{c = 0}`: penalty stages with weights
/// `1, 10, ..., 10⁴`, then a Newton solve of the Lagrange system.
fn constrained_extremum(start: &[f64], s: f64, sign: f64) -> Option<Vec<f64>> {
    let d = start.len();
    let mut xi = DVector::from_column_slice(start);
    let mut mu = 1.0;
    for _ in 0..PENALTY_STAGES {
        penalty_newton(&mut xi, s, sign, mu);
        mu *= 10.0;
    }
    let grad_c = |x: &DVector<f64>| DVector::from_fn(d, |i, _| 2.0 * x[i].sin() - 2.0 * (x[i] + s).sin());
    let g = grad_c(&xi);
    let ge = DVector::from_fn(d, |i, _| sign * 2.0 * xi[i].sin());
    let gn = g.norm_squared();
    if gn < 1e-20 {
        return None;
    }
    let mut lambda = -ge.dot(&g) / gn;
    let anchor = xi.clone();
    for _ in 0..50 {
        let g = grad_c(&xi);
        let c = constraint(xi.as_slice(), s);
        let mut rhs = DVector::zeros(d + 1);
        let mut jac = DMatrix::zeros(d + 1, d + 1);
        for i in 0..d {
            rhs[i] = sign * 2.0 * xi[i].sin() + lambda * g[i];
            jac[(i, i)] = sign * 2.0 * xi[i].cos() + lambda * (2.0 * xi[i].cos() - 2.0 * (xi[i] + s).cos());
            jac[(i, d)] = g[i];
            jac[(d, i)] = g[i];
        }
        rhs[d] = c;
        if rhs.norm() < 1e-14 {
            break;
        }
        let step = jac.lu().solve(&rhs)?;
        for i in 0..d {
            xi[i] -= step[i];
        }
        lambda -= step[d];
    }
    let done = constraint(xi.as_slice(), s).abs() < 1e-12 && (&xi - &anchor).norm() < 0.5;
    done.then(|| xi.iter().copied().collect())
}

fn penalty_newton(xi: &mut DVector<f64>, s: f64, sign: f64, mu: f64) {
    let d = xi.len();
    let objective = |x: &DVector<f64>| {
        let c = constraint(x.as_slice(), s);
        sign * energy(x.as_slice()) + mu * c * c
    };
    for _ in 0..100 {
        let c = constraint(xi.as_slice(), s);
        let g = DVector::from_fn(d, |i, _| 2.0 * xi[i].sin() - 2.0 * (xi[i] + s).sin());
        let grad = DVector::from_fn(d, |i, _| sign * 2.0 * xi[i].sin() + 2.0 * mu * c * g[i]);
        if grad.norm() < 1e-13 {
            return;
        }
        let mut hess = 2.0 * mu * &g * g.transpose();
        for i in 0..d {
            hess[(i, i)] +=
                sign * 2.0 * xi[i].cos() + 2.0 * mu * c * (2.0 * xi[i].cos() - 2.0 * (xi[i] + s).cos());
        }
        let mut shift = 0.0;
        let dir = loop {
            let mut m = hess.clone();
            for i in 0..d {
                m[(i, i)] += shift;
            }
            if let Some(ch) = m.cholesky() {
                break ch.solve(&grad);
            }
            shift = if shift == 0.0 { 1e-6 * (1.0 + mu) } else { shift * 10.0 };
        };
        let f0 = objective(xi);
        let mut t = 1.0;
        loop {
            let trial = &*xi - t * &dir;
            if objective(&trial) <= f0 - 1e-4 * t * grad.dot(&dir) {
                *xi = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return;
            }
        }
    }
}
