//! Eigenvalue counts in a window across growing boxes, with spatially
//! localized states flagged as embedded-eigenvalue candidates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{self, Boundary, LatticeBox, ModelSpec};
use crate::linalg::{SymTridiagonal, MAX_DENSE_DIM};
use crate::par::{self, ExecPolicy};
use crate::thresholds::Interval;

/// A state is a candidate when its participation ratio is below this
/// fraction of the box size.
pub const PR_FRACTION: f64 = 0.2;
/// Largest eigenvalue change between consecutive boxes for a flag.
pub const DRIFT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct CensusState {
    pub energy: f64,
    /// `(Σ|v|²)² / Σ|v|⁴`, the effective number of occupied sites.
    pub participation: f64,
    pub drift: Option<f64>,
    pub flagged: bool,
    #[serde(skip)]
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusRow {
    pub half_width: usize,
    pub dim: usize,
    pub count: usize,
    pub flagged_count: usize,
    pub states: Vec<CensusState>,
}

fn participation(v: &[f64]) -> f64 {
    let s2: f64 = v.iter().map(|x| x * x).sum();
    let s4: f64 = v.iter().map(|x| x.powi(4)).sum();
    s2 * s2 / s4
}

/// Eigenpairs of the truncated `H` in the window (real models only).
pub fn census_box(lat: &LatticeBox, spec: &ModelSpec, window: &Interval) -> Result<Vec<CensusState>> {
    let h = lattice::hamiltonian(lat, spec)?;
    let pairs: Vec<(f64, Vec<f64>)> = if let Some(t) = SymTridiagonal::from_sparse(h.matrix()) {
        let vals: Vec<f64> = t
            .eigenvalues_in(window.lo, window.hi)
            .into_iter()
            .filter(|&e| window.contains(e))
            .collect();
        let mut out: Vec<(f64, Vec<f64>)> = Vec::with_capacity(vals.len());
        for &e in &vals {
            let near: Vec<Vec<f64>> = out
                .iter()
                .filter(|(f, _)| (f - e).abs() < 1e-8)
                .map(|(_, v)| v.clone())
                .collect();
            let v = t.eigenvector(e, &near);
            out.push((e, v));
        }
        out
    } else {
        if h.dim() > MAX_DENSE_DIM {
            return Err(Error::Capacity {
                what: "eigenvalue census",
                dim: h.dim(),
                limit: MAX_DENSE_DIM,
            });
        }
        let m = h.matrix().to_dense_real()?;
        let (vals, vecs) = crate::linalg::real_symmetric_eigen(m);
        vals.iter()
            .enumerate()
            .filter(|(_, e)| window.contains(**e))
            .map(|(i, &e)| (e, vecs.column(i).iter().copied().collect()))
            .collect()
    };
    Ok(pairs
        .into_iter()
        .map(|(energy, vector)| CensusState {
            energy,
            participation: participation(&vector),
            drift: None,
            flagged: false,
            vector,
        })
        .collect())
}

/// Census over boxes of the given half-widths (increasing); boxes are
/// processed concurrently and flags set afterwards in box order.
pub fn eigenvalue_census(
    spec: &ModelSpec,
    d: usize,
    half_widths: &[usize],
    boundary: Boundary,
    window: &Interval,
    policy: ExecPolicy,
) -> Result<Vec<CensusRow>> {
    if half_widths.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidParameter("box half-widths must increase".into()));
    }
    let boxes = par::map_slice(policy, half_widths, |&l| -> Result<(usize, Vec<CensusState>)> {
        let lat = LatticeBox::new(d, l, boundary)?;
        Ok((lat.len(), census_box(&lat, spec, window)?))
    });
    let mut rows: Vec<CensusRow> = Vec::with_capacity(boxes.len());
    for (b, &l) in boxes.into_iter().zip(half_widths) {
        let (dim, mut states) = b?;
        if let Some(prev) = rows.last() {
            for s in &mut states {
                let drift = prev
                    .states
                    .iter()
                    .map(|p| (p.energy - s.energy).abs())
                    .fold(f64::INFINITY, f64::min);
                if drift.is_finite() {
                    s.drift = Some(drift);
                }
                s.flagged = s.participation < PR_FRACTION * dim as f64 && drift < DRIFT_TOL;
            }
        }
        rows.push(CensusRow {
            half_width: l,
            dim,
            count: states.len(),
            flagged_count: states.iter().filter(|s| s.flagged).count(),
            states,
        });
    }
    Ok(rows)
}
