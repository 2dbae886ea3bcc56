//! Parametric solution sets of `h_{k;∗}(x₁) + h_{k;⋄}(x₂) = 0` for `d = 2`.

use std::f64::consts::PI;

use serde::Serialize;

use super::{normalize_wavenumber, Sign};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRange {
    pub isolated: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl EnergyRange {
    pub fn contains(&self, e: f64, tol: f64) -> bool {
        (e >= self.lo - tol && e <= self.hi + tol) || self.isolated.iter().any(|&x| (x - e).abs() <= tol)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveFamily {
    pub star: Sign,
    pub diamond: Sign,
    /// Sampled polylines in the `(x₁, x₂)` plane.
    pub paths: Vec<Vec<(f64, f64)>>,
    pub points: Vec<(f64, f64)>,
    pub energy: EnergyRange,
}

impl CurveFamily {
    pub fn label(&self) -> String {
        let s = |x: Sign| if x == Sign::Minus { '-' } else { '+' };
        format!("S_{}{}", s(self.star), s(self.diamond))
    }

    fn flipped(mut self) -> Self {
        let f = |x: Sign| if x == Sign::Minus { Sign::Plus } else { Sign::Minus };
        self.star = f(self.star);
        self.diamond = f(self.diamond);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionCurves {
    pub k: f64,
    /// Ordered `--`, `++`, `-+`, `+-`.
    pub families: Vec<CurveFamily>,
}

impl SolutionCurves {
    pub fn family(&self, star: Sign, diamond: Sign) -> &CurveFamily {
        self.families
            .iter()
            .find(|f| f.star == star && f.diamond == diamond)
            .expect("all four families are present")
    }

    /// Smallest and largest energy over the four ranges.
    pub fn hull(&self) -> (f64, f64) {
        self.families.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), f| {
            (a.min(f.energy.lo), b.max(f.energy.hi))
        })
    }
}

fn sample(n: usize, a: f64, b: f64, f: impl Fn(f64) -> (f64, f64)) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| f(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

fn reflect(path: &[(f64, f64)]) -> Vec<(f64, f64)> {
    path.iter().map(|&(a, b)| (4.0 - a, 4.0 - b)).collect()
}

/// Four families with `samples` points per path. For `k ∈ (π,2π)` the sets
/// are those of `2π - k` with both signs exchanged.
pub fn solution_curves_2d(k: f64, samples: usize) -> Result<SolutionCurves> {
    let k = normalize_wavenumber(k)?;
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples per path".into()));
    }
    if k > PI {
        let mut c = lower_families(2.0 * PI - k, samples);
        c.k = k;
        c.families = c.families.into_iter().map(CurveFamily::flipped).collect();
        c.families.swap(0, 1);
        c.families.swap(2, 3);
        return Ok(c);
    }
    Ok(lower_families(k, samples))
}

fn lower_families(k: f64, n: usize) -> SolutionCurves {
    let ck = k.cos();
    let ch = (0.5 * k).cos();
    let curve = |phi: f64| (2.0 - 2.0 * phi.cos(), 2.0 - 2.0 * (k - phi).cos());
    let mm = sample(n, 0.0, k, curve);
    let mp = sample(n, k, PI, curve);
    let line = sample(n, 0.0, 4.0, |t| (t, 4.0 - t));
    let corners = vec![(0.0, 4.0), (4.0, 0.0)];
    let families = vec![
        CurveFamily {
            star: Sign::Minus,
            diamond: Sign::Minus,
            paths: vec![mm.clone()],
            points: corners.clone(),
            energy: EnergyRange {
                isolated: vec![4.0],
                lo: 4.0 - 4.0 * ch,
                hi: 2.0 - 2.0 * ck,
            },
        },
        CurveFamily {
            star: Sign::Plus,
            diamond: Sign::Plus,
            paths: vec![reflect(&mm)],
            points: corners,
            energy: EnergyRange {
                isolated: vec![4.0],
                lo: 6.0 + 2.0 * ck,
                hi: 4.0 + 4.0 * ch,
            },
        },
        CurveFamily {
            star: Sign::Minus,
            diamond: Sign::Plus,
            paths: vec![line.clone(), mp.clone()],
            points: vec![],
            energy: EnergyRange {
                isolated: vec![4.0],
                lo: 2.0 - 2.0 * ck,
                hi: 6.0 + 2.0 * ck,
            },
        },
        CurveFamily {
            star: Sign::Plus,
            diamond: Sign::Minus,
            paths: vec![line, reflect(&mp)],
            points: vec![],
            energy: EnergyRange {
                isolated: vec![4.0],
                lo: 2.0 - 2.0 * ck,
                hi: 6.0 + 2.0 * ck,
            },
        },
    ];
    SolutionCurves { k, families }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::{threshold_e, SymbolFunctions};

    const KS: [f64; 6] = [PI / 6.0, PI / 3.0, 2.0, 3.5, 4.4, 5.8];

    #[test]
    fn every_point_solves_its_equation() {
        for &k in &KS {
            let s = SymbolFunctions::new(k).unwrap();
            let c = solution_curves_2d(k, 101).unwrap();
            for f in &c.families {
                for &(a, b) in f.paths.iter().flatten().chain(&f.points) {
                    let r = s.h_branch(f.star, a) + s.h_branch(f.diamond, b);
                    assert!(r.abs() < 1e-12, "k={k} {}: {r}", f.label());
                    assert!(f.energy.contains(a + b, 1e-12), "k={k} {}: {}", f.label(), a + b);
                }
            }
        }
    }

    #[test]
    fn corners_and_symmetric_ranges() {
        let c = solution_curves_2d(PI / 3.0, 11).unwrap();
        let mm = c.family(Sign::Minus, Sign::Minus);
        assert!(mm.points.contains(&(0.0, 4.0)) && mm.points.contains(&(4.0, 0.0)));
        assert_eq!(c.family(Sign::Plus, Sign::Minus).energy, c.family(Sign::Minus, Sign::Plus).energy);
        let e = threshold_e(PI / 3.0).unwrap();
        let (lo, hi) = c.hull();
        assert!((lo - e).abs() < 1e-15 && (hi - (8.0 - e)).abs() < 1e-14);
    }

    #[test]
    fn plus_minus_is_swap_of_minus_plus() {
        let c = solution_curves_2d(1.0, 41).unwrap();
        let s = SymbolFunctions::new(1.0).unwrap();
        for &(a, b) in c.family(Sign::Minus, Sign::Plus).paths.iter().flatten() {
            assert!((s.h_branch(Sign::Plus, b) + s.h_branch(Sign::Minus, a)).abs() < 1e-12);
        }
    }
}
