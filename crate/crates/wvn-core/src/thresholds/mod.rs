//! Threshold energies, symbol functions and the sets on which the Mourre
//! estimate holds.

mod curves;
mod disjoint;
mod oracle;

pub use curves::{solution_curves_2d, CurveFamily, EnergyRange, SolutionCurves};
pub use disjoint::{window_disjointness, Disjointness, Variant};
pub use oracle::{energy_set_oracle, OracleConfig, OracleSample, OracleSet};

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{check_wavenumber, ModelSpec, Wigner};
use crate::par::ExecPolicy;

/// Representative of `k` in `(0, 2π)`.
pub fn normalize_wavenumber(k: f64) -> Result<f64> {
    check_wavenumber(k)?;
    Ok(k.rem_euclid(2.0 * PI))
}

fn lower_half(k: f64) -> bool {
    k < PI
}

fn root_x(x: f64) -> f64 {
    (x * (4.0 - x)).max(0.0).sqrt()
}

/// Branch selector for `±` families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Minus,
    Plus,
}

/// Symbol functions attached to one wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolFunctions {
    k: f64,
}

impl SymbolFunctions {
    pub fn new(k: f64) -> Result<Self> {
        Ok(Self {
            k: normalize_wavenumber(k)?,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `g_k(x, y) = 2 + (x-2)cos k + sin k √(x(4-x)) (2y-1)`, so that
    /// `g_k(x, 0) = g_{k;-}(x)` and `g_k(x, 1) = g_{k;+}(x)`.
    pub fn g(&self, x: f64, y: u8) -> f64 {
        let s = 2.0 * y as f64 - 1.0;
        2.0 + (x - 2.0) * self.k.cos() + self.k.sin() * root_x(x) * s
    }

    /// `g_{k;±}(x) = 2 + (x-2)cos k ± sin k √(x(4-x))`.
    pub fn g_branch(&self, sign: Sign, x: f64) -> f64 {
        let s = match sign {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        };
        2.0 + (x - 2.0) * self.k.cos() + s * self.k.sin() * root_x(x)
    }

    pub fn g_minus(&self, x: f64) -> f64 {
        self.g_branch(Sign::Minus, x)
    }

    pub fn g_plus(&self, x: f64) -> f64 {
        self.g_branch(Sign::Plus, x)
    }

    /// `h_{k;±}(x) = g_{k;±}(x) - x`.
    pub fn h_branch(&self, sign: Sign, x: f64) -> f64 {
        self.g_branch(sign, x) - x
    }

    /// `h″_{k;-}(x) = 4 sin k (x(4-x))^{-3/2}`.
    pub fn h_minus_second_derivative(&self, x: f64) -> f64 {
        4.0 * self.k.sin() * (x * (4.0 - x)).powf(-1.5)
    }

    /// `α(k) = (cos k - 1)/sin k`.
    pub fn alpha(&self) -> f64 {
        (self.k.cos() - 1.0) / self.k.sin()
    }

    /// `β(k) = cot k`.
    pub fn beta(&self) -> f64 {
        self.k.cos() / self.k.sin()
    }

    /// Critical point of `g_{k;-}` (`Minus`) or of `g_{k;+}` (`Plus`).
    pub fn lambda(&self, sign: Sign) -> f64 {
        let minus = if lower_half(self.k) {
            2.0 - 2.0 * self.k.cos()
        } else {
            2.0 + 2.0 * self.k.cos()
        };
        match sign {
            Sign::Minus => minus,
            Sign::Plus => 4.0 - minus,
        }
    }

    /// `f_{k;-;-}(φ) = 4 - 4cos(k/2)cos(φ - k/2)`.
    pub fn f_minus_minus(&self, phi: f64) -> f64 {
        4.0 - 4.0 * (0.5 * self.k).cos() * (phi - 0.5 * self.k).cos()
    }

    /// `f_{k;+;+}(φ) = 4 + 4cos(k/2)cos(φ - k/2)`.
    pub fn f_plus_plus(&self, phi: f64) -> f64 {
        4.0 + 4.0 * (0.5 * self.k).cos() * (phi - 0.5 * self.k).cos()
    }

    /// `F_{λ;k}(x) = h(x) + h(λ - x)` with `h = h_{k;-}` for `k ∈ (0,π)` and
    /// `h = h_{k;+}` otherwise.
    pub fn big_f(&self, lambda: f64, x: f64) -> f64 {
        let s = if lower_half(self.k) { Sign::Minus } else { Sign::Plus };
        self.h_branch(s, x) + self.h_branch(s, lambda - x)
    }

    /// `f_k(λ) = F_{λ;k}(λ/2) = (λ-4)(cos k - 1) ∓ sin k √(λ(8-λ))`.
    pub fn f_k(&self, lambda: f64) -> f64 {
        let s = if lower_half(self.k) { Sign::Minus } else { Sign::Plus };
        self.m(s, lambda)
    }

    /// `m_{k;∓}(λ) = (λ-4)(cos k - 1) ∓ sin k √(λ(8-λ))` on `[0, 8]`.
    pub fn m(&self, sign: Sign, lambda: f64) -> f64 {
        let s = match sign {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        };
        (lambda - 4.0) * (self.k.cos() - 1.0) + s * self.k.sin() * (lambda * (8.0 - lambda)).max(0.0).sqrt()
    }
}

/// `E_±(k) = 2 ± 2cos(k/2)`.
pub fn critical_points_1d(k: f64) -> Result<(f64, f64)> {
    let k = normalize_wavenumber(k)?;
    let c = (0.5 * k).cos();
    Ok((2.0 - 2.0 * c, 2.0 + 2.0 * c))
}

/// Critical point `λ_∓(k)` of `g_{k;∓}`.
pub fn extremum_lambda(k: f64, sign: Sign) -> Result<f64> {
    Ok(SymbolFunctions::new(k)?.lambda(sign))
}

/// `E(k) = 4 - 4cos(k/2)` on `(0,π)`, `4 + 4cos(k/2)` on `(π,2π)`.
pub fn threshold_e(k: f64) -> Result<f64> {
    let k = normalize_wavenumber(k)?;
    let c = (0.5 * k).cos();
    Ok(if lower_half(k) { 4.0 - 4.0 * c } else { 4.0 + 4.0 * c })
}

/// `ℓ(k)` on its three branches, right-closed at `2π/3` and `4π/3`.
pub fn ell(k: f64) -> Result<f64> {
    let k = normalize_wavenumber(k)?;
    Ok(if k <= 2.0 * PI / 3.0 {
        2.0 - 2.0 * (0.5 * k).cos()
    } else if k <= 4.0 * PI / 3.0 {
        2.0 + 2.0 * k.cos()
    } else {
        2.0 + 2.0 * (0.5 * k).cos()
    })
}

/// `E′(k) = min_i ℓ(k_i)`.
pub fn threshold_eprime(k: &[f64]) -> Result<f64> {
    if k.is_empty() {
        return Err(Error::InvalidParameter("empty wavenumber vector".into()));
    }
    k.iter().try_fold(f64::INFINITY, |m, &ki| Ok(m.min(ell(ki)?)))
}

/// Interval with open/closed ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        (x > self.lo || (self.lo_closed && x == self.lo)) && (x < self.hi || (self.hi_closed && x == self.hi))
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }
}

/// Energies where the Mourre estimate holds, as displayed intervals.
pub fn mourre_window(d: usize, spec: &ModelSpec) -> Result<Vec<Interval>> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    spec.validate()?;
    let top = 4.0 * d as f64;
    let low_high = |e: f64| {
        vec![
            Interval {
                lo: 0.0,
                hi: e,
                lo_closed: true,
                hi_closed: false,
            },
            Interval {
                lo: top - e,
                hi: top,
                lo_closed: false,
                hi_closed: true,
            },
        ]
    };
    let punctured = |cuts: &mut Vec<f64>| {
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut out = Vec::new();
        let mut lo = 0.0;
        for &c in cuts.iter().chain(std::iter::once(&top)) {
            if c > lo {
                out.push(Interval::open(lo, c));
            }
            lo = c;
        }
        out
    };
    match &spec.wigner {
        Wigner::None => {
            let mut cuts: Vec<f64> = (1..d).map(|j| 4.0 * j as f64).collect();
            Ok(punctured(&mut cuts))
        }
        Wigner::Isotropic { k, .. } if d == 1 => {
            let (a, b) = critical_points_1d(*k)?;
            Ok(punctured(&mut vec![a, b]))
        }
        Wigner::Separable { k, .. } if d == 1 => {
            let (a, b) = critical_points_1d(k[0])?;
            Ok(punctured(&mut vec![a, b]))
        }
        Wigner::Isotropic { k, .. } => Ok(low_high(threshold_e(*k)?)),
        Wigner::Separable { k, .. } => {
            if k.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: k.len(),
                });
            }
            Ok(low_high(threshold_eprime(k)?))
        }
    }
}

/// Summary of all threshold quantities for one model.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub d: usize,
    pub k: Vec<f64>,
    pub e_minus: Option<f64>,
    pub e_plus: Option<f64>,
    pub e_of_k: Option<f64>,
    pub e_prime: Option<f64>,
    pub lambda_minus: Option<f64>,
    pub lambda_plus: Option<f64>,
    pub mu_intervals: Vec<Interval>,
    /// `[λ_ℓ, λ_r]`, identified with `[E(k), 8 - E(k)]` for `d = 2`.
    pub lambda_l_r: Option<(f64, f64)>,
    pub oracle: Option<OracleSummary>,
}

/// Compact view of an [`OracleSet`] for reports.
#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub grid_n: usize,
    pub tol_constraint: f64,
    pub energy_step: f64,
    pub sample_count: usize,
    pub grid_min_positive: Option<f64>,
    pub oracle_min_positive: Option<f64>,
    pub oracle_max: Option<f64>,
    /// `|oracle_min_positive - E(k)|`, when both exist.
    pub deviation: Option<f64>,
}

impl OracleSummary {
    pub fn from_set(set: &OracleSet, reference: Option<f64>) -> Self {
        Self {
            grid_n: set.grid_n,
            tol_constraint: set.tol_constraint,
            energy_step: set.energy_step,
            sample_count: set.samples.len(),
            grid_min_positive: set.grid_min_positive,
            oracle_min_positive: set.refined_min_positive,
            oracle_max: set.refined_max,
            deviation: match (set.refined_min_positive, reference) {
                (Some(a), Some(b)) => Some((a - b).abs()),
                _ => None,
            },
        }
    }

    /// Oracle agrees with the closed form within two energy-grid steps.
    pub fn agrees(&self) -> bool {
        self.deviation.is_some_and(|d| d <= 2.0 * self.energy_step)
    }
}

/// Builds the report; `oracle` requests the torus search (isotropic variant,
/// `d ≥ 2`).
pub fn threshold_report(
    d: usize,
    spec: &ModelSpec,
    oracle: Option<OracleConfig>,
    policy: ExecPolicy,
) -> Result<ThresholdReport> {
    let mu = mourre_window(d, spec)?;
    let mut r = ThresholdReport {
        d,
        k: Vec::new(),
        e_minus: None,
        e_plus: None,
        e_of_k: None,
        e_prime: None,
        lambda_minus: None,
        lambda_plus: None,
        mu_intervals: mu,
        lambda_l_r: None,
        oracle: None,
    };
    match &spec.wigner {
        Wigner::None => {}
        Wigner::Isotropic { k, .. } => {
            r.k = vec![*k];
            let sym = SymbolFunctions::new(*k)?;
            if d == 1 {
                let (a, b) = critical_points_1d(*k)?;
                r.e_minus = Some(a);
                r.e_plus = Some(b);
                r.lambda_minus = Some(sym.lambda(Sign::Minus));
                r.lambda_plus = Some(sym.lambda(Sign::Plus));
            } else {
                let e = threshold_e(*k)?;
                r.e_of_k = Some(e);
                if d == 2 {
                    r.lambda_l_r = Some((e, 8.0 - e));
                }
                if let Some(cfg) = oracle {
                    let set = energy_set_oracle(d, *k, &cfg, policy)?;
                    r.oracle = Some(OracleSummary::from_set(&set, if d == 2 { Some(e) } else { None }));
                }
            }
        }
        Wigner::Separable { k, .. } => {
            r.k = k.clone();
            r.e_prime = Some(threshold_eprime(k)?);
        }
    }
    Ok(r)
}
