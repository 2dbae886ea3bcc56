//! Image-avoidance test for spectral windows: `𝓘 ∩ g_k(𝓘) = ∅`.

use serde::Serialize;

use super::{threshold_eprime, Sign, SymbolFunctions};
use crate::error::{Error, Result};

const EPS_MIN: f64 = 1e-9;
const BISECTIONS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variant {
    Isotropic,
    Separable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Disjointness {
    Accepted {
        epsilon: f64,
        /// `f_k(E + ε)` for `d = 2`, isotropic.
        certificate: Option<f64>,
    },
    Refused {
        witness: Vec<f64>,
        image: f64,
    },
}

impl Disjointness {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Disjointness::Accepted { .. })
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self {
            Disjointness::Accepted { epsilon, .. } => Some(*epsilon),
            Disjointness::Refused { .. } => None,
        }
    }
}

/// Largest half-width `ε` (to bisection accuracy) for which no point of
/// `(E-ε, E+ε)` is mapped back into the window by the symbol, or a witness.
///
/// `k` holds one wavenumber for the isotropic variant and `d` for the
/// separable one.
pub fn window_disjointness(e: f64, k: &[f64], d: usize, variant: Variant) -> Result<Disjointness> {
    let top = 4.0 * d as f64;
    if d == 0 || !(0.0..=top).contains(&e) {
        return Err(Error::InvalidParameter(format!("energy {e} outside [0, {top}]")));
    }
    match variant {
        Variant::Separable => separable(e, k, d),
        Variant::Isotropic => {
            if k.len() != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    got: k.len(),
                });
            }
            let sym = SymbolFunctions::new(k[0])?;
            if d == 1 {
                Ok(bisect(e, top, |eps| one_dim(&sym, e, eps), &sym, 1))
            } else {
                let n = match d {
                    2 => 160,
                    3 => 40,
                    _ => 12,
                };
                Ok(bisect(e, top, |eps| sampled(&sym, d, e, eps, n), &sym, d))
            }
        }
    }
}

/// `Ok(())` if disjoint, else `Err((witness, image))`.
type Check = std::result::Result<(), (Vec<f64>, f64)>;

fn bisect(e: f64, top: f64, check: impl Fn(f64) -> Check, sym: &SymbolFunctions, d: usize) -> Disjointness {
    if let Err((witness, image)) = check(EPS_MIN) {
        return Disjointness::Refused { witness, image };
    }
    let (mut lo, mut hi) = (EPS_MIN, top);
    if check(hi).is_ok() {
        lo = hi;
    } else {
        for _ in 0..BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if check(mid).is_ok() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Disjointness::Accepted {
        epsilon: lo,
        certificate: (d == 2).then(|| sym.f_k((e + lo).min(8.0))),
    }
}

fn one_dim(sym: &SymbolFunctions, e: f64, eps: f64) -> Check {
    let a = (e - eps).max(0.0);
    let b = (e + eps).min(4.0);
    for sign in [Sign::Minus, Sign::Plus] {
        let mut xs = vec![a, b];
        let c = sym.lambda(sign);
        if c > a && c < b {
            xs.push(c);
        }
        let vals: Vec<f64> = xs.iter().map(|&x| sym.g_branch(sign, x)).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi <= e - eps || lo >= e + eps) {
            let g = sym.g_branch(sign, e);
            return Err((vec![e], g));
        }
    }
    Ok(())
}

/// Samples `Σ g(x_i, y_i)` over `{x ∈ [0,4]^d : Σx ∈ 𝓘}` with `n` nodes per
/// free axis; the image for fixed `y` is an interval, so min/max suffice.
fn sampled(sym: &SymbolFunctions, d: usize, e: f64, eps: f64, n: usize) -> Check {
    let top = 4.0 * d as f64;
    let s_lo = (e - eps).max(0.0);
    let s_hi = (e + eps).min(top);
    let ns = 17;
    let free = d - 1;
    let count = n.pow(free as u32);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut lo = vec![f64::INFINITY; 1 << d];
    let mut hi = vec![f64::NEG_INFINITY; 1 << d];
    let mut arg_lo = vec![Vec::new(); 1 << d];
    let mut arg_hi = vec![Vec::new(); 1 << d];
    let mut x = vec![0.0; d];
    for is in 0..ns {
        let s = s_lo + (s_hi - s_lo) * is as f64 / (ns - 1) as f64;
        // The extra node is the diagonal point `x_i = s/d`, where the sum of
        // the convex branches is extremal.
        for flat in 0..=count {
            let mut r = flat;
            let mut sum = 0.0;
            for xa in x.iter_mut().take(free) {
                *xa = if flat == count {
                    s / d as f64
                } else {
                    4.0 * (r % n) as f64 / (n - 1) as f64
                };
                sum += *xa;
                r /= n;
            }
            let last = s - sum;
            if !(0.0..=4.0).contains(&last) {
                continue;
            }
            x[d - 1] = last;
            let gm: Vec<f64> = x.iter().map(|&t| sym.g(t, 0)).collect();
            let gp: Vec<f64> = x.iter().map(|&t| sym.g(t, 1)).collect();
            for y in 0..(1usize << d) {
                let g: f64 = (0..d).map(|i| if y >> i & 1 == 1 { gp[i] } else { gm[i] }).sum();
                if g < lo[y] {
                    lo[y] = g;
                    arg_lo[y] = x.clone();
                }
                if g > hi[y] {
                    hi[y] = g;
                    arg_hi[y] = x.clone();
                }
            }
        }
    }
    for y in 0..(1usize << d) {
        if lo[y] > hi[y] {
            continue;
        }
        if !(hi[y] <= e - eps || lo[y] >= e + eps) {
            let (w, g) = if (lo[y] - e).abs() < (hi[y] - e).abs() {
                (arg_lo[y].clone(), lo[y])
            } else {
                (arg_hi[y].clone(), hi[y])
            };
            if best.as_ref().is_none_or(|(_, b)| (g - e).abs() < (b - e).abs()) {
                best = Some((w, g));
            }
        }
    }
    match best {
        Some(b) => Err(b),
        None => Ok(()),
    }
}

fn separable(e: f64, k: &[f64], d: usize) -> Result<Disjointness> {
    if k.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: k.len(),
        });
    }
    let ep = threshold_eprime(k)?;
    let top = 4.0 * d as f64;
    Ok(if e < ep {
        Disjointness::Accepted {
            epsilon: ep - e,
            certificate: None,
        }
    } else if e > top - ep {
        Disjointness::Accepted {
            epsilon: e - (top - ep),
            certificate: None,
        }
    } else {
        Disjointness::Refused {
            witness: vec![ep],
            image: ep,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::{critical_points_1d, threshold_e};
    use std::f64::consts::PI;

    #[test]
    fn one_dimensional_verdicts() {
        let k = [PI / 3.0];
        let r = window_disjointness(2.0, &k, 1, Variant::Isotropic).unwrap();
        assert!(r.epsilon().unwrap() > 0.1);
        let (em, ep) = critical_points_1d(PI / 3.0).unwrap();
        for t in [em, ep] {
            match window_disjointness(t, &k, 1, Variant::Isotropic).unwrap() {
                Disjointness::Refused { witness, image } => {
                    assert_eq!(witness, vec![t]);
                    assert!((image - t).abs() < 1e-12);
                }
                other => panic!("accepted at threshold: {other:?}"),
            }
        }
    }

    #[test]
    fn two_dimensional_verdicts() {
        let k = [PI / 3.0];
        match window_disjointness(0.3, &k, 2, Variant::Isotropic).unwrap() {
            Disjointness::Accepted { epsilon, certificate } => {
                assert!(epsilon > 0.05);
                assert!(certificate.unwrap() > 0.0);
                assert!(0.3 + epsilon <= threshold_e(PI / 3.0).unwrap() + 1e-2);
            }
            other => panic!("{other:?}"),
        }
        assert!(!window_disjointness(4.0, &k, 2, Variant::Isotropic).unwrap().is_accepted());
    }

    #[test]
    fn separable_window() {
        let k = [PI / 2.0, PI / 2.0];
        let r = window_disjointness(0.2, &k, 2, Variant::Separable).unwrap();
        assert!((r.epsilon().unwrap() - (2.0 - 2f64.sqrt() - 0.2)).abs() < 1e-15);
        assert!(!window_disjointness(1.0, &k, 2, Variant::Separable).unwrap().is_accepted());
    }
}
