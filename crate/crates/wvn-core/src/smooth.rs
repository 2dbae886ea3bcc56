//! Smooth test functions of the symbol classes `𝒮^ρ(ℝ)` and compactly
//! supported windows.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, MAX_DERIVATIVE};

/// A real function on ℝ with derivatives available through [`Jet`]s.
pub trait SmoothFunction: Send + Sync {
    /// Taylor jet at `x`, exact up to [`MAX_DERIVATIVE`].
    fn jet(&self, x: f64) -> Jet;

    fn value(&self, x: f64) -> f64 {
        self.jet(x).value()
    }

    /// Claimed exponent `ρ` with `|φ^{(j)}(x)| ≤ C_j⟨x⟩^{ρ-j}`;
    /// `-∞` for compact support.
    fn class_exponent(&self) -> f64;

    /// Closed support interval, or `None` for all of ℝ.
    fn support(&self) -> Option<(f64, f64)>;

    fn name(&self) -> String;
}

/// Fitted constants `C_j = max |φ^{(j)}(x)| ⟨x⟩^{j-ρ}` over `samples`.
/// Compactly supported functions are measured with `ρ = 0`.
pub fn derivative_bounds(f: &dyn SmoothFunction, samples: &[f64]) -> [f64; MAX_DERIVATIVE + 1] {
    let rho = if f.class_exponent().is_finite() { f.class_exponent() } else { 0.0 };
    let mut c = [0.0f64; MAX_DERIVATIVE + 1];
    for &x in samples {
        let b = (1.0 + x * x).sqrt();
        let d = f.jet(x).derivatives();
        for j in 0..=MAX_DERIVATIVE {
            c[j] = c[j].max(d[j].abs() * b.powf(j as f64 - rho));
        }
    }
    c
}

fn psi(u: Jet) -> Jet {
    (-u.recip()).exp()
}

/// Smooth step: 0 for `u ≤ 0`, 1 for `u ≥ 1`, built from `exp(-1/u)`.
pub fn smooth_step(u: Jet) -> Jet {
    let u0 = u.value();
    if u0 <= 0.0 {
        return Jet::constant(0.0);
    }
    if u0 >= 1.0 {
        return Jet::constant(1.0);
    }
    if (-1.0 / u0).exp() == 0.0 {
        return Jet::constant(0.0);
    }
    if (-1.0 / (1.0 - u0)).exp() == 0.0 {
        return Jet::constant(1.0);
    }
    let a = psi(u);
    let b = psi(Jet::constant(1.0) - u);
    a / (a + b)
}

/// Value and first derivative of the smooth step, without jets.
pub fn smooth_step_d1(u: f64) -> (f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0);
    }
    if u >= 1.0 {
        return (1.0, 0.0);
    }
    let a = (-1.0 / u).exp();
    let b = (-1.0 / (1.0 - u)).exp();
    let s = a + b;
    if s == 0.0 {
        return (0.5, 0.0);
    }
    let da = a / (u * u);
    let db = -b / ((1.0 - u) * (1.0 - u));
    (a / s, (da * s - a * (da + db)) / (s * s))
}

/// `C^∞` bump: 1 on `[c - h, c + h]`, 0 outside `[c - h - m, c + h + m]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothWindow {
    pub center: f64,
    pub half_width: f64,
    pub margin: f64,
}

impl SmoothWindow {
    pub fn new(center: f64, half_width: f64, margin: f64) -> Result<Self> {
        if !(half_width >= 0.0) || !(margin > 0.0) || !center.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "window needs half_width >= 0 and margin > 0 (got {half_width}, {margin})"
            )));
        }
        Ok(Self {
            center,
            half_width,
            margin,
        })
    }

    /// The bump of the almost-analytic extension: plateau `[-½, ½]`,
    /// support `[-1, 1]`.
    pub fn unit() -> Self {
        Self {
            center: 0.0,
            half_width: 0.5,
            margin: 0.5,
        }
    }

    /// Window with plateau `[a, b]` and support `[a - m, b + m]`.
    pub fn from_core(a: f64, b: f64, margin: f64) -> Result<Self> {
        if !(b >= a) {
            return Err(Error::InvalidParameter(format!("empty window core [{a}, {b}]")));
        }
        Self::new(0.5 * (a + b), 0.5 * (b - a), margin)
    }

    pub fn core(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    pub fn outer(&self) -> (f64, f64) {
        let r = self.half_width + self.margin;
        (self.center - r, self.center + r)
    }

    /// Value and first derivative without jets (hot path of the quadrature).
    pub fn value_d1(&self, x: f64) -> (f64, f64) {
        let dx = x - self.center;
        let u = (self.half_width + self.margin - dx.abs()) / self.margin;
        let (v, d) = smooth_step_d1(u);
        (v, -dx.signum() * d / self.margin)
    }
}

impl SmoothFunction for SmoothWindow {
    fn jet(&self, x: f64) -> Jet {
        let x = Jet::variable(x);
        let dx = x + (-self.center);
        let r = self.half_width + self.margin;
        let u = if dx.value() < 0.0 {
            (dx + r).scale(1.0 / self.margin)
        } else {
            (-dx + r).scale(1.0 / self.margin)
        };
        smooth_step(u)
    }

    fn class_exponent(&self) -> f64 {
        f64::NEG_INFINITY
    }

    fn support(&self) -> Option<(f64, f64)> {
        Some(self.outer())
    }

    fn name(&self) -> String {
        format!(
            "window(center={}, half_width={}, margin={})",
            self.center, self.half_width, self.margin
        )
    }
}

/// `⟨t⟩^p = (1 + t²)^{p/2}`, of class `𝒮^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub power: f64,
}

impl SmoothFunction for Bracket {
    fn jet(&self, x: f64) -> Jet {
        let t = Jet::variable(x);
        (t * t + 1.0).powf(0.5 * self.power)
    }

    fn class_exponent(&self) -> f64 {
        self.power
    }

    fn support(&self) -> Option<(f64, f64)> {
        None
    }

    fn name(&self) -> String {
        format!("bracket^{}", self.power)
    }
}

/// Weight `φ(t) = ∫_{-∞}^t ⟨x⟩^{-2s} dx`, bounded and increasing, of class
/// `𝒮^0` for `s > ½`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratedBracket {
    s: f64,
}

impl IntegratedBracket {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.5) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!("weight exponent s = {s} must exceed 1/2")));
        }
        Ok(Self { s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Value of the integral. Closed form `arctan t + π/2` at `s = 1`;
    /// otherwise `∫_{-π/2}^{arctan t} cos^{2s-2}θ dθ` by Gauss–Legendre after
    /// removing the endpoint singularity.
    pub fn integral(&self, t: f64) -> f64 {
        if self.s == 1.0 {
            return t.atan() + 0.5 * PI;
        }
        let upper = t.atan() + 0.5 * PI;
        let p = 2.0 * self.s - 1.0;
        // substitute θ + π/2 = w^{1/p}
        let w_max = upper.powf(p);
        let g = |w: f64| {
            if w <= 0.0 {
                return 1.0 / p;
            }
            let a = w.powf(1.0 / p);
            let c = a.sin(); // cos(θ) with θ = a - π/2
            (c / a).powf(2.0 * self.s - 2.0) / p
        };
        gauss_legendre(g, 0.0, w_max, 16)
    }
}

impl SmoothFunction for IntegratedBracket {
    fn jet(&self, x: f64) -> Jet {
        let t = Jet::variable(x);
        let d = (t * t + 1.0).powf(-self.s);
        let mut c = [0.0; MAX_DERIVATIVE + 1];
        c[0] = self.integral(x);
        for n in 1..=MAX_DERIVATIVE {
            c[n] = d.c[n - 1] / n as f64;
        }
        Jet { c }
    }

    fn class_exponent(&self) -> f64 {
        0.0
    }

    fn support(&self) -> Option<(f64, f64)> {
        None
    }

    fn name(&self) -> String {
        format!("integrated_bracket(s={})", self.s)
    }
}

/// Polynomial `Σ a_j t^j`; used for exactness checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl SmoothFunction for Polynomial {
    fn jet(&self, x: f64) -> Jet {
        let t = Jet::variable(x);
        let mut acc = Jet::constant(0.0);
        for &a in self.coeffs.iter().rev() {
            acc = acc * t + a;
        }
        acc
    }

    fn class_exponent(&self) -> f64 {
        self.coeffs.len().saturating_sub(1) as f64
    }

    fn support(&self) -> Option<(f64, f64)> {
        None
    }

    fn name(&self) -> String {
        format!("polynomial{:?}", self.coeffs)
    }
}

/// `φ(t) θ(t/R)` with the unit bump `θ`; compactly supported in `[-R, R]`.
pub struct Truncated<'a> {
    pub inner: &'a dyn SmoothFunction,
    pub radius: f64,
}

impl SmoothFunction for Truncated<'_> {
    fn jet(&self, x: f64) -> Jet {
        if x.abs() >= self.radius {
            return Jet::constant(0.0);
        }
        let cut = SmoothWindow {
            center: 0.0,
            half_width: 0.5 * self.radius,
            margin: 0.5 * self.radius,
        };
        self.inner.jet(x) * cut.jet(x)
    }

    fn class_exponent(&self) -> f64 {
        f64::NEG_INFINITY
    }

    fn support(&self) -> Option<(f64, f64)> {
        Some((-self.radius, self.radius))
    }

    fn name(&self) -> String {
        format!("{} truncated at R={}", self.inner.name(), self.radius)
    }
}

/// Composite Gauss–Legendre quadrature (8 nodes per panel).
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut acc = 0.0;
        for (x, w) in X.iter().zip(W) {
            acc += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += acc * half;
    }
    total
}
