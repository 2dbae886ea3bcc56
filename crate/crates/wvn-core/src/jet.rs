//! Truncated Taylor series ("jets") for exact derivatives of closed-form
//! functions up to [`MAX_DERIVATIVE`].

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Highest derivative order carried by a [`Jet`].
pub const MAX_DERIVATIVE: usize = 6;
const LEN: usize = MAX_DERIVATIVE + 1;

/// `f(x0 + t) = Σ_j c[j] t^j + O(t^{LEN})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub c: [f64; LEN],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = v;
        Self { c }
    }

    /// The identity function at `x0`.
    pub fn variable(x0: f64) -> Self {
        let mut c = [0.0; LEN];
        c[0] = x0;
        c[1] = 1.0;
        Self { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `f^{(j)}(x0)`.
    pub fn derivative(&self, j: usize) -> f64 {
        self.c[j] * factorial(j)
    }

    /// All derivatives `f^{(0..=MAX_DERIVATIVE)}(x0)`.
    pub fn derivatives(&self) -> [f64; LEN] {
        let mut out = [0.0; LEN];
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.derivative(j);
        }
        out
    }

    pub fn scale(self, a: f64) -> Self {
        let mut c = self.c;
        for v in &mut c {
            *v *= a;
        }
        Self { c }
    }

    pub fn recip(self) -> Self {
        let f = self.c;
        let mut h = [0.0; LEN];
        h[0] = 1.0 / f[0];
        for n in 1..LEN {
            let mut acc = 0.0;
            for k in 1..=n {
                acc += f[k] * h[n - k];
            }
            h[n] = -acc * h[0];
        }
        Self { c: h }
    }

    pub fn exp(self) -> Self {
        let f = self.c;
        let mut g = [0.0; LEN];
        g[0] = f[0].exp();
        for n in 1..LEN {
            let mut acc = 0.0;
            for k in 1..=n {
                acc += k as f64 * f[k] * g[n - k];
            }
            g[n] = acc / n as f64;
        }
        Self { c: g }
    }

    /// `f^a` for `f(x0) > 0`.
    pub fn powf(self, a: f64) -> Self {
        let f = self.c;
        let mut g = [0.0; LEN];
        g[0] = f[0].powf(a);
        for n in 1..LEN {
            let mut acc = 0.0;
            for k in 1..=n {
                acc += (a * k as f64 - (n - k) as f64) * f[k] * g[n - k];
            }
            g[n] = acc / (n as f64 * f[0]);
        }
        Self { c: g }
    }

    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    pub fn atan(self) -> Self {
        // g' = f' / (1 + f^2), integrated term by term
        let mut fp = [0.0; LEN];
        for j in 0..LEN - 1 {
            fp[j] = (j + 1) as f64 * self.c[j + 1];
        }
        let h = Jet { c: fp } / (Jet::constant(1.0) + self * self);
        let mut g = [0.0; LEN];
        g[0] = self.c[0].atan();
        for n in 1..LEN {
            g[n] = h.c[n - 1] / n as f64;
        }
        Self { c: g }
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(o.c) {
            *a += b;
        }
        Jet { c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; LEN];
        for i in 0..LEN {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..LEN - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, v: f64) -> Jet {
        self.c[0] += v;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_variable() {
        let j = Jet::variable(0.3).exp();
        for d in 0..=MAX_DERIVATIVE {
            assert!((j.derivative(d) - 0.3f64.exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn bracket_derivatives_match_closed_form() {
        // (1 + x^2)^{-1}: f' = -2x/(1+x^2)^2, f'' = (6x^2 - 2)/(1+x^2)^3
        let x = 0.7;
        let f = (Jet::variable(x) * Jet::variable(x) + 1.0).powf(-1.0);
        let d = 1.0 + x * x;
        assert!((f.derivative(1) + 2.0 * x / (d * d)).abs() < 1e-14);
        assert!((f.derivative(2) - (6.0 * x * x - 2.0) / (d * d * d)).abs() < 1e-14);
    }

    #[test]
    fn atan_derivative() {
        let x = -1.2;
        let g = Jet::variable(x).atan();
        assert!((g.value() - x.atan()).abs() < 1e-15);
        assert!((g.derivative(1) - 1.0 / (1.0 + x * x)).abs() < 1e-15);
        assert!((g.derivative(2) + 2.0 * x / (1.0 + x * x).powi(2)).abs() < 1e-14);
    }
}
