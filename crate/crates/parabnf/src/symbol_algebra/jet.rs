//! Truncated Taylor series in one real variable with complex coefficients.
//!
//! `c[k] = f^{(k)}(ξ₀)/k!`; arithmetic propagates exact derivatives.

use std::ops::{Add, Mul, Neg, Sub};

use crate::spectral_core::C64;

/// Highest derivative order a jet can carry.
pub const MAX_DERIV: usize = 16;
const LEN: usize = MAX_DERIV + 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    c: [C64; LEN],
    n: usize,
}

const ZERO: C64 = C64::new(0.0, 0.0);

impl Jet {
    /// Constant jet carrying `depth` derivatives.
    pub fn constant(v: C64, depth: usize) -> Self {
        assert!(depth <= MAX_DERIV, "jet depth {depth} exceeds {MAX_DERIV}");
        let mut c = [ZERO; LEN];
        c[0] = v;
        Self { c, n: depth + 1 }
    }

    /// The independent variable expanded at `x0`.
    pub fn var(x0: f64, depth: usize) -> Self {
        let mut j = Self::constant(C64::new(x0, 0.0), depth);
        if depth >= 1 {
            j.c[1] = C64::new(1.0, 0.0);
        }
        j
    }

    pub fn from_taylor(coeffs: &[C64]) -> Self {
        assert!(!coeffs.is_empty() && coeffs.len() <= LEN);
        let mut c = [ZERO; LEN];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Self { c, n: coeffs.len() }
    }

    pub fn depth(&self) -> usize {
        self.n - 1
    }

    pub fn value(&self) -> C64 {
        self.c[0]
    }

    /// Taylor coefficient `f^{(k)}/k!`.
    pub fn taylor(&self, k: usize) -> C64 {
        if k < self.n {
            self.c[k]
        } else {
            ZERO
        }
    }

    /// Derivative `f^{(k)}`.
    pub fn derivative(&self, k: usize) -> C64 {
        self.taylor(k) * factorial(k)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        out.c[..self.n].iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn conj(&self) -> Self {
        let mut out = *self;
        out.c[..self.n].iter_mut().for_each(|v| *v = v.conj());
        out
    }

    /// Jet of `g(ξ) = f(−ξ)` given the jet of `f` at `−ξ₀`.
    pub fn reflected(&self) -> Self {
        let mut out = *self;
        for k in (1..self.n).step_by(2) {
            out.c[k] = -out.c[k];
        }
        out
    }

    /// Jet of `f^{(l)}` from a jet of `f` with `l` extra orders.
    pub fn differentiated(&self, l: usize) -> Self {
        assert!(l < self.n, "cannot differentiate {l} times a jet of depth {}", self.depth());
        let n = self.n - l;
        let mut c = [ZERO; LEN];
        for (m, slot) in c.iter_mut().enumerate().take(n) {
            // (m+l)!/m!
            let mut f = 1.0;
            for t in (m + 1)..=(m + l) {
                f *= t as f64;
            }
            *slot = self.c[m + l] * f;
        }
        Self { c, n }
    }

    pub fn recip(&self) -> Self {
        let a0 = self.c[0];
        let mut b = [ZERO; LEN];
        b[0] = a0.inv();
        for k in 1..self.n {
            let mut s = ZERO;
            for j in 1..=k {
                s += self.c[j] * b[k - j];
            }
            b[k] = -s * b[0];
        }
        Self { c: b, n: self.n }
    }

    pub fn exp(&self) -> Self {
        let mut b = [ZERO; LEN];
        b[0] = self.c[0].exp();
        for k in 1..self.n {
            let mut s = ZERO;
            for j in 1..=k {
                s += self.c[j] * b[k - j] * j as f64;
            }
            b[k] = s / k as f64;
        }
        Self { c: b, n: self.n }
    }

    /// `f^s`, principal branch at the expansion point.
    pub fn powf(&self, s: f64) -> Self {
        let a0 = self.c[0];
        let mut b = [ZERO; LEN];
        b[0] = if a0.im == 0.0 && a0.re > 0.0 { C64::new(a0.re.powf(s), 0.0) } else { a0.powf(s) };
        for k in 1..self.n {
            let mut acc = ZERO;
            for j in 1..=k {
                acc += self.c[j] * b[k - j] * (s * j as f64 - (k - j) as f64);
            }
            b[k] = acc / (a0 * k as f64);
        }
        Self { c: b, n: self.n }
    }

    pub fn powu(&self, k: u32) -> Self {
        let mut out = Self::constant(C64::new(1.0, 0.0), self.depth());
        for _ in 0..k {
            out = out * *self;
        }
        out
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|t| t as f64).product()
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let n = self.n.min(rhs.n);
        let mut c = [ZERO; LEN];
        for k in 0..n {
            c[k] = self.c[k] + rhs.c[k];
        }
        Jet { c, n }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let n = self.n.min(rhs.n);
        let mut c = [ZERO; LEN];
        for k in 0..n {
            let mut s = ZERO;
            for j in 0..=k {
                s += self.c[j] * rhs.c[k - j];
            }
            c[k] = s;
        }
        Jet { c, n }
    }
}

impl Add<C64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: C64) -> Jet {
        self.c[0] += rhs;
        self
    }
}
