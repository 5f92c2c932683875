//! Functions of the frequency variable `ξ` with exact derivatives.

use serde::{Deserialize, Serialize};

use super::jet::{Jet, MAX_DERIV};
use crate::error::{Error, Result};
use crate::spectral_core::{C64, I};

/// A `ξ`-profile. Derivatives of every kind are obtained from Taylor jets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Profile {
    /// A complex constant.
    Const(C64),
    /// `(iξ)^k`.
    IxiPow(u32),
    /// `⟨ξ⟩^s`.
    Bracket(f64),
    /// `1/(iξ)` for `|ξ| ≥ 1/2`, continued as an odd smooth function inside.
    Gamma,
    /// `Σ_k m_k ⟨ξ⟩^{−(2k+1)}`.
    Potential(Vec<f64>),
    /// Pointwise product.
    Product(Vec<Profile>),
    /// `∂_ξ^l` of the inner profile.
    Deriv(Box<Profile>, u32),
    /// `conj P(ξ)`.
    Conj(Box<Profile>),
    /// `P(−ξ)`.
    Reflect(Box<Profile>),
}

/// Smooth bump used by the continuation of `γ`: `e⁴/4 · exp(−1/(1/4 − ξ²))` for
/// `|ξ| < 1/2`, zero outside, equal to `1/4` at the origin.
fn gamma_weight(x: Jet) -> Jet {
    let t = Jet::constant(C64::new(0.25, 0.0), x.depth()) - x * x;
    if t.value().re < 1.0 / 700.0 {
        // Every derivative is below 1e-200 here; skipping avoids inf·0.
        return Jet::constant(C64::new(0.0, 0.0), x.depth());
    }
    let e4 = 4f64.exp() / 4.0;
    (-t.recip()).exp().scale(C64::new(e4, 0.0))
}

impl Profile {
    pub fn one() -> Self {
        Profile::Const(C64::new(1.0, 0.0))
    }

    /// Declared order `m` with `|P(ξ)| ≲ ⟨ξ⟩^m`.
    pub fn order(&self) -> f64 {
        match self {
            Profile::Const(c) => {
                if *c == C64::new(0.0, 0.0) {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            }
            Profile::IxiPow(k) => *k as f64,
            Profile::Bracket(s) => *s,
            Profile::Gamma => -1.0,
            Profile::Potential(m) => {
                if m.iter().all(|v| *v == 0.0) {
                    f64::NEG_INFINITY
                } else {
                    -3.0
                }
            }
            Profile::Product(ps) => ps.iter().map(Profile::order).sum(),
            Profile::Deriv(p, l) => {
                if let Profile::IxiPow(k) = **p {
                    if *l > k {
                        return f64::NEG_INFINITY;
                    }
                }
                p.order() - *l as f64
            }
            Profile::Conj(p) | Profile::Reflect(p) => p.order(),
        }
    }

    /// Total derivative order this profile consumes internally.
    fn extra_depth(&self) -> usize {
        match self {
            Profile::Deriv(p, l) => *l as usize + p.extra_depth(),
            Profile::Product(ps) => ps.iter().map(Profile::extra_depth).max().unwrap_or(0),
            Profile::Conj(p) | Profile::Reflect(p) => p.extra_depth(),
            _ => 0,
        }
    }

    /// True when the profile vanishes identically.
    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Const(c) => *c == C64::new(0.0, 0.0),
            Profile::Potential(m) => m.iter().all(|v| *v == 0.0),
            Profile::Product(ps) => ps.iter().any(Profile::is_zero),
            Profile::Deriv(p, l) => match **p {
                Profile::IxiPow(k) => *l > k,
                Profile::Const(_) => *l > 0,
                _ => p.is_zero(),
            },
            Profile::Conj(p) | Profile::Reflect(p) => p.is_zero(),
            _ => false,
        }
    }

    /// `Some((c, k))` when the profile equals `c·(iξ)^k`.
    pub fn as_monomial(&self) -> Option<(C64, u32)> {
        match self {
            Profile::Const(c) => Some((*c, 0)),
            Profile::IxiPow(k) => Some((C64::new(1.0, 0.0), *k)),
            Profile::Product(ps) => {
                let mut c = C64::new(1.0, 0.0);
                let mut k = 0;
                for p in ps {
                    let (c1, k1) = p.as_monomial()?;
                    c *= c1;
                    k += k1;
                }
                Some((c, k))
            }
            Profile::Deriv(p, l) => {
                let (c, k) = p.as_monomial()?;
                if *l > k {
                    Some((C64::new(0.0, 0.0), 0))
                } else {
                    // ∂^l (iξ)^k = i^l k!/(k−l)! (iξ)^{k−l}
                    let f: f64 = ((k - l + 1)..=k).map(|t| t as f64).product();
                    Some((c * I.powu(*l) * f, k - l))
                }
            }
            Profile::Conj(p) => {
                let (c, k) = p.as_monomial()?;
                // conj (iξ)^k = (−1)^k (iξ)^k for real ξ
                Some((c.conj() * (-1f64).powi(k as i32), k))
            }
            Profile::Reflect(p) => {
                let (c, k) = p.as_monomial()?;
                Some((c * (-1f64).powi(k as i32), k))
            }
            _ => None,
        }
    }

    /// Taylor jet at `xi` carrying `depth` derivatives.
    pub fn jet(&self, xi: f64, depth: usize) -> Result<Jet> {
        if depth + self.extra_depth() > MAX_DERIV {
            return Err(Error::Capability(format!(
                "profile derivative order {} exceeds supported depth {MAX_DERIV}",
                depth + self.extra_depth()
            )));
        }
        Ok(self.jet_unchecked(xi, depth))
    }

    fn jet_unchecked(&self, xi: f64, depth: usize) -> Jet {
        match self {
            Profile::Const(c) => Jet::constant(*c, depth),
            Profile::IxiPow(k) => Jet::var(xi, depth).scale(I).powu(*k),
            Profile::Bracket(s) => {
                let x = Jet::var(xi, depth);
                (x * x + C64::new(1.0, 0.0)).powf(s / 2.0)
            }
            Profile::Gamma => {
                let x = Jet::var(xi, depth);
                if xi.abs() >= 0.5 {
                    x.recip().scale(-I)
                } else {
                    (x * (x * x + gamma_weight(x)).recip()).scale(-I)
                }
            }
            Profile::Potential(m) => {
                let x = Jet::var(xi, depth);
                let base = x * x + C64::new(1.0, 0.0);
                let mut acc = Jet::constant(C64::new(0.0, 0.0), depth);
                for (k, mk) in m.iter().enumerate() {
                    if *mk != 0.0 {
                        acc = acc + base.powf(-(2.0 * (k as f64 + 1.0) + 1.0) / 2.0).scale(C64::new(*mk, 0.0));
                    }
                }
                acc
            }
            Profile::Product(ps) => {
                let mut acc = Jet::constant(C64::new(1.0, 0.0), depth);
                for p in ps {
                    acc = acc * p.jet_unchecked(xi, depth);
                }
                acc
            }
            Profile::Deriv(p, l) => p.jet_unchecked(xi, depth + *l as usize).differentiated(*l as usize),
            Profile::Conj(p) => p.jet_unchecked(xi, depth).conj(),
            Profile::Reflect(p) => p.jet_unchecked(-xi, depth).reflected(),
        }
    }

    /// `P(ξ)`.
    pub fn eval(&self, xi: f64) -> C64 {
        match self {
            // Cheap paths for the common kinds.
            Profile::Const(c) => *c,
            Profile::IxiPow(k) => (I * xi).powu(*k),
            Profile::Bracket(s) => C64::new((1.0 + xi * xi).powf(s / 2.0), 0.0),
            Profile::Gamma if xi.abs() >= 0.5 => -I / xi,
            Profile::Product(ps) => ps.iter().map(|p| p.eval(xi)).product(),
            Profile::Conj(p) => p.eval(xi).conj(),
            Profile::Reflect(p) => p.eval(-xi),
            _ => self.jet_unchecked(xi, 0).value(),
        }
    }

    /// `∂_ξ^k P(ξ)`.
    pub fn derivative(&self, xi: f64, k: usize) -> Result<C64> {
        Ok(self.jet(xi, k)?.derivative(k))
    }
}
