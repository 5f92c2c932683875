use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_core::bracket;

/// Admissible cut-off `χ(ξ', ξ) = χ̃(|ξ'|/⟨ξ⟩)`, equal to 1 when
/// `|ξ'| ≤ (δ/2)⟨ξ⟩` and to 0 when `|ξ'| ≥ δ⟨ξ⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffConfig {
    pub delta: f64,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self { delta: 0.25 }
    }
}

fn flat(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

impl CutoffConfig {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::Config(format!("cut-off parameter delta={delta} outside (0, 1/2]")));
        }
        Ok(Self { delta })
    }

    /// Profile `χ̃(t)`, a C∞ step from 1 on `[0, δ/2]` to 0 on `[δ, ∞)`.
    pub fn step(&self, t: f64) -> f64 {
        let half = self.delta / 2.0;
        if t <= half {
            return 1.0;
        }
        if t >= self.delta {
            return 0.0;
        }
        let r = (t - half) / half;
        let a = flat(1.0 - r);
        a / (a + flat(r))
    }

    /// `χ(ξ', ξ)`.
    pub fn chi(&self, xi_prime: f64, xi: f64) -> f64 {
        self.step(xi_prime.abs() / bracket(xi))
    }

    /// Multi-argument cut-off `χ(|ξ⃗'|₂, ξ)`.
    pub fn chi_multi(&self, xi_prime: &[f64], xi: f64) -> f64 {
        let r = xi_prime.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.step(r / bracket(xi))
    }
}

/// Returns a closure evaluating the admissible cut-off.
pub fn admissible_cutoff(cfg: CutoffConfig) -> Result<impl Fn(f64, f64) -> f64> {
    let cfg = CutoffConfig::new(cfg.delta)?;
    Ok(move |xp: f64, xi: f64| cfg.chi(xp, xi))
}

/// Range of `⟨ξ⟩` on which the cut-offs of two configurations can differ at
/// x-frequency `n`.
pub fn disagreement_band(n: f64, a: &CutoffConfig, b: &CutoffConfig) -> (f64, f64) {
    let dmax = a.delta.max(b.delta);
    let dmin = a.delta.min(b.delta);
    (n.abs() / dmax, 2.0 * n.abs() / dmin)
}
