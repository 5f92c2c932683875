//! Asymptotic composition expansion `(a#b)_ρ` of Weyl symbols and
//! measurement of the smoothing order of the composition remainder.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quantize::{bony_weyl, quantize, OperatorMatrix};
use crate::spectral_core::{bracket, FourierField, C64, I};
use crate::stats::fit_line;
use crate::symbol_algebra::{factorial, CutoffConfig, Profile, Symbol, SymbolTerm, MAX_DERIV};

/// Column norms below this multiple of the reference are treated as zero.
const ROUNDING_FLOOR: f64 = 1e-13;

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn require_plain(a: &Symbol) -> Result<()> {
    if !a.is_unshifted() || !a.cutoffs.is_empty() {
        return Err(Error::Capability("expansion needs unshifted symbols without cut-off".into()));
    }
    Ok(())
}

/// The `k`-th term of the expansion:
/// `(1/k!)(−i/2)^k Σ_l C(k,l)(−1)^{k−l} (∂_x^{k−l}∂_ξ^l a)(∂_x^l ∂_ξ^{k−l} b)`.
pub fn expansion_term(a: &Symbol, b: &Symbol, k: u32) -> Result<Symbol> {
    require_plain(a)?;
    require_plain(b)?;
    if k as usize > MAX_DERIV {
        return Err(Error::Capability(format!("expansion order {k} exceeds supported depth {MAX_DERIV}")));
    }
    let front = (-I * 0.5).powu(k) / factorial(k as usize);
    let mut terms = Vec::new();
    for ta in &a.terms {
        for tb in &b.terms {
            for l in 0..=k {
                let w = front * binom(k, l) * if (k - l) % 2 == 0 { 1.0 } else { -1.0 };
                let ca = ta.coeff.derivative(k - l);
                let cb = tb.coeff.derivative(l);
                let coeff = FourierField::product(&[&ca, &cb]).scale(w);
                let pa = if l == 0 { ta.profile.clone() } else { Profile::Deriv(Box::new(ta.profile.clone()), l) };
                let pb = if k == l { tb.profile.clone() } else { Profile::Deriv(Box::new(tb.profile.clone()), k - l) };
                let profile = Profile::Product(vec![pa, pb]);
                profile.jet(0.0, 0)?;
                terms.push(SymbolTerm { coeff, profile, shift: 0.0 });
            }
        }
    }
    Ok(Symbol { terms, cutoffs: vec![], tag: None }.simplified())
}

/// `(a#b)_ρ = Σ_{k≤ρ} term_k`; `ρ = 0` gives the pointwise product.
pub fn compose_expansion(a: &Symbol, b: &Symbol, rho: u32) -> Result<Symbol> {
    let parts: Vec<Symbol> = (0..=rho).into_par_iter().map(|k| expansion_term(a, b, k)).collect::<Result<_>>()?;
    Ok(parts.iter().fold(Symbol::zero(), |acc, s| acc.add(s)).simplified())
}

fn ser_order<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

/// Outcome of a remainder measurement. An infinite `measured_order` means the
/// remainder vanishes to rounding on the whole fit range.
#[derive(Clone, Debug, Serialize)]
pub struct CompositionReport {
    pub rho: u32,
    pub orders: [f64; 2],
    #[serde(serialize_with = "ser_order")]
    pub measured_order: f64,
    pub fit_range: [i64; 2],
    pub pass: bool,
    #[serde(skip)]
    pub expansion: Symbol,
    #[serde(skip)]
    pub remainder_matrix: OperatorMatrix,
}

/// Decay exponent of `‖R e_k‖` over `k ∈ [J/8, J/2]`, measured against the
/// reference column norms `‖T e_k‖` that fix the rounding floor.
pub fn decay_exponent(r: &OperatorMatrix, reference: &OperatorMatrix) -> Result<(f64, [i64; 2])> {
    let j = r.j_max() as i64;
    let lo = (j / 8).max(1);
    let hi = j / 2;
    if hi - lo < 2 {
        return Err(Error::Measurement(format!("fit range [{lo}, {hi}] has fewer than 3 modes")));
    }
    let (mut xs, mut ys) = (vec![], vec![]);
    for k in lo..=hi {
        let v = r.column_norm(k);
        let floor = ROUNDING_FLOOR * reference.column_norm(k).max(1.0);
        if v > floor {
            xs.push(bracket(k as f64).ln());
            ys.push(v.ln());
        }
    }
    if xs.len() < 3 {
        return Ok((f64::INFINITY, [lo, hi]));
    }
    Ok((-fit_line(&xs, &ys)?.slope, [lo, hi]))
}

fn restrict(m: &OperatorMatrix, j: usize) -> OperatorMatrix {
    let big = m.j_max();
    let off = big - j;
    let n = 2 * j + 1;
    let sub = m.matrix().view((off, off), (n, n)).into_owned();
    OperatorMatrix::from_matrix(j, sub).expect("square block")
}

/// `Op^{BW}(a)∘Op^{BW}(b) − Op^{BW}((a#b)_ρ)` on modes `|k| ≤ J`, with the
/// fitted decay of its columns.
pub fn remainder_order(a: &Symbol, b: &Symbol, rho: u32, cfg: &CutoffConfig, j_max: usize) -> Result<CompositionReport> {
    let expansion = compose_expansion(a, b, rho)?;
    // Compose on a wider truncation so intermediate modes are not lost.
    let wide = j_max + a.j_max() + b.j_max();
    let prod = bony_weyl(a, cfg, wide).compose(&bony_weyl(b, cfg, wide));
    let prod = restrict(&prod, j_max);
    let r = prod.sub(&bony_weyl(&expansion, cfg, j_max));
    let (measured, range) = decay_exponent(&r, &prod)?;
    let orders = [a.order(), b.order()];
    let threshold = rho as f64 - orders[0] - orders[1] - 1.0;
    Ok(CompositionReport {
        rho,
        orders,
        measured_order: measured,
        fit_range: range,
        pass: measured >= threshold,
        expansion,
        remainder_matrix: r,
    })
}

/// Decay exponent of `Op^W(a_{χ₁}) − Op^W(a_{χ₂})`.
pub fn cutoff_independence(a: &Symbol, c1: &CutoffConfig, c2: &CutoffConfig, j_max: usize) -> Result<f64> {
    if c1.delta == c2.delta {
        return Err(Error::Precondition("cut-off parameters coincide".into()));
    }
    let t1 = bony_weyl(a, c1, j_max);
    let d = t1.sub(&bony_weyl(a, c2, j_max));
    Ok(decay_exponent(&d, &t1)?.0)
}

/// Range of `⟨ξ⟩`, with `ξ = (k+j)/2`, over the nonzero entries of the
/// cut-off difference. `None` when the difference vanishes.
pub fn difference_support(a: &Symbol, c1: &CutoffConfig, c2: &CutoffConfig, j_max: usize) -> Option<(f64, f64)> {
    let d = bony_weyl(a, c1, j_max).sub(&bony_weyl(a, c2, j_max));
    let jm = j_max as i64;
    let floor = 1e-14 * d.max_abs().max(1.0);
    let mut band: Option<(f64, f64)> = None;
    for k in -jm..=jm {
        for j in -jm..=jm {
            if d.entry(k, j).norm() > floor {
                let w = bracket((k + j) as f64 / 2.0);
                band = Some(match band {
                    None => (w, w),
                    Some((lo, hi)) => (lo.min(w), hi.max(w)),
                });
            }
        }
    }
    band
}

/// `‖Op^W(a)∘Op^W(b) − Op^W(c)‖_max` without cut-off, composed on a wider
/// truncation and compared on `|k| ≤ J`.
pub fn weyl_composition_residual(a: &Symbol, b: &Symbol, c: &Symbol, j_max: usize) -> f64 {
    let wide = j_max + a.j_max() + b.j_max();
    let prod = restrict(&quantize(a, 0.5, wide).compose(&quantize(b, 0.5, wide)), j_max);
    prod.max_abs_diff(&quantize(c, 0.5, j_max))
}

/// `max |term_k(a,b) − (−1)^k term_k(b,a)|` sampled on the native grid.
pub fn weyl_symmetry_defect(a: &Symbol, b: &Symbol, rho: u32, xis: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..=rho {
        let ab = expansion_term(a, b, k)?;
        let ba = expansion_term(b, a, k)?.scale(C64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0));
        worst = worst.max(ab.max_diff_on(&ba, xis));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos_term(k: f64, p: Profile) -> Symbol {
        let j = k.abs() as usize;
        Symbol::term(FourierField::from_function(j, |x| C64::new((k * x).cos(), 0.0)), p)
    }

    const XIS: [f64; 5] = [-3.5, -0.4, 0.0, 1.5, 6.0];

    #[test]
    fn multipliers_compose_exactly() {
        let d = Symbol::multiplier(Profile::IxiPow(1));
        let e = compose_expansion(&d, &d, 3).unwrap();
        assert!(e.max_diff_on(&Symbol::multiplier(Profile::IxiPow(2)), &XIS) < 1e-13);
        let r = remainder_order(&d, &d, 2, &CutoffConfig::default(), 32).unwrap();
        assert!(r.remainder_matrix.max_abs() < 1e-12 * 32.0 * 32.0);
        assert!(r.measured_order.is_infinite() && r.pass);
    }

    #[test]
    fn function_times_derivative() {
        let f = FourierField::from_function(3, |x| C64::new(x.cos() + 0.3 * (3.0 * x).sin(), 0.0));
        let fs = Symbol::term(f.clone(), Profile::one());
        let d = Symbol::multiplier(Profile::IxiPow(1));
        let fd = Symbol::term(f.clone(), Profile::IxiPow(1));
        let half = Symbol::term(f.derivative(1).scale(C64::new(0.5, 0.0)), Profile::one());
        let left = compose_expansion(&fs, &d, 1).unwrap();
        assert!(left.max_diff_on(&fd.sub(&half), &XIS) < 1e-13);
        let right = compose_expansion(&d, &fs, 1).unwrap();
        assert!(right.max_diff_on(&fd.add(&half), &XIS) < 1e-13);
        assert!(weyl_composition_residual(&fs, &d, &fd.sub(&half), 24) < 1e-12);
        assert!(weyl_composition_residual(&d, &fs, &fd.add(&half), 24) < 1e-12);
    }

    #[test]
    fn zero_order_is_pointwise_product() {
        let a = cos_term(1.0, Profile::Bracket(0.5));
        let b = cos_term(2.0, Profile::IxiPow(1));
        let p = a.product(&b).unwrap();
        assert!(compose_expansion(&a, &b, 0).unwrap().max_diff_on(&p, &XIS) < 1e-14);
        assert!(weyl_symmetry_defect(&a, &b, 4, &XIS).unwrap() < 1e-12);
    }

    #[test]
    fn capability_limits() {
        let a = cos_term(1.0, Profile::Bracket(0.5));
        assert!(matches!(compose_expansion(&a, &a, 40), Err(Error::Capability(_))));
        let shifted = a.std_to_weyl();
        assert!(matches!(compose_expansion(&shifted, &a, 1), Err(Error::Capability(_))));
    }

    #[test]
    fn remainder_of_nonpolynomial_symbols_decays() {
        let a = cos_term(1.0, Profile::Bracket(1.0));
        let b = cos_term(1.0, Profile::Bracket(1.0));
        let cfg = CutoffConfig::default();
        let r1 = remainder_order(&a, &b, 1, &cfg, 96).unwrap();
        let r3 = remainder_order(&a, &b, 3, &cfg, 96).unwrap();
        assert!(r1.pass && r3.pass, "{} {}", r1.measured_order, r3.measured_order);
        assert!(r3.measured_order >= r1.measured_order - 0.2);
        assert!(r1.measured_order > 0.5, "{}", r1.measured_order);
        let json = serde_json::to_value(&r1).unwrap();
        assert_eq!(json["rho"], 1);
        assert!(json.get("expansion").is_none());
    }

    #[test]
    fn cutoff_difference_band() {
        let a = cos_term(32.0, Profile::IxiPow(2));
        let c1 = CutoffConfig::new(0.5).unwrap();
        let c2 = CutoffConfig::new(0.25).unwrap();
        let (lo, hi) = difference_support(&a, &c1, &c2, 300).unwrap();
        assert!(lo >= 64.0 && hi <= 256.0, "{lo} {hi}");
        assert!(lo < 70.0 && hi > 240.0, "{lo} {hi}");
        let flat = Symbol::multiplier(Profile::IxiPow(2));
        assert!(difference_support(&flat, &c1, &c2, 64).is_none());
    }
}
