//! Convolution potential, linear frequencies, polynomial nonlinearities and
//! the vector field `U̇ = iE[ΛU + F(U)]`.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::spectral_core::{bracket, forward_transform, FourierField, PairField, C64, I};

/// Potential parameters `m⃗ ∈ [−1/2, 1/2]^M`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PotentialParams {
    m: Vec<f64>,
}

impl PotentialParams {
    pub fn new(m: Vec<f64>) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::Config("potential needs at least one parameter".into()));
        }
        if let Some(bad) = m.iter().find(|v| !(-0.5..=0.5).contains(*v)) {
            return Err(Error::Config(format!("potential parameter {bad} outside [-1/2, 1/2]")));
        }
        Ok(Self { m })
    }

    /// `m⃗ = 0` with `M` entries.
    pub fn zero(len: usize) -> Self {
        Self { m: vec![0.0; len.max(1)] }
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    /// `p̂(j) = Σ_k m_k / ⟨j⟩^{2k+1}`.
    pub fn potential_coeff(&self, j: f64) -> f64 {
        let b = bracket(j);
        let b2 = b * b;
        let mut pow = b * b2;
        let mut acc = 0.0;
        for mk in &self.m {
            acc += mk / pow;
            pow *= b2;
        }
        acc
    }

    /// `λ_j = −j² + p̂(j)`.
    pub fn frequency(&self, j: f64) -> f64 {
        -j * j + self.potential_coeff(j)
    }
}

impl<'de> Deserialize<'de> for PotentialParams {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = Vec::<f64>::deserialize(d)?;
        PotentialParams::new(m).map_err(serde::de::Error::custom)
    }
}

pub fn potential_coeff(params: &PotentialParams, j: i64) -> f64 {
    params.potential_coeff(j as f64)
}

pub fn frequency(params: &PotentialParams, j: i64) -> f64 {
    params.frequency(j as f64)
}

/// One term `C · z₀^{α₀} z̄₀^{β₀} z₁^{α₁} z̄₁^{β₁} z₂^{α₂} z̄₂^{β₂}`, with
/// `z₀ = u`, `z₁ = u_x`, `z₂ = u_xx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub alpha: [u32; 3],
    pub beta: [u32; 3],
    #[serde(rename = "C", serialize_with = "ser_coeff", deserialize_with = "de_coeff")]
    pub c: C64,
}

fn ser_coeff<S: Serializer>(c: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if c.im == 0.0 {
        s.serialize_f64(c.re)
    } else {
        [c.re, c.im].serialize(s)
    }
}

fn de_coeff<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<C64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Coeff {
        Real(f64),
        Complex([f64; 2]),
    }
    Ok(match Coeff::deserialize(d)? {
        Coeff::Real(r) => C64::new(r, 0.0),
        Coeff::Complex([r, i]) => C64::new(r, i),
    })
}

impl Monomial {
    pub fn new(alpha: [u32; 3], beta: [u32; 3], c: f64) -> Self {
        Self { alpha, beta, c: C64::new(c, 0.0) }
    }

    pub fn degree(&self) -> u32 {
        self.alpha.iter().chain(self.beta.iter()).sum()
    }
}

/// A polynomial nonlinearity `f(u, u_x, u_xx)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Nonlinearity {
    pub monomials: Vec<Monomial>,
}

/// Outcome of checking the three structural conditions on `f`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct HypothesisReport {
    /// `f(z₀, −z₁, z₂) = f(z₀, z₁, z₂)`.
    pub parity: bool,
    /// `∂_{z₂} f` real valued.
    pub real_second_derivative: bool,
    /// `f(z) = conj f(z̄)`, i.e. real coefficients.
    pub reality: bool,
    pub violations: Vec<String>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.parity && self.real_second_derivative && self.reality
    }
}

type Exponents = ([u32; 3], [u32; 3]);

impl Nonlinearity {
    pub fn new(monomials: Vec<Monomial>) -> Result<Self> {
        for m in &monomials {
            if m.degree() < 2 {
                return Err(Error::Config(format!("monomial {m:?} has degree below 2")));
            }
        }
        Ok(Self { monomials })
    }

    pub fn zero() -> Self {
        Self { monomials: Vec::new() }
    }

    /// `|u|²u`.
    pub fn cubic() -> Self {
        Self { monomials: vec![Monomial::new([2, 0, 0], [1, 0, 0], 1.0)] }
    }

    /// `|u|² u_xx`.
    pub fn cubic_quasilinear() -> Self {
        Self { monomials: vec![Monomial::new([1, 0, 1], [1, 0, 0], 1.0)] }
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.iter().all(|m| m.c == C64::new(0.0, 0.0))
    }

    /// Highest total degree `q̄` (0 for the zero nonlinearity).
    pub fn degree_bound(&self) -> u32 {
        self.monomials.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Collected coefficients keyed by exponents.
    fn collect(&self) -> BTreeMap<Exponents, C64> {
        let mut out: BTreeMap<Exponents, C64> = BTreeMap::new();
        for m in &self.monomials {
            *out.entry((m.alpha, m.beta)).or_insert(C64::new(0.0, 0.0)) += m.c;
        }
        out
    }

    /// `∂_{z₂} f` as a monomial map (Wirtinger derivative, `z̄₂` held fixed).
    pub fn d_uxx(&self) -> Vec<Monomial> {
        self.monomials
            .iter()
            .filter(|m| m.alpha[2] > 0)
            .map(|m| {
                let mut alpha = m.alpha;
                alpha[2] -= 1;
                Monomial { alpha, beta: m.beta, c: m.c * m.alpha[2] as f64 }
            })
            .collect()
    }

    pub fn validate_hypothesis(&self) -> HypothesisReport {
        let mut rep = HypothesisReport { parity: true, real_second_derivative: true, reality: true, violations: vec![] };
        for m in &self.monomials {
            if (m.alpha[1] + m.beta[1]) % 2 != 0 {
                rep.parity = false;
                rep.violations.push(format!("odd power of u_x in {m:?}"));
            }
            if m.c.im != 0.0 {
                rep.reality = false;
                rep.violations.push(format!("non-real coefficient in {m:?}"));
            }
        }
        // ∂_{z₂}f is real iff it equals its conjugate polynomial, obtained by
        // conjugating coefficients and swapping α with β.
        let d = Nonlinearity { monomials: self.d_uxx() }.collect();
        let mut conj: BTreeMap<Exponents, C64> = BTreeMap::new();
        for ((a, b), c) in &d {
            *conj.entry((*b, *a)).or_insert(C64::new(0.0, 0.0)) += c.conj();
        }
        let keys: std::collections::BTreeSet<_> = d.keys().chain(conj.keys()).cloned().collect();
        for k in keys {
            let x = d.get(&k).copied().unwrap_or_default();
            let y = conj.get(&k).copied().unwrap_or_default();
            if (x - y).norm() > 1e-14 * (1.0 + x.norm()) {
                rep.real_second_derivative = false;
                rep.violations.push(format!("d f / d u_xx not real at exponents {k:?}"));
            }
        }
        rep
    }

    /// Evaluates `f` pointwise at `(z₀, z̄₀, z₁, z̄₁, z₂, z̄₂)` given as slot values.
    pub fn eval_point(&self, z: [C64; 3], zb: [C64; 3]) -> C64 {
        eval_monomials(&self.monomials, z, zb, false)
    }
}

pub(crate) fn eval_monomials(monos: &[Monomial], z: [C64; 3], zb: [C64; 3], conj_coeff: bool) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for m in monos {
        let mut t = if conj_coeff { m.c.conj() } else { m.c };
        for k in 0..3 {
            t *= z[k].powu(m.alpha[k]) * zb[k].powu(m.beta[k]);
        }
        acc += t;
    }
    acc
}

pub fn validate_hypothesis(f: &Nonlinearity) -> HypothesisReport {
    f.validate_hypothesis()
}

/// Grid size used to evaluate a degree-`q̄` nonlinearity without aliasing.
pub fn dealiased_grid(j_max: usize, degree: u32) -> usize {
    let factor = ((degree as usize) + 2) / 2;
    factor.max(1) * (2 * j_max + 1)
}

/// Evaluates `F(U) = (f(u⁺, u⁻), f̄(u⁻, u⁺))`: the first slot treats `u⁺` as
/// `u` and `u⁻` as `ū`; the second uses conjugated coefficients with the
/// roles swapped, so it equals `conj f` on realified inputs.
pub fn nonlinear_terms(u: &PairField, f: &Nonlinearity, dealias: bool) -> PairField {
    let jm = u.j_max();
    if f.is_zero() {
        return PairField::zeros(jm);
    }
    let n = if dealias { dealiased_grid(jm, f.degree_bound()) } else { 2 * jm + 1 };
    // Derivative slots no monomial touches are left at zero.
    let used: Vec<bool> = (0..3).map(|k| f.monomials.iter().any(|m| m.alpha[k] + m.beta[k] > 0)).collect();
    let slots = |w: &FourierField| -> [Vec<C64>; 3] {
        let slot = |k: usize| {
            if used[k] {
                w.derivative(k as u32).to_grid(n).expect("grid")
            } else {
                vec![C64::new(0.0, 0.0); n]
            }
        };
        [slot(0), slot(1), slot(2)]
    };
    let p = slots(&u.plus);
    let m = slots(&u.minus);
    let mut f1 = vec![C64::new(0.0, 0.0); n];
    let mut f2 = vec![C64::new(0.0, 0.0); n];
    for k in 0..n {
        let zp = [p[0][k], p[1][k], p[2][k]];
        let zm = [m[0][k], m[1][k], m[2][k]];
        f1[k] = eval_monomials(&f.monomials, zp, zm, false);
        f2[k] = eval_monomials(&f.monomials, zm, zp, true);
    }
    PairField {
        plus: forward_transform(&f1, jm).expect("grid"),
        minus: forward_transform(&f2, jm).expect("grid"),
    }
}

/// Nonlinear part `iE F(U)` of the vector field.
pub fn nonlinear_part(u: &PairField, f: &Nonlinearity, dealias: bool) -> PairField {
    let fu = nonlinear_terms(u, f, dealias);
    PairField { plus: fu.plus.scale(I), minus: fu.minus.scale(-I) }
}

/// The full vector field `iE(ΛU + F(U))`.
pub fn rhs_unchecked(u: &PairField, params: &PotentialParams, f: &Nonlinearity, dealias: bool) -> PairField {
    let nl = nonlinear_part(u, f, dealias);
    let lin = u.map_modes(|j| {
        let l = params.frequency(j as f64);
        (I * l, -I * l)
    });
    &lin + &nl
}

/// The vector field after checking the structural hypothesis on `f`.
pub fn rhs(u: &PairField, params: &PotentialParams, f: &Nonlinearity, dealias: bool) -> Result<PairField> {
    let rep = f.validate_hypothesis();
    if !rep.passed() {
        return Err(Error::Hypothesis(rep.violations.join("; ")));
    }
    Ok(rhs_unchecked(u, params, f, dealias))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_core::{apply_involution, sqrt_2pi};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_even_real(j: usize, amp: f64, seed: u64) -> PairField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half: Vec<C64> = (0..=j).map(|k| C64::new(rng.random_range(-amp..amp), rng.random_range(-amp..amp)) / (1.0 + k as f64).powi(2)).collect();
        PairField::realified(FourierField::from_fn(j, |k| half[k.unsigned_abs() as usize]))
    }

    #[test]
    fn potential_values() {
        let p = PotentialParams::new(vec![0.5]).unwrap();
        assert!((p.potential_coeff(1.0) - 1.0 / (4.0 * 2f64.sqrt())).abs() < 1e-15);
        let p2 = PotentialParams::new(vec![0.3, -0.1]).unwrap();
        let expect = -4.0 + 0.3 / 5f64.powf(1.5) - 0.1 / 5f64.powf(2.5);
        assert!((p2.frequency(2.0) - expect).abs() < 1e-14);
        assert_eq!(p2.frequency(0.0), 0.3 - 0.1);
        assert!((p.potential_coeff(1e4) * bracket(1e4).powi(3) - 0.5).abs() < 1e-6);
        assert!(PotentialParams::new(vec![0.7]).is_err());
    }

    #[test]
    fn hypothesis_examples() {
        assert!(Nonlinearity::cubic().validate_hypothesis().passed());
        assert!(Nonlinearity::cubic_quasilinear().validate_hypothesis().passed());
        let bad = Nonlinearity::new(vec![Monomial::new([1, 0, 1], [0, 0, 0], 1.0)]).unwrap();
        let r = bad.validate_hypothesis();
        assert!(r.parity && r.reality && !r.real_second_derivative);
        let odd = Nonlinearity::new(vec![Monomial::new([1, 1, 0], [0, 0, 0], 1.0)]).unwrap();
        assert!(!odd.validate_hypothesis().parity);
    }

    #[test]
    fn json_format() {
        let f: Nonlinearity = serde_json::from_str(r#"[{"alpha":[2,0,0],"beta":[1,0,0],"C":1.0}]"#).unwrap();
        assert_eq!(f, Nonlinearity::cubic());
        let g: Nonlinearity = serde_json::from_str(r#"[{"alpha":[2,0,0],"beta":[1,0,0],"C":[0.0,1.0]}]"#).unwrap();
        assert!(!g.validate_hypothesis().reality);
    }

    #[test]
    fn cubic_single_mode() {
        let eps = 0.3;
        let mut u = FourierField::zeros(4);
        u.set(1, C64::new(eps, 0.0));
        let up = PairField::realified(u);
        let nl = nonlinear_part(&up, &Nonlinearity::cubic(), true);
        let expect = I * eps * eps * eps / (2.0 * std::f64::consts::PI);
        assert!((nl.plus.get(1) - expect).norm() < 1e-14);
        let lin = rhs(&up, &PotentialParams::zero(1), &Nonlinearity::zero(), true).unwrap();
        assert!((lin.plus.get(1) - I * (-1.0) * eps).norm() < 1e-15);
        let _ = sqrt_2pi();
    }

    #[test]
    fn reversible_vector_field() {
        let params = PotentialParams::new(vec![0.2, -0.3]).unwrap();
        for f in [Nonlinearity::cubic(), Nonlinearity::cubic_quasilinear()] {
            let u = random_even_real(12, 0.2, 5);
            let su = apply_involution(&u);
            let lhs = apply_involution(&rhs(&u, &params, &f, true).unwrap());
            let rhs_s = rhs(&su, &params, &f, true).unwrap();
            assert!((&lhs + &rhs_s).max_abs() < 1e-12);
            let x = rhs(&u, &params, &f, true).unwrap();
            assert!(x.parity_defect() < 1e-12);
            assert!(x.realification_defect() < 1e-12);
        }
    }

    #[test]
    fn rejects_hypothesis_violation() {
        let bad = Nonlinearity::new(vec![Monomial::new([1, 0, 1], [0, 0, 0], 1.0)]).unwrap();
        let u = random_even_real(4, 0.1, 1);
        assert!(matches!(rhs(&u, &PotentialParams::zero(1), &bad, true), Err(Error::Hypothesis(_))));
    }
}
