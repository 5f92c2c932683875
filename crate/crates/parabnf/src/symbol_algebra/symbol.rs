use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cutoff::CutoffConfig;
use super::profile::Profile;
use crate::error::{Error, Result};
use crate::spectral_core::{FourierField, PairField, C64};

/// One separable piece: the x-mode `n` coefficient is `ĉ(n)·P(ξ + shift·n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolTerm {
    #[serde(rename = "coeff_modes")]
    pub coeff: FourierField,
    pub profile: Profile,
    #[serde(default, skip_serializing_if = "is_zero_f64")]
    pub shift: f64,
}

fn is_zero_f64(v: &f64) -> bool {
    *v == 0.0
}

/// A symbol `a(x, ξ)` stored as a sum of separable terms, optionally
/// regularized by admissible cut-offs acting on its x-modes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Symbol {
    pub terms: Vec<SymbolTerm>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cutoffs: Vec<CutoffConfig>,
    /// Homogeneity degree, when tracked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<u32>,
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Symbol {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `c(x)·P(ξ)`.
    pub fn term(coeff: FourierField, profile: Profile) -> Self {
        Self { terms: vec![SymbolTerm { coeff, profile, shift: 0.0 }], cutoffs: vec![], tag: None }
    }

    /// x-independent symbol `P(ξ)`.
    pub fn multiplier(profile: Profile) -> Self {
        Self::term(FourierField::constant(0, C64::new(1.0, 0.0)), profile)
    }

    pub fn with_tag(mut self, tag: u32) -> Self {
        self.tag = Some(tag);
        self
    }

    pub fn j_max(&self) -> usize {
        self.terms.iter().map(|t| t.coeff.j_max()).max().unwrap_or(0)
    }

    /// Largest declared profile order among nonzero terms.
    pub fn order(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| !t.coeff.is_zero() && !t.profile.is_zero())
            .map(|t| t.profile.order())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_x_independent(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.modes().all(|(n, c)| n == 0 || c == C64::new(0.0, 0.0)))
    }

    pub fn is_unshifted(&self) -> bool {
        self.terms.iter().all(|t| t.shift == 0.0)
    }

    /// `â(n, ξ)`, the x-Fourier coefficient at frequency `n`.
    pub fn mode_coeff(&self, n: i64, xi: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for t in &self.terms {
            let c = t.coeff.get(n);
            if c != C64::new(0.0, 0.0) {
                acc += c * t.profile.eval(xi + t.shift * n as f64);
            }
        }
        if acc != C64::new(0.0, 0.0) {
            for cf in &self.cutoffs {
                acc *= cf.chi(n as f64, xi);
            }
        }
        acc
    }

    /// `a(·, ξ)` as a field in x.
    pub fn x_field(&self, xi: f64) -> FourierField {
        FourierField::from_fn(self.j_max(), |n| self.mode_coeff(n, xi))
    }

    pub fn eval(&self, x: f64, xi: f64) -> C64 {
        self.x_field(xi).eval_at(x)
    }

    /// Values on the uniform `n`-point x-grid at fixed `ξ`.
    pub fn eval_grid(&self, xi: f64, n: usize) -> Vec<C64> {
        self.x_field(xi).to_grid(n).expect("grid resolves the symbol")
    }

    fn check_cutoffs(&self, other: &Self) {
        assert!(
            self.cutoffs == other.cutoffs || self.terms.is_empty() || other.terms.is_empty(),
            "adding symbols with different regularizations"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_cutoffs(other);
        let mut out = self.clone();
        if out.terms.is_empty() {
            out.cutoffs = other.cutoffs.clone();
        }
        out.terms.extend(other.terms.iter().cloned());
        if self.tag != other.tag {
            out.tag = None;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.terms.iter_mut().for_each(|t| t.coeff = t.coeff.scale(c));
        out
    }

    /// `conj a(x, ξ)`.
    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff = t.coeff.conj_fn();
            t.profile = Profile::Conj(Box::new(t.profile.clone()));
            t.shift = -t.shift;
        }
        out
    }

    /// `a^∨(x, ξ) = a(x, −ξ)`.
    pub fn reflect_xi(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.profile = Profile::Reflect(Box::new(t.profile.clone()));
            t.shift = -t.shift;
        }
        out
    }

    /// `a(−x, ξ)`.
    pub fn reflect_x(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff = t.coeff.reflect();
            t.shift = -t.shift;
        }
        out
    }

    /// `∂_x^k a`.
    pub fn dx(&self, k: u32) -> Self {
        let mut out = self.clone();
        out.terms.iter_mut().for_each(|t| t.coeff = t.coeff.derivative(k));
        out
    }

    /// `∂_ξ^l a`.
    pub fn dxi(&self, l: u32) -> Self {
        if l == 0 {
            return self.clone();
        }
        let mut out = self.clone();
        out.terms.iter_mut().for_each(|t| t.profile = Profile::Deriv(Box::new(t.profile.clone()), l));
        out
    }

    /// Standard-to-Weyl conversion `b̂(j, ξ) = â(j, ξ − j/2)`.
    pub fn std_to_weyl(&self) -> Self {
        let mut out = self.clone();
        out.terms.iter_mut().for_each(|t| t.shift -= 0.5);
        out
    }

    /// Rewrites shifted polynomial terms as unshifted ones:
    /// `ĉ(n)(i(ξ+sn))^k = Σ_m C(k,m) s^m (∂_x^m c)^(n) (iξ)^{k−m}`.
    pub fn expand_shifts(&self) -> Result<Self> {
        let mut out = Symbol { terms: vec![], cutoffs: self.cutoffs.clone(), tag: self.tag };
        for t in &self.terms {
            if t.shift == 0.0 {
                out.terms.push(t.clone());
                continue;
            }
            let (c, k) = t.profile.as_monomial().ok_or_else(|| {
                Error::Representation(format!("cannot remove the shift of a non-polynomial profile {:?}", t.profile))
            })?;
            for m in 0..=k {
                let w = c * binom(k, m) * t.shift.powi(m as i32);
                let coeff = t.coeff.derivative(m).scale(w);
                let profile = if k == m { Profile::one() } else { Profile::IxiPow(k - m) };
                out.terms.push(SymbolTerm { coeff, profile, shift: 0.0 });
            }
        }
        Ok(out.simplified())
    }

    /// Drops vanishing terms and merges terms sharing profile and shift.
    pub fn simplified(&self) -> Self {
        let mut out: Vec<SymbolTerm> = Vec::new();
        for t in &self.terms {
            if t.coeff.is_zero() || t.profile.is_zero() {
                continue;
            }
            let (profile, coeff) = match t.profile.as_monomial() {
                Some((c, k)) => {
                    let p = if k == 0 { Profile::one() } else { Profile::IxiPow(k) };
                    (p, t.coeff.scale(c))
                }
                None => (t.profile.clone(), t.coeff.clone()),
            };
            if let Some(slot) = out.iter_mut().find(|o| o.profile == profile && o.shift == t.shift) {
                slot.coeff = &slot.coeff + &coeff;
            } else {
                out.push(SymbolTerm { coeff, profile, shift: t.shift });
            }
        }
        Symbol { terms: out, cutoffs: self.cutoffs.clone(), tag: self.tag }
    }

    /// Adds the cut-off `χ(n, ξ)` on the x-modes.
    pub fn regularize(&self, cfg: &CutoffConfig) -> Self {
        let mut out = self.clone();
        out.cutoffs.push(*cfg);
        out
    }

    /// Pointwise product of two unshifted, unregularized symbols.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if !self.is_unshifted() || !other.is_unshifted() || !self.cutoffs.is_empty() || !other.cutoffs.is_empty() {
            return Err(Error::Capability("pointwise product needs unshifted, unregularized symbols".into()));
        }
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                terms.push(SymbolTerm {
                    coeff: FourierField::product(&[&a.coeff, &b.coeff]),
                    profile: Profile::Product(vec![a.profile.clone(), b.profile.clone()]),
                    shift: 0.0,
                });
            }
        }
        Ok(Symbol { terms, cutoffs: vec![], tag: None }.simplified())
    }

    /// Multiplies every coefficient by the function `g(x)`.
    pub fn times_field(&self, g: &FourierField) -> Result<Self> {
        self.product(&Symbol::term(g.clone(), Profile::one()))
    }

    /// Max of `|a(x, ξ)|` over the native grid at the given frequencies.
    pub fn max_abs_on(&self, xis: &[f64]) -> f64 {
        let n = 2 * self.j_max() + 1;
        xis.iter().flat_map(|xi| self.eval_grid(*xi, n)).map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max of `|a − b|` over the x-grid at the given frequencies.
    pub fn max_diff_on(&self, other: &Self, xis: &[f64]) -> f64 {
        let n = 2 * self.j_max().max(other.j_max()) + 1;
        let mut m: f64 = 0.0;
        for xi in xis {
            let a = self.eval_grid(*xi, n);
            let b = other.eval_grid(*xi, n);
            for (p, q) in a.iter().zip(&b) {
                m = m.max((p - q).norm());
            }
        }
        m
    }
}

/// Hex SHA-256 of the symbol's JSON form.
pub fn symbol_hash(a: &Symbol) -> String {
    let json = serde_json::to_vec(a).expect("symbols serialize");
    hex::encode(Sha256::digest(&json))
}

pub type Mat2 = [[C64; 2]; 2];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mat_max_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

pub fn mat_max_abs(a: &Mat2) -> f64 {
    a.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `S A S` with `S` the slot swap.
pub fn mat_swap(a: &Mat2) -> Mat2 {
    [[a[1][1], a[1][0]], [a[0][1], a[0][0]]]
}

/// `S A`: rows swapped.
fn swap_rows(a: &Mat2) -> Mat2 {
    [a[1], a[0]]
}

/// `A S`: columns swapped.
fn swap_cols(a: &Mat2) -> Mat2 {
    [[a[0][1], a[0][0]], [a[1][1], a[1][0]]]
}

/// Reality-structured matrix symbol
/// `[[a(x,ξ), b(x,ξ)], [conj b(x,−ξ), conj a(x,−ξ)]]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SymbolMatrix2 {
    pub a: Symbol,
    pub b: Symbol,
}

impl SymbolMatrix2 {
    pub fn new(a: Symbol, b: Symbol) -> Self {
        Self { a, b }
    }

    pub fn diagonal(a: Symbol) -> Self {
        Self { a, b: Symbol::zero() }
    }

    /// Entry `(r, c)` as a symbol; the second row is derived from the first.
    pub fn entry(&self, r: usize, c: usize) -> Symbol {
        match (r, c) {
            (0, 0) => self.a.clone(),
            (0, 1) => self.b.clone(),
            (1, 0) => self.b.conj().reflect_xi(),
            (1, 1) => self.a.conj().reflect_xi(),
            _ => panic!("2x2 index out of range"),
        }
    }

    pub fn eval(&self, x: f64, xi: f64) -> Mat2 {
        let a = self.a.eval(x, xi);
        let b = self.b.eval(x, xi);
        let a_r = self.a.eval(x, -xi).conj();
        let b_r = self.b.eval(x, -xi).conj();
        [[a, b], [b_r, a_r]]
    }

    /// Evaluation where every entry goes through its own symbol.
    pub fn eval_entries(&self, x: f64, xi: f64) -> Mat2 {
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.entry(r, c).eval(x, xi);
            }
        }
        m
    }
}

/// Sample points used by the structure predicates.
#[derive(Clone, Debug)]
pub struct SamplePlan {
    pub xs: Vec<f64>,
    pub xis: Vec<f64>,
}

impl Default for SamplePlan {
    fn default() -> Self {
        let xs = (0..13).map(|k| 0.37 + 2.0 * std::f64::consts::PI * k as f64 / 13.0).collect();
        let xis = vec![-9.5, -4.0, -1.5, -0.5, -0.2, 0.0, 0.3, 0.5, 1.0, 2.5, 7.0];
        Self { xs, xis }
    }
}

/// Tolerance used by the boolean predicates, relative to the sampled size.
pub const PREDICATE_TOL: f64 = 1e-10;

fn scaled(defect: f64, size: f64) -> f64 {
    defect / size.max(1.0)
}

/// `max |conj A(x,−ξ) − S A(x,ξ) S|`, relative to the sampled size.
pub fn reality_defect(m: &SymbolMatrix2, plan: &SamplePlan) -> f64 {
    let (mut d, mut size) = (0f64, 0f64);
    for &x in &plan.xs {
        for &xi in &plan.xis {
            let a = m.eval_entries(x, xi);
            let r = m.eval_entries(x, -xi);
            let lhs = [[r[0][0].conj(), r[0][1].conj()], [r[1][0].conj(), r[1][1].conj()]];
            d = d.max(mat_max_diff(&lhs, &mat_swap(&a)));
            size = size.max(mat_max_abs(&a));
        }
    }
    scaled(d, size)
}

/// `max |A(x,ξ) − A(−x,−ξ)|`, relative to the sampled size.
pub fn parity_defect(m: &SymbolMatrix2, plan: &SamplePlan) -> f64 {
    let (mut d, mut size) = (0f64, 0f64);
    for &x in &plan.xs {
        for &xi in &plan.xis {
            let a = m.eval(x, xi);
            d = d.max(mat_max_diff(&a, &m.eval(-x, -xi)));
            size = size.max(mat_max_abs(&a));
        }
    }
    scaled(d, size)
}

/// `max |S A(U) − A(SU) S|` for an autonomous builder, relative to size.
pub fn reversibility_defect(
    builder: impl Fn(&PairField) -> Result<SymbolMatrix2>,
    u: &PairField,
    plan: &SamplePlan,
) -> Result<f64> {
    let a = builder(u)?;
    let su = crate::spectral_core::apply_involution(u);
    let b = builder(&su)?;
    let (mut d, mut size) = (0f64, 0f64);
    for &x in &plan.xs {
        for &xi in &plan.xis {
            let ma = a.eval(x, xi);
            let mb = b.eval(x, xi);
            d = d.max(mat_max_diff(&swap_rows(&ma), &swap_cols(&mb)));
            size = size.max(mat_max_abs(&ma));
        }
    }
    Ok(scaled(d, size))
}

pub fn is_reality_preserving(m: &SymbolMatrix2) -> bool {
    reality_defect(m, &SamplePlan::default()) <= PREDICATE_TOL
}

pub fn is_parity_preserving(m: &SymbolMatrix2) -> bool {
    parity_defect(m, &SamplePlan::default()) <= PREDICATE_TOL
}

pub fn is_reversibility_preserving(
    builder: impl Fn(&PairField) -> Result<SymbolMatrix2>,
    u: &PairField,
) -> Result<bool> {
    Ok(reversibility_defect(builder, u, &SamplePlan::default())? <= PREDICATE_TOL)
}

/// Regularized symbol `a_χ` with `â_χ(n, ξ) = χ(n, ξ) â(n, ξ)`.
pub fn regularize(a: &Symbol, cfg: &CutoffConfig) -> Symbol {
    a.regularize(cfg)
}
