//! Truncated Fourier fields on the circle.
//!
//! A field stores coefficients `û(j)` for `j ∈ {−J,…,J}` under the
//! normalization `u(x) = Σ û(j) e^{ijx} / √(2π)`, so that
//! `û(j) = (1/√(2π)) ∫ u(x) e^{−ijx} dx` and `‖u‖_{L²}² = Σ |û(j)|²`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// Default tolerance for structure defects.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// `√(2π)`.
pub fn sqrt_2pi() -> f64 {
    (2.0 * PI).sqrt()
}

/// Japanese bracket `⟨ξ⟩ = √(1+ξ²)`.
#[inline]
pub fn bracket(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

/// Uniform grid `x_k = 2πk/n` on `[0, 2π)`.
pub fn grid_points(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(n)
        } else {
            p.plan_fft_inverse(n)
        }
    })
}

/// Complex Fourier coefficients of a periodic function, truncated at `|j| ≤ J`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField {
    j_max: usize,
    coeffs: Vec<C64>,
}

impl FourierField {
    pub fn zeros(j_max: usize) -> Self {
        Self { j_max, coeffs: vec![C64::new(0.0, 0.0); 2 * j_max + 1] }
    }

    /// Builds a field from `2J+1` coefficients ordered from mode `−J` to `J`.
    pub fn from_coeffs(j_max: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != 2 * j_max + 1 {
            return Err(Error::Dimension(format!(
                "expected {} coefficients for J={}, got {}",
                2 * j_max + 1,
                j_max,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Structure("non-finite coefficient".into()));
        }
        Ok(Self { j_max, coeffs })
    }

    pub fn from_fn(j_max: usize, f: impl FnMut(i64) -> C64) -> Self {
        let jm = j_max as i64;
        Self { j_max, coeffs: (-jm..=jm).map(f).collect() }
    }

    /// Interpolates `f` on the `2J+1` point grid.
    pub fn from_function(j_max: usize, f: impl Fn(f64) -> C64) -> Self {
        let n = 2 * j_max + 1;
        let samples: Vec<C64> = grid_points(n).into_iter().map(f).collect();
        forward_transform(&samples, j_max).expect("grid size matches by construction")
    }

    /// The field `c·e^{inx}`.
    pub fn exponential(j_max: usize, n: i64, c: C64) -> Self {
        let mut u = Self::zeros(j_max);
        u.set(n, c * sqrt_2pi());
        u
    }

    /// The constant function `c`.
    pub fn constant(j_max: usize, c: C64) -> Self {
        Self::exponential(j_max, 0, c)
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    /// Coefficient of mode `j`; zero outside the stored range.
    #[inline]
    pub fn get(&self, j: i64) -> C64 {
        let jm = self.j_max as i64;
        if j < -jm || j > jm {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(j + jm) as usize]
        }
    }

    /// Sets the coefficient of mode `j`. Panics when `|j| > J`.
    pub fn set(&mut self, j: i64, v: C64) {
        let jm = self.j_max as i64;
        assert!(j.abs() <= jm, "mode {j} outside truncation {jm}");
        self.coeffs[(j + jm) as usize] = v;
    }

    /// Iterates `(j, û(j))` from `−J` to `J`.
    pub fn modes(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let jm = self.j_max as i64;
        self.coeffs.iter().enumerate().map(move |(k, c)| (k as i64 - jm, *c))
    }

    /// Samples on the uniform `n`-point grid.
    pub fn to_grid(&self, n: usize) -> Result<Vec<C64>> {
        inverse_transform(self, n)
    }

    /// Samples on the native `2J+1` grid.
    pub fn samples(&self) -> Vec<C64> {
        self.to_grid(2 * self.j_max + 1).expect("native grid")
    }

    /// Evaluates the trigonometric polynomial at an arbitrary point.
    pub fn eval_at(&self, x: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (j, c) in self.modes() {
            if c != C64::new(0.0, 0.0) {
                acc += c * C64::from_polar(1.0, j as f64 * x);
            }
        }
        acc / sqrt_2pi()
    }

    /// Changes the truncation, dropping or zero-filling modes.
    pub fn resize(&self, j_new: usize) -> Self {
        Self::from_fn(j_new, |j| self.get(j))
    }

    /// Spectral derivative `∂_x^k`.
    pub fn derivative(&self, k: u32) -> Self {
        Self::from_fn(self.j_max, |j| self.get(j) * (I * j as f64).powu(k))
    }

    /// Periodic primitive: multiplier `1/(ij)` on nonzero modes, zero on the mean.
    pub fn antiderivative(&self) -> Self {
        Self::from_fn(self.j_max, |j| if j == 0 { C64::new(0.0, 0.0) } else { self.get(j) / (I * j as f64) })
    }

    /// Spatial mean `(1/2π)∫u`.
    pub fn mean(&self) -> C64 {
        self.get(0) / sqrt_2pi()
    }

    /// The field minus its mean.
    pub fn zero_mean(&self) -> Self {
        let mut out = self.clone();
        out.set(0, C64::new(0.0, 0.0));
        out
    }

    /// Coefficients of the conjugate function `x ↦ conj(u(x))`.
    pub fn conj_fn(&self) -> Self {
        Self::from_fn(self.j_max, |j| self.get(-j).conj())
    }

    /// Coefficients of `x ↦ u(−x)`.
    pub fn reflect(&self) -> Self {
        Self::from_fn(self.j_max, |j| self.get(-j))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { j_max: self.j_max, coeffs: self.coeffs.iter().map(|v| v * c).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Max coefficient difference, comparing over the union of both ranges.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let jm = self.j_max.max(other.j_max) as i64;
        (-jm..=jm).map(|j| (self.get(j) - other.get(j)).norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// `L²` norm, equal to `‖u‖_{H^0}`.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖u‖_{H^s} = (Σ |û(j)|² ⟨j⟩^{2s})^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.modes().map(|(j, c)| c.norm_sqr() * bracket(j as f64).powf(2.0 * s)).sum::<f64>().sqrt()
    }

    /// Max over modes of `|û(j) − û(−j)|`.
    pub fn parity_defect(&self) -> f64 {
        self.modes().map(|(j, c)| (c - self.get(-j)).norm()).fold(0.0, f64::max)
    }

    /// Even part `(u(x)+u(−x))/2`.
    pub fn even_projection(&self) -> Self {
        Self::from_fn(self.j_max, |j| 0.5 * (self.get(j) + self.get(-j)))
    }

    /// Max over modes of `|û(j) − conj û(−j)|`; zero iff `u` is real valued.
    pub fn reality_defect(&self) -> f64 {
        self.modes().map(|(j, c)| (c - self.get(-j).conj()).norm()).fold(0.0, f64::max)
    }

    /// Exact product of band-limited fields, keeping all modes up to `ΣJ`.
    pub fn product(fields: &[&FourierField]) -> Self {
        assert!(!fields.is_empty(), "empty product");
        let j_out: usize = fields.iter().map(|f| f.j_max).sum();
        Self::product_truncated(fields, j_out)
    }

    /// Product evaluated without aliasing, truncated at `j_out`.
    pub fn product_truncated(fields: &[&FourierField], j_out: usize) -> Self {
        assert!(!fields.is_empty(), "empty product");
        let j_full: usize = fields.iter().map(|f| f.j_max).sum();
        // Modes above j_full + j_out never alias back into |j| ≤ j_out.
        let j_big = fields.iter().map(|f| f.j_max).max().unwrap_or(0);
        let n = (j_full + j_out + 1).max(2 * j_big + 1).max(2 * j_out + 1);
        let mut acc = vec![C64::new(1.0, 0.0); n];
        for f in fields {
            let g = f.to_grid(n).expect("grid large enough");
            for (a, b) in acc.iter_mut().zip(g) {
                *a *= b;
            }
        }
        forward_transform(&acc, j_out).expect("grid large enough")
    }

    /// Applies a pointwise map on the native grid and interpolates back.
    pub fn map_pointwise(&self, f: impl Fn(C64) -> C64) -> Self {
        let s: Vec<C64> = self.samples().into_iter().map(f).collect();
        forward_transform(&s, self.j_max).expect("native grid")
    }

    /// Pointwise binary map on the native grid of the larger field.
    pub fn zip_pointwise(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        let j = self.j_max.max(other.j_max);
        let n = 2 * j + 1;
        let a = self.to_grid(n).expect("grid");
        let b = other.to_grid(n).expect("grid");
        let s: Vec<C64> = a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect();
        forward_transform(&s, j).expect("native grid")
    }
}

impl Add for &FourierField {
    type Output = FourierField;
    fn add(self, rhs: &FourierField) -> FourierField {
        let j = self.j_max.max(rhs.j_max);
        FourierField::from_fn(j, |k| self.get(k) + rhs.get(k))
    }
}

impl Sub for &FourierField {
    type Output = FourierField;
    fn sub(self, rhs: &FourierField) -> FourierField {
        let j = self.j_max.max(rhs.j_max);
        FourierField::from_fn(j, |k| self.get(k) - rhs.get(k))
    }
}

impl Neg for &FourierField {
    type Output = FourierField;
    fn neg(self) -> FourierField {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul<C64> for &FourierField {
    type Output = FourierField;
    fn mul(self, rhs: C64) -> FourierField {
        self.scale(rhs)
    }
}

impl Mul<f64> for &FourierField {
    type Output = FourierField;
    fn mul(self, rhs: f64) -> FourierField {
        self.scale(C64::new(rhs, 0.0))
    }
}

#[derive(Serialize, Deserialize)]
struct FieldRepr {
    #[serde(rename = "J")]
    j: usize,
    coeffs: Vec<[f64; 2]>,
}

impl Serialize for FourierField {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldRepr { j: self.j_max, coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourierField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = FieldRepr::deserialize(d)?;
        let coeffs = r.coeffs.iter().map(|p| C64::new(p[0], p[1])).collect();
        FourierField::from_coeffs(r.j, coeffs).map_err(serde::de::Error::custom)
    }
}

/// Coefficients `|j| ≤ J` from samples on a uniform grid of size `≥ 2J+1`.
pub fn forward_transform(samples: &[C64], j_max: usize) -> Result<FourierField> {
    let n = samples.len();
    if n < 2 * j_max + 1 {
        return Err(Error::Dimension(format!("grid of {n} points cannot resolve J={j_max}")));
    }
    let mut buf = samples.to_vec();
    plan(n, true).process(&mut buf);
    let scale = sqrt_2pi() / n as f64;
    let jm = j_max as i64;
    let coeffs = (-jm..=jm).map(|j| buf[j.rem_euclid(n as i64) as usize] * scale).collect();
    Ok(FourierField { j_max, coeffs })
}

/// Samples of `u` on the uniform `n`-point grid, `n ≥ 2J+1`.
pub fn inverse_transform(u: &FourierField, n: usize) -> Result<Vec<C64>> {
    if n < 2 * u.j_max + 1 {
        return Err(Error::Dimension(format!("grid of {n} points cannot carry J={}", u.j_max)));
    }
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for (j, c) in u.modes() {
        buf[j.rem_euclid(n as i64) as usize] += c;
    }
    plan(n, false).process(&mut buf);
    let scale = 1.0 / sqrt_2pi();
    buf.iter_mut().for_each(|v| *v *= scale);
    Ok(buf)
}

/// `Π_n u`: keeps modes `±n` (only the mean for `n = 0`).
pub fn project(u: &FourierField, n: usize) -> Result<FourierField> {
    if n > u.j_max {
        return Err(Error::Range(format!("projector index {n} exceeds J={}", u.j_max)));
    }
    let n = n as i64;
    Ok(FourierField::from_fn(u.j_max, |j| if j.abs() == n { u.get(j) } else { C64::new(0.0, 0.0) }))
}

/// Sign selector for the projectors `Π_n^±`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// The pair `U = (u⁺, u⁻)`; realified when `u⁻ = conj(u⁺)` as functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairField {
    pub plus: FourierField,
    pub minus: FourierField,
}

impl PairField {
    pub fn new(plus: FourierField, minus: FourierField) -> Result<Self> {
        if plus.j_max() != minus.j_max() {
            return Err(Error::Dimension(format!(
                "slot truncations differ: {} vs {}",
                plus.j_max(),
                minus.j_max()
            )));
        }
        Ok(Self { plus, minus })
    }

    /// `(u, conj u)`.
    pub fn realified(u: FourierField) -> Self {
        let minus = u.conj_fn();
        Self { plus: u, minus }
    }

    pub fn zeros(j_max: usize) -> Self {
        Self { plus: FourierField::zeros(j_max), minus: FourierField::zeros(j_max) }
    }

    pub fn j_max(&self) -> usize {
        self.plus.j_max()
    }

    /// `max_j |û⁻(j) − conj û⁺(−j)|`.
    pub fn realification_defect(&self) -> f64 {
        self.minus.max_abs_diff(&self.plus.conj_fn())
    }

    /// Projects onto the realified subspace.
    pub fn resymmetrize(&self) -> Self {
        let plus = (&self.plus + &self.minus.conj_fn()).scale(C64::new(0.5, 0.0));
        Self::realified(plus)
    }

    pub fn parity_defect(&self) -> f64 {
        self.plus.parity_defect().max(self.minus.parity_defect())
    }

    pub fn even_projection(&self) -> Self {
        Self { plus: self.plus.even_projection(), minus: self.minus.even_projection() }
    }

    /// `H^s` norm of the `u⁺` slot.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.plus.sobolev_norm(s)
    }

    /// Componentwise conjugate functions.
    pub fn conj_fn(&self) -> Self {
        Self { plus: self.plus.conj_fn(), minus: self.minus.conj_fn() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { plus: self.plus.scale(c), minus: self.minus.scale(c) }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.plus.max_abs_diff(&other.plus).max(self.minus.max_abs_diff(&other.minus))
    }

    pub fn max_abs(&self) -> f64 {
        self.plus.max_abs().max(self.minus.max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.plus.coeffs().iter().chain(self.minus.coeffs()).all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: C64, other: &Self) -> Self {
        Self { plus: &self.plus + &other.plus.scale(c), minus: &self.minus + &other.minus.scale(c) }
    }

    /// Applies a mode-wise multiplier `(plus factor, minus factor)`.
    pub fn map_modes(&self, f: impl Fn(i64) -> (C64, C64)) -> Self {
        let jm = self.j_max();
        let plus = FourierField::from_fn(jm, |j| self.plus.get(j) * f(j).0);
        let minus = FourierField::from_fn(jm, |j| self.minus.get(j) * f(j).1);
        Self { plus, minus }
    }
}

impl Add for &PairField {
    type Output = PairField;
    fn add(self, rhs: &PairField) -> PairField {
        PairField { plus: &self.plus + &rhs.plus, minus: &self.minus + &rhs.minus }
    }
}

impl Sub for &PairField {
    type Output = PairField;
    fn sub(self, rhs: &PairField) -> PairField {
        PairField { plus: &self.plus - &rhs.plus, minus: &self.minus - &rhs.minus }
    }
}

/// `Π_n^± U`: the sign picks which slot survives.
pub fn project_signed(u: &PairField, n: usize, sign: Sign) -> Result<PairField> {
    let d = u.parity_defect();
    if d > STRUCTURE_TOL {
        return Err(Error::Structure(format!("signed projectors need an even field, parity defect {d:e}")));
    }
    let zero = FourierField::zeros(u.j_max());
    Ok(match sign {
        Sign::Plus => PairField { plus: project(&u.plus, n)?, minus: zero },
        Sign::Minus => PairField { plus: zero, minus: project(&u.minus, n)? },
    })
}

/// The involution `S(u⁺, u⁻) = (u⁻, u⁺)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct InvolutionS;

impl InvolutionS {
    pub fn apply(&self, u: &PairField) -> PairField {
        apply_involution(u)
    }
}

pub fn apply_involution(u: &PairField) -> PairField {
    PairField { plus: u.minus.clone(), minus: u.plus.clone() }
}

pub fn parity_defect(u: &FourierField) -> f64 {
    u.parity_defect()
}

pub fn even_projection(u: &FourierField) -> FourierField {
    u.even_projection()
}

pub fn sobolev_norm(u: &FourierField, s: f64) -> f64 {
    u.sobolev_norm(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(j: usize, seed: u64) -> FourierField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FourierField::from_fn(j, |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn constant_and_cosine() {
        let one = FourierField::from_function(4, |_| C64::new(1.0, 0.0));
        assert!((one.get(0) - sqrt_2pi()).norm() < 1e-14);
        assert!(one.zero_mean().max_abs() < 1e-14);
        let c = FourierField::from_function(4, |x| C64::new(x.cos(), 0.0));
        assert!((c.get(1).re - sqrt_2pi() / 2.0).abs() < 1e-14);
        assert!((c.get(-1).re - sqrt_2pi() / 2.0).abs() < 1e-14);
        assert!((one.sobolev_norm(3.0) - sqrt_2pi()).abs() < 1e-13);
    }

    #[test]
    fn round_trip_oversampled() {
        let u = random_field(50, 1);
        let g = u.to_grid(257).unwrap();
        let back = forward_transform(&g, 50).unwrap();
        assert!(back.max_abs_diff(&u) < 1e-12 * u.max_abs());
    }

    #[test]
    fn undersized_grid_is_rejected() {
        let u = random_field(8, 2);
        assert!(matches!(u.to_grid(16), Err(Error::Dimension(_))));
        assert!(matches!(forward_transform(&[C64::new(0.0, 0.0); 10], 5), Err(Error::Dimension(_))));
    }

    #[test]
    fn single_mode_norm() {
        let mut u = FourierField::zeros(3);
        u.set(1, C64::new(1.0, 0.0));
        assert!((u.sobolev_norm(1.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn projectors_on_cosine() {
        let c = FourierField::from_function(4, |x| C64::new(x.cos(), 0.0));
        assert!(project(&c, 1).unwrap().max_abs_diff(&c) < 1e-15);
        assert!(project(&c, 2).unwrap().max_abs() < 1e-15);
        assert!(matches!(project(&c, 5), Err(Error::Range(_))));
    }

    #[test]
    fn signed_projectors() {
        let c = FourierField::from_function(4, |x| C64::new(x.cos(), 0.0));
        let u = PairField::new(c.clone(), c.clone()).unwrap();
        let p = project_signed(&u, 1, Sign::Plus).unwrap();
        assert!(p.plus.max_abs_diff(&c) < 1e-15 && p.minus.is_zero());
        let m = project_signed(&u, 1, Sign::Minus).unwrap();
        assert!(m.minus.max_abs_diff(&c) < 1e-15 && m.plus.is_zero());
        let s = apply_involution(&p);
        assert!(s.plus.is_zero() && !s.minus.is_zero());
        let odd = FourierField::from_function(4, |x| C64::new(x.sin(), 0.0));
        let bad = PairField::realified(odd);
        assert!(matches!(project_signed(&bad, 1, Sign::Plus), Err(Error::Structure(_))));
    }

    #[test]
    fn sine_parity() {
        let s = FourierField::from_function(5, |x| C64::new(x.sin(), 0.0));
        assert!((s.parity_defect() - 2.0 * s.get(1).norm()).abs() < 1e-14);
        assert!(s.even_projection().max_abs() < 1e-15);
    }

    #[test]
    fn product_matches_pointwise() {
        let a = random_field(6, 3);
        let b = random_field(9, 4);
        let p = FourierField::product(&[&a, &b]);
        assert_eq!(p.j_max(), 15);
        for x in [0.1, 1.7, 4.0] {
            assert!((p.eval_at(x) - a.eval_at(x) * b.eval_at(x)).norm() < 1e-12);
        }
    }

    #[test]
    fn serde_round_trip() {
        let a = random_field(3, 9);
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"J\":3"));
        let b: FourierField = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }
}
