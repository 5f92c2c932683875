//! Quantizations of symbols as dense matrices on the truncated mode basis.
//!
//! Row `k`, column `j` of `Op_σ(a)` is `â(k−j, (1−σ)k + σj)/√(2π)`; `σ = 1`
//! is the standard quantization and `σ = 1/2` the Weyl quantization.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral_core::{bracket, sqrt_2pi, FourierField, C64};
use crate::symbol_algebra::{symbol_hash, CutoffConfig, Symbol};

/// Dense operator on fields truncated at `J`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    j_max: usize,
    mat: DMatrix<C64>,
    pub sigma: Option<f64>,
    pub delta: Option<f64>,
}

impl OperatorMatrix {
    pub fn from_matrix(j_max: usize, mat: DMatrix<C64>) -> Result<Self> {
        let n = 2 * j_max + 1;
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::Dimension(format!("matrix {}x{} does not act on J={j_max}", mat.nrows(), mat.ncols())));
        }
        Ok(Self { j_max, mat, sigma: None, delta: None })
    }

    pub fn identity(j_max: usize) -> Self {
        let n = 2 * j_max + 1;
        Self { j_max, mat: DMatrix::identity(n, n), sigma: None, delta: None }
    }

    pub fn zeros(j_max: usize) -> Self {
        let n = 2 * j_max + 1;
        Self { j_max, mat: DMatrix::zeros(n, n), sigma: None, delta: None }
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    /// Entry at modes `(k, j)`.
    pub fn entry(&self, k: i64, j: i64) -> C64 {
        let jm = self.j_max as i64;
        self.mat[((k + jm) as usize, (j + jm) as usize)]
    }

    pub fn apply(&self, u: &FourierField) -> FourierField {
        let v = u.resize(self.j_max);
        let x = nalgebra::DVector::from_column_slice(v.coeffs());
        let y = &self.mat * x;
        FourierField::from_coeffs(self.j_max, y.as_slice().to_vec()).expect("sizes agree")
    }

    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.j_max, other.j_max, "truncations differ");
        Self { j_max: self.j_max, mat: &self.mat * &other.mat, sigma: None, delta: None }
    }

    pub fn adjoint(&self) -> Self {
        Self { j_max: self.j_max, mat: self.mat.adjoint(), sigma: self.sigma, delta: self.delta }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { j_max: self.j_max, mat: &self.mat - &other.mat, sigma: None, delta: None }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { j_max: self.j_max, mat: &self.mat + &other.mat, sigma: None, delta: None }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { j_max: self.j_max, mat: &self.mat * c, sigma: self.sigma, delta: self.delta }
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.mat.iter().zip(other.mat.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `‖T† − T‖_max`.
    pub fn hermitian_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// `‖T e_k‖₂`, the image of mode `k`.
    pub fn column_norm(&self, k: i64) -> f64 {
        let c = (k + self.j_max as i64) as usize;
        self.mat.column(c).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value of `diag⟨k⟩^{s−m} · T · diag⟨j⟩^{−s}`.
    pub fn sobolev_operator_norm(&self, s: f64, m: f64) -> f64 {
        let jm = self.j_max as i64;
        let n = self.mat.nrows();
        let w = DMatrix::from_fn(n, n, |r, c| {
            let k = r as i64 - jm;
            let j = c as i64 - jm;
            self.mat[(r, c)] * bracket(k as f64).powf(s - m) * bracket(j as f64).powf(-s)
        });
        w.singular_values().iter().cloned().fold(0.0, f64::max)
    }

    /// Writes row-major little-endian interleaved complex doubles to
    /// `<stem>.bin` and a JSON header to `<stem>.json`.
    pub fn export(&self, stem: &Path, symbol: Option<&Symbol>) -> Result<()> {
        #[derive(Serialize)]
        struct Header {
            #[serde(rename = "J")]
            j: usize,
            sigma: Option<f64>,
            delta: Option<f64>,
            symbol_hash: Option<String>,
            layout: &'static str,
        }
        let n = self.mat.nrows();
        let mut bytes = Vec::with_capacity(n * n * 16);
        for r in 0..n {
            for c in 0..n {
                let v = self.mat[(r, c)];
                bytes.extend_from_slice(&v.re.to_le_bytes());
                bytes.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        std::fs::File::create(stem.with_extension("bin"))?.write_all(&bytes)?;
        let header = Header {
            j: self.j_max,
            sigma: self.sigma,
            delta: self.delta,
            symbol_hash: symbol.map(symbol_hash),
            layout: "row-major complex128 little-endian, rows and columns indexed by modes -J..J",
        };
        std::fs::write(stem.with_extension("json"), serde_json::to_vec_pretty(&header)?)?;
        Ok(())
    }
}

/// `Op_σ(a)` on modes `|j| ≤ J`.
pub fn quantize(a: &Symbol, sigma: f64, j_max: usize) -> OperatorMatrix {
    let jm = j_max as i64;
    let n = 2 * j_max + 1;
    let band = a.j_max() as i64;
    let scale = 1.0 / sqrt_2pi();
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|r| {
            let k = r as i64 - jm;
            let mut row = vec![C64::new(0.0, 0.0); n];
            let lo = (k - band).max(-jm);
            let hi = (k + band).min(jm);
            for j in lo..=hi {
                let xi = (1.0 - sigma) * k as f64 + sigma * j as f64;
                row[(j + jm) as usize] = a.mode_coeff(k - j, xi) * scale;
            }
            row
        })
        .collect();
    let flat: Vec<C64> = rows.into_iter().flatten().collect();
    OperatorMatrix { j_max, mat: DMatrix::from_row_slice(n, n, &flat), sigma: Some(sigma), delta: None }
}

/// Standard-to-Weyl symbol conversion `b̂(j, ξ) = â(j, ξ − j/2)`.
pub fn std_to_weyl(a: &Symbol) -> Symbol {
    a.std_to_weyl()
}

/// `Op^{BW}(a) = Op^W(a_χ)`.
pub fn bony_weyl(a: &Symbol, cfg: &CutoffConfig, j_max: usize) -> OperatorMatrix {
    let mut m = quantize(&a.regularize(cfg), 0.5, j_max);
    m.delta = Some(cfg.delta);
    m
}

/// Standard Bony quantization `Op^𝓑(a) = Op_1(a_χ)`.
pub fn bony_standard(a: &Symbol, cfg: &CutoffConfig, j_max: usize) -> OperatorMatrix {
    let mut m = quantize(&a.regularize(cfg), 1.0, j_max);
    m.delta = Some(cfg.delta);
    m
}

/// `‖Op^{BW}(a)† − Op^{BW}(ā)‖_max`.
pub fn adjoint_defect(a: &Symbol, cfg: &CutoffConfig, j_max: usize) -> f64 {
    let t = bony_weyl(a, cfg, j_max);
    let tb = bony_weyl(&a.conj(), cfg, j_max);
    t.adjoint().max_abs_diff(&tb)
}

/// Max over seeded random `v` of `‖conj(Op^{BW}(a)v) − Op^{BW}(conj a^∨)(conj v)‖`.
pub fn conjugation_defect(a: &Symbol, cfg: &CutoffConfig, j_max: usize, seed: u64) -> f64 {
    let t = bony_weyl(a, cfg, j_max);
    let tc = bony_weyl(&a.reflect_xi().conj(), cfg, j_max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..4 {
        let v = FourierField::from_fn(j_max, |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let lhs = t.apply(&v).conj_fn();
        let rhs = tc.apply(&v.conj_fn());
        worst = worst.max((&lhs - &rhs).l2_norm());
    }
    worst
}

/// `H^s → H^{s−m}` norm of `Op^{BW}(a)` on the truncated space.
pub fn action_norm(a: &Symbol, cfg: &CutoffConfig, s: f64, m: f64, j_max: usize) -> f64 {
    bony_weyl(a, cfg, j_max).sobolev_operator_norm(s, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_core::I;
    use crate::symbol_algebra::Profile;

    #[test]
    fn identity_and_multipliers() {
        let one = Symbol::multiplier(Profile::one());
        let d = Symbol::multiplier(Profile::IxiPow(1));
        for sigma in [0.0, 0.5, 1.0] {
            assert!(quantize(&one, sigma, 6).max_abs_diff(&OperatorMatrix::identity(6)) < 1e-15);
            let q = quantize(&d, sigma, 6);
            for k in -6..=6i64 {
                for j in -6..=6i64 {
                    let expect = if k == j { I * j as f64 } else { C64::new(0.0, 0.0) };
                    assert!((q.entry(k, j) - expect).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn multiplication_by_exponential_shifts_modes() {
        let e = Symbol::term(FourierField::exponential(1, 1, C64::new(1.0, 0.0)), Profile::one());
        let q = quantize(&e, 1.0, 5);
        for k in -5..=5i64 {
            for j in -5..=5i64 {
                let expect = if k == j + 1 { 1.0 } else { 0.0 };
                assert!((q.entry(k, j) - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn weyl_conversion_matches_standard() {
        let c = FourierField::from_fn(4, |n| C64::new(0.2 / (1.0 + n.abs() as f64), 0.1 * n as f64));
        let a = Symbol::term(c, Profile::Product(vec![Profile::IxiPow(1), Profile::Bracket(0.5)]));
        let std = quantize(&a, 1.0, 16);
        let weyl = quantize(&std_to_weyl(&a), 0.5, 16);
        assert!(std.max_abs_diff(&weyl) < 1e-13);
    }

    #[test]
    fn bony_weyl_support() {
        let cfg = CutoffConfig::default();
        let c = FourierField::from_function(2, |x| C64::new(x.cos(), 0.0));
        let a = Symbol::term(c, Profile::IxiPow(2));
        let q = bony_weyl(&a, &cfg, 24);
        for k in -24..=24i64 {
            for j in -24..=24i64 {
                let mid = (k + j) as f64 / 2.0;
                if ((k - j) as f64).abs() > cfg.delta * bracket(mid) {
                    assert_eq!(q.entry(k, j), C64::new(0.0, 0.0));
                }
            }
        }
        assert_eq!(bony_weyl(&Symbol::zero(), &cfg, 8).max_abs(), 0.0);
    }

    #[test]
    fn real_symbol_is_hermitian() {
        let cfg = CutoffConfig::default();
        let c = FourierField::from_function(3, |x| C64::new(1.0 + 0.3 * x.cos() + 0.1 * (2.0 * x).sin(), 0.0));
        let a = Symbol::term(c, Profile::IxiPow(2));
        assert!(bony_weyl(&a, &cfg, 32).hermitian_defect() < 1e-12);
        assert!(adjoint_defect(&a, &cfg, 32) < 1e-12);
        let d = Symbol::multiplier(Profile::IxiPow(1));
        assert!(adjoint_defect(&d, &cfg, 16) < 1e-14);
        assert!(conjugation_defect(&a.scale(C64::new(0.3, 0.7)), &cfg, 32, 4) < 1e-12);
    }

    #[test]
    fn operator_norms() {
        let cfg = CutoffConfig::default();
        let one = Symbol::multiplier(Profile::one());
        assert!((action_norm(&one, &cfg, 2.0, 0.0, 8) - 1.0).abs() < 1e-12);
        let lap = Symbol::multiplier(Profile::IxiPow(2));
        let n32 = action_norm(&lap, &cfg, 1.0, 2.0, 32);
        let n64 = action_norm(&lap, &cfg, 1.0, 2.0, 64);
        assert!(n64 / n32 <= 1.05);
    }

    #[test]
    fn export_writes_header() {
        let dir = tempfile::tempdir().unwrap();
        let a = Symbol::multiplier(Profile::IxiPow(1));
        let q = quantize(&a, 0.5, 2);
        q.export(&dir.path().join("op"), Some(&a)).unwrap();
        let bin = std::fs::read(dir.path().join("op.bin")).unwrap();
        assert_eq!(bin.len(), 25 * 16);
        let h: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("op.json")).unwrap()).unwrap();
        assert_eq!(h["J"], 2);
        assert_eq!(h["sigma"], 0.5);
        assert_eq!(h["symbol_hash"].as_str().unwrap().len(), 64);
    }
}
