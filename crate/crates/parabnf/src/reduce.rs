//! Reduction steps to constant coefficients: diagonalization of the principal
//! part, lower-order correctors, straightening of the torus, order-one and
//! order-zero homological equations, and the paracomposition flow.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Nonlinearity;
use crate::paralin::{para_apply, paralinearize};
use crate::spectral_core::{forward_transform, grid_points, FourierField, PairField, C64, I};
use crate::symbol_algebra::{mat_max_diff, mat_mul, CutoffConfig, Mat2, Profile, Symbol, SymbolTerm};

const NEWTON_ITERS: usize = 30;
const NEWTON_TOL: f64 = 1e-13;

fn real(v: f64) -> C64 {
    C64::new(v, 0.0)
}

/// Eigen-decomposition of `E(1 + A₂)` on the x-grid.
#[derive(Clone, Debug)]
pub struct DiagonalizationResult {
    pub xs: Vec<f64>,
    pub lambda_plus: Vec<f64>,
    pub m_field: Vec<Mat2>,
    pub m_inv_field: Vec<Mat2>,
    /// `E(1 + A₂)` at the grid points.
    pub principal: Vec<Mat2>,
}

impl DiagonalizationResult {
    /// `max |M·M⁻¹ − 1|`.
    pub fn inverse_defect(&self) -> f64 {
        let id = [[real(1.0), real(0.0)], [real(0.0), real(1.0)]];
        self.m_field.iter().zip(&self.m_inv_field).map(|(m, mi)| mat_max_diff(&mat_mul(m, mi), &id)).fold(0.0, f64::max)
    }

    /// `max |M⁻¹ E(1+A₂) M − E diag(λ⁺, λ⁺)|`.
    pub fn conjugation_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for k in 0..self.xs.len() {
            let lhs = mat_mul(&mat_mul(&self.m_inv_field[k], &self.principal[k]), &self.m_field[k]);
            let l = self.lambda_plus[k];
            let rhs = [[real(l), real(0.0)], [real(0.0), real(-l)]];
            d = d.max(mat_max_diff(&lhs, &rhs));
        }
        d
    }

    /// `λ⁺ − 1` as a field, the new principal coefficient.
    pub fn a2_new(&self) -> Result<FourierField> {
        let s: Vec<C64> = self.lambda_plus.iter().map(|l| real(l - 1.0)).collect();
        forward_transform(&s, (s.len() - 1) / 2)
    }
}

/// Diagonalizes `E(1 + [[a₂, b₂], [b̄₂, a₂]])` pointwise.
pub fn diagonalize_principal(a2: &FourierField, b2: &FourierField) -> Result<DiagonalizationResult> {
    let j = a2.j_max().max(b2.j_max());
    let n = 2 * j + 1;
    let av = a2.to_grid(n)?;
    let bv = b2.to_grid(n)?;
    let xs = grid_points(n);
    let mut out = DiagonalizationResult {
        xs: xs.clone(),
        lambda_plus: Vec::with_capacity(n),
        m_field: Vec::with_capacity(n),
        m_inv_field: Vec::with_capacity(n),
        principal: Vec::with_capacity(n),
    };
    for k in 0..n {
        let a = av[k].re;
        let b = bv[k];
        let rad = (1.0 + a).powi(2) - b.norm_sqr();
        if rad <= 0.0 || 1.0 + a <= 0.0 {
            return Err(Error::SmallData(format!("principal part degenerate at x={:.4}: radicand {rad:e}", xs[k])));
        }
        let l = rad.sqrt();
        let c = 1.0 + a + l;
        let m = [[real(c / 2.0), -b / 2.0], [-b.conj() / 2.0, real(c / 2.0)]];
        let inv = 1.0 / (l * c);
        let mi = [[real(c * inv), b * inv], [b.conj() * inv, real(c * inv)]];
        out.lambda_plus.push(l);
        out.m_field.push(m);
        out.m_inv_field.push(mi);
        out.principal.push([[real(1.0 + a), b], [-b.conj(), real(-(1.0 + a))]]);
    }
    Ok(out)
}

/// `d₁ = b₁/(2(1+a₂))·γ(ξ)`.
pub fn corrector_d1(b1: &FourierField, a2: &FourierField) -> Result<Symbol> {
    if b1.is_zero() {
        return Ok(Symbol::zero());
    }
    let j = b1.j_max().max(a2.j_max());
    let n = 2 * j + 1;
    let bv = b1.to_grid(n)?;
    let av = a2.to_grid(n)?;
    let mut q = Vec::with_capacity(n);
    for k in 0..n {
        let den = 2.0 * (1.0 + av[k]);
        if den.re <= 0.0 {
            return Err(Error::SmallData("1 + a₂ is not positive".into()));
        }
        q.push(bv[k] / den);
    }
    Ok(Symbol::term(forward_transform(&q, j)?, Profile::Gamma))
}

/// Change of variables that makes the principal coefficient constant.
#[derive(Clone, Debug, Serialize)]
pub struct StraighteningResult {
    pub a2_const: f64,
    pub gamma_field: FourierField,
    pub beta_field: FourierField,
    /// Discrete mean of `√((1+a₂_const)/(1+a₂)) − 1`.
    pub integrand_mean: f64,
    /// Newton iterations used in the worst grid point.
    pub newton_iters: usize,
}

/// Straightening of `(1+a₂(y))∂_y²`: `a₂_const` and `γ` with
/// `(1+a₂)(1+γ')² = 1 + a₂_const`, and `β` inverting `x = y + γ(y)`.
pub fn straighten(a2: &FourierField) -> Result<StraighteningResult> {
    let jw = (4 * a2.j_max()).max(32);
    let n = 2 * jw + 1;
    let av = a2.to_grid(n)?;
    if av.iter().any(|v| 1.0 + v.re <= 0.0) {
        return Err(Error::SmallData("1 + a₂ is not positive".into()));
    }
    // Trapezoid rule; exact for the interpolant's mean.
    let integral: f64 = av.iter().map(|v| 1.0 / (1.0 + v.re).sqrt()).sum::<f64>() * 2.0 * std::f64::consts::PI / n as f64;
    let a2c = (2.0 * std::f64::consts::PI / integral).powi(2) - 1.0;
    let g: Vec<C64> = av.iter().map(|v| real(((1.0 + a2c) / (1.0 + v.re)).sqrt() - 1.0)).collect();
    let integrand_mean = g.iter().map(|v| v.re).sum::<f64>() / n as f64;
    let gfield = forward_transform(&g, jw)?;
    let gamma = gfield.zero_mean().antiderivative();
    let gp = gamma.derivative(1);
    let xs = grid_points(n);
    if gp.to_grid(n)?.iter().any(|v| 1.0 + v.re <= 0.0) {
        return Err(Error::SmallData("y ↦ y + γ(y) is not invertible".into()));
    }
    let mut worst = 0;
    let mut beta = Vec::with_capacity(n);
    for &x in &xs {
        let mut y = x - gamma.eval_at(x).re;
        let mut it = 0;
        while it < NEWTON_ITERS {
            it += 1;
            let r = y + gamma.eval_at(y).re - x;
            let step = r / (1.0 + gp.eval_at(y).re);
            y -= step;
            if step.abs() < NEWTON_TOL {
                break;
            }
        }
        worst = worst.max(it);
        beta.push(real(y - x));
    }
    Ok(StraighteningResult {
        a2_const: a2c,
        gamma_field: gamma,
        beta_field: forward_transform(&beta, jw)?,
        integrand_mean,
        newton_iters: worst,
    })
}

impl StraighteningResult {
    /// `max |(1+a₂)(1+γ')² − (1+a₂_const)|` on the working grid.
    pub fn identity_defect(&self, a2: &FourierField) -> Result<f64> {
        let n = 2 * self.gamma_field.j_max() + 1;
        let av = a2.to_grid(n)?;
        let gp = self.gamma_field.derivative(1).to_grid(n)?;
        Ok(av
            .iter()
            .zip(&gp)
            .map(|(a, g)| ((1.0 + a.re) * (1.0 + g.re).powi(2) - (1.0 + self.a2_const)).abs())
            .fold(0.0, f64::max))
    }

    /// `max |x + β(x) + γ(x + β(x)) − x|` on the working grid.
    pub fn inversion_defect(&self) -> f64 {
        let n = 2 * self.beta_field.j_max() + 1;
        grid_points(n)
            .into_iter()
            .map(|x| {
                let y = x + self.beta_field.eval_at(x).re;
                (y + self.gamma_field.eval_at(y).re - x).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Spread of `(1+a₂(y))(1+γ'(y))² − 1` evaluated at `y = x + β(x)`.
    pub fn constancy_defect(&self, a2: &FourierField) -> f64 {
        let gp = self.gamma_field.derivative(1);
        let n = 2 * self.beta_field.j_max() + 1;
        let vals: Vec<f64> = grid_points(n)
            .into_iter()
            .map(|x| {
                let y = x + self.beta_field.eval_at(x).re;
                (1.0 + a2.eval_at(y).re) * (1.0 + gp.eval_at(y).re).powi(2) - 1.0
            })
            .collect();
        vals.iter().map(|v| (v - self.a2_const).abs()).fold(0.0, f64::max)
    }
}

/// `s = −∂_x^{−1}(a₁/(2(1+a₂_const)))`.
pub fn eliminate_order_one(a1: &FourierField, a2_const: f64) -> Result<FourierField> {
    if 1.0 + a2_const <= 0.0 {
        return Err(Error::SmallData("1 + a₂ is not positive".into()));
    }
    let mean = a1.mean().norm();
    if mean > 1e-12 * a1.max_abs().max(1.0) {
        return Err(Error::Precondition(format!("a₁ has mean {mean:e}")));
    }
    Ok(a1.antiderivative().scale(real(-1.0 / (2.0 * (1.0 + a2_const)))))
}

/// `max |2 s_x (1+a₂_const) + a₁|` on the native grid.
pub fn order_one_residual(s: &FourierField, a1: &FourierField, a2_const: f64) -> f64 {
    let r = &s.derivative(1).scale(real(2.0 * (1.0 + a2_const))) + &a1.zero_mean();
    r.samples().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `n₀ = ∂_x^{−1}(⟨a₀⟩ − a₀)/(2(1+a₂_const))·γ(ξ)`.
pub fn constant_coeff_step(a0: &Symbol, a2_const: f64) -> Result<Symbol> {
    if 1.0 + a2_const <= 0.0 {
        return Err(Error::SmallData("1 + a₂ is not positive".into()));
    }
    if !a0.is_unshifted() || !a0.cutoffs.is_empty() {
        return Err(Error::Capability("order-zero step needs unshifted symbols without cut-off".into()));
    }
    let w = real(-1.0 / (2.0 * (1.0 + a2_const)));
    let terms = a0
        .terms
        .iter()
        .map(|t| SymbolTerm {
            coeff: t.coeff.antiderivative().scale(w),
            profile: Profile::Product(vec![t.profile.clone(), Profile::Gamma]),
            shift: 0.0,
        })
        .collect();
    Ok(Symbol { terms, cutoffs: vec![], tag: a0.tag }.simplified())
}

/// `max |2∂_x n₀ (1+a₂_const)(iξ) + a₀ − ⟨a₀⟩|` on the grid, for the given `ξ`.
pub fn order_zero_residual(n0: &Symbol, a0: &Symbol, a2_const: f64, xis: &[f64]) -> f64 {
    let j = n0.j_max().max(a0.j_max());
    let n = 2 * j + 1;
    let mut worst: f64 = 0.0;
    for &xi in xis {
        let dn = n0.dx(1).x_field(xi).resize(j);
        let a = a0.x_field(xi).resize(j);
        let mean = a.mean();
        let lhs = dn.scale(I * xi * 2.0 * (1.0 + a2_const));
        let r = &lhs + &a;
        for v in r.to_grid(n).expect("grid") {
            worst = worst.max((v - mean).norm());
        }
    }
    worst
}

/// `Ω(1)u` for `∂_τΩ = Op^{BW}(b(τ)·iξ)Ω`, `b = β/(1+τβ_x)`, by RK4 in `τ`.
pub fn paracomposition_flow(beta: &FourierField, u: &FourierField, cfg: &CutoffConfig, steps: usize) -> Result<FourierField> {
    if steps == 0 {
        return Err(Error::Config("flow needs at least one step".into()));
    }
    if beta.is_zero() {
        return Ok(u.clone());
    }
    let jb = beta.j_max();
    let n = 2 * jb + 1;
    let bv = beta.to_grid(n)?;
    let bx = beta.derivative(1).to_grid(n)?;
    if bx.iter().any(|v| 1.0 + v.re <= 0.0) {
        return Err(Error::SmallData("1 + τβ_x vanishes on [0, 1]".into()));
    }
    let jm = u.j_max();
    let gen = |tau: f64, v: &FourierField| -> FourierField {
        let b: Vec<C64> = bv.iter().zip(&bx).map(|(b, d)| b / (1.0 + tau * d)).collect();
        let sym = Symbol::term(forward_transform(&b, jb).expect("grid"), Profile::IxiPow(1));
        para_apply(&sym, v, cfg, 0.5, jm)
    };
    let h = 1.0 / steps as f64;
    let mut v = u.clone();
    for s in 0..steps {
        let t = s as f64 * h;
        let k1 = gen(t, &v);
        let k2 = gen(t + h / 2.0, &(&v + &k1.scale(real(h / 2.0))));
        let k3 = gen(t + h / 2.0, &(&v + &k2.scale(real(h / 2.0))));
        let k4 = gen(t + h, &(&v + &k3.scale(real(h))));
        let inc = &(&k1 + &k2.scale(real(2.0))) + &(&k3.scale(real(2.0)) + &k4);
        v = &v + &inc.scale(real(h / 6.0));
    }
    Ok(v)
}

/// One row of the `reduce-demo` report.
#[derive(Clone, Debug, Serialize)]
pub struct ReductionStep {
    pub step: String,
    pub defects: Vec<(String, f64)>,
}

/// Runs the reduction steps on the paralinearization of `f` at `U`.
pub fn reduction_pipeline(f: &Nonlinearity, u: &PairField, cfg: &CutoffConfig) -> Result<Vec<ReductionStep>> {
    let pl = paralinearize(f, u, cfg)?;
    let mut out = vec![ReductionStep {
        step: "paralinearize".into(),
        defects: vec![
            ("reconstruction".into(), pl.reconstruction_residual(f, u)),
            ("a2_imaginary".into(), pl.a2().reality_defect()),
            ("reality".into(), pl.defects_symmetrized.reality),
            ("parity".into(), pl.defects_symmetrized.parity),
            ("reversibility".into(), pl.defects_symmetrized.reversibility),
        ],
    }];
    let a2 = pl.a2().map_pointwise(|v| real(v.re));
    let b2 = pl.coeffs[0][1][2].clone();
    let diag = diagonalize_principal(&a2, &b2)?;
    out.push(ReductionStep {
        step: "diagonalize".into(),
        defects: vec![
            ("inverse".into(), diag.inverse_defect()),
            ("conjugation".into(), diag.conjugation_defect()),
        ],
    });
    let a2_new = diag.a2_new()?;
    let st = straighten(&a2_new)?;
    out.push(ReductionStep {
        step: "straighten".into(),
        defects: vec![
            ("identity".into(), st.identity_defect(&a2_new)?),
            ("integrand_mean".into(), st.integrand_mean.abs()),
            ("inversion".into(), st.inversion_defect()),
            ("constancy".into(), st.constancy_defect(&a2_new)),
        ],
    });
    let a1 = pl.coeffs[0][0][1].zero_mean();
    let s = eliminate_order_one(&a1, st.a2_const)?;
    out.push(ReductionStep {
        step: "order_one".into(),
        defects: vec![("residual".into(), order_one_residual(&s, &a1, st.a2_const))],
    });
    let a0 = Symbol::term(pl.coeffs[0][0][0].clone(), Profile::one());
    let n0 = constant_coeff_step(&a0, st.a2_const)?;
    out.push(ReductionStep {
        step: "order_zero".into(),
        defects: vec![("residual".into(), order_zero_residual(&n0, &a0, st.a2_const, &[0.5, 1.0, 3.0, -2.0, 10.0]))],
    });
    Ok(out)
}
