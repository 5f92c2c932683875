//! Bony paraproduct decomposition of multilinear products and the
//! paralinearization of polynomial nonlinearities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{nonlinear_terms, Monomial, Nonlinearity};
use crate::spectral_core::{apply_involution, bracket, sqrt_2pi, FourierField, PairField, C64};
use crate::symbol_algebra::{CutoffConfig, Profile, SamplePlan, Symbol, SymbolMatrix2};

/// Largest number of tuples the brute-force `Θ` sum will visit.
pub const THETA_BUDGET: u64 = 2_000_000_000;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// `χ^{(i)}` for a tuple whose squared Euclidean norm is `sq`.
fn chi_i(cfg: &CutoffConfig, sq: f64, n_i: f64) -> f64 {
    let rest2 = (sq - n_i * n_i).max(0.0);
    let b = bracket(n_i);
    if rest2 >= cfg.delta * cfg.delta * b * b {
        return 0.0;
    }
    cfg.step(rest2.sqrt() / b)
}

/// `Θ(n⃗) = 1 − Σ_i χ(|n⃗ without n_i|₂, n_i)`.
pub fn theta_cutoff(p: usize, n: &[i64], cfg: &CutoffConfig) -> Result<f64> {
    if p < 2 || n.len() != p {
        return Err(Error::Dimension(format!("Θ needs p ≥ 2 and a p-tuple, got p={p}, len={}", n.len())));
    }
    let sq: f64 = n.iter().map(|v| (*v as f64).powi(2)).sum();
    Ok(1.0 - n.iter().map(|v| chi_i(cfg, sq, *v as f64)).sum::<f64>())
}

/// `M(u₁,…,u_p) = Σ_i M_i + M^Θ` on the exact output range `ΣJ_i`.
#[derive(Clone, Debug)]
pub struct ParaproductSplit {
    pub para_parts: Vec<FourierField>,
    pub remainder_part: FourierField,
    pub factors: Vec<FourierField>,
    pub cfg: CutoffConfig,
}

impl ParaproductSplit {
    pub fn total(&self) -> FourierField {
        let mut acc = self.remainder_part.clone();
        for m in &self.para_parts {
            acc = &acc + m;
        }
        acc
    }

    /// Max coefficient gap to the exact product, relative to its size.
    pub fn sum_defect(&self) -> f64 {
        let refs: Vec<&FourierField> = self.factors.iter().collect();
        let exact = FourierField::product(&refs);
        exact.max_abs_diff(&self.total()) / exact.max_abs().max(f64::MIN_POSITIVE)
    }
}

fn nonzero_modes(u: &FourierField) -> Vec<(i64, C64)> {
    u.modes().filter(|(_, c)| *c != zero()).collect()
}

/// Rest tuples `(Σn_j, |n⃗|₂², ∏û_j(n_j))` over the factors other than `skip`,
/// with `|n⃗|₂ < bound`.
fn rest_tuples(modes: &[Vec<(i64, C64)>], skip: usize, bound: f64) -> Vec<(i64, f64, C64)> {
    let mut out = vec![(0i64, 0f64, C64::new(1.0, 0.0))];
    let b2 = bound * bound;
    for (j, mj) in modes.iter().enumerate() {
        if j == skip {
            continue;
        }
        let mut next = Vec::new();
        for &(s, sq, c) in &out {
            for &(n, v) in mj {
                let q = sq + (n * n) as f64;
                if q < b2 {
                    next.push((s + n, q, c * v));
                }
            }
        }
        out = next;
    }
    out
}

/// Para parts `M_i`, enumerating only tuples inside the cut-off support.
fn para_parts(factors: &[FourierField], cfg: &CutoffConfig, j_out: usize) -> Vec<FourierField> {
    let modes: Vec<_> = factors.iter().map(nonzero_modes).collect();
    let norm = sqrt_2pi().powi(factors.len() as i32 - 1);
    let jo = j_out as i64;
    (0..factors.len())
        .into_par_iter()
        .map(|i| {
            let top = modes[i].iter().map(|(n, _)| n.abs()).max().unwrap_or(0);
            let rest = rest_tuples(&modes, i, cfg.delta * bracket(top as f64));
            let mut out = vec![zero(); 2 * j_out + 1];
            for &(ni, ui) in &modes[i] {
                let b = bracket(ni as f64);
                let lim = cfg.delta * cfg.delta * b * b;
                for &(s, sq, c) in &rest {
                    if sq < lim {
                        let w = cfg.step(sq.sqrt() / b);
                        if w != 0.0 {
                            out[(ni + s + jo) as usize] += ui * c * w;
                        }
                    }
                }
            }
            out.iter_mut().for_each(|v| *v /= norm);
            FourierField::from_coeffs(j_out, out).expect("sized")
        })
        .collect()
}

/// `M^Θ` by direct summation over every tuple of nonzero modes.
fn theta_part(factors: &[FourierField], cfg: &CutoffConfig, j_out: usize) -> Result<FourierField> {
    let modes: Vec<_> = factors.iter().map(nonzero_modes).collect();
    let count: u64 = modes.iter().map(|m| m.len() as u64).product();
    if count > THETA_BUDGET {
        return Err(Error::Budget(format!("{count} tuples exceed the brute-force budget {THETA_BUDGET}")));
    }
    let p = factors.len();
    let jo = j_out as i64;
    let norm = sqrt_2pi().powi(p as i32 - 1);
    let first = &modes[0];
    let out = first
        .par_iter()
        .fold(
            || vec![zero(); 2 * j_out + 1],
            |mut acc, &(n0, c0)| {
                let mut idx = vec![0usize; p];
                let mut ns = vec![0i64; p];
                ns[0] = n0;
                loop {
                    // Visit the tuple encoded by idx[1..].
                    let mut c = c0;
                    let mut s = n0;
                    let mut sq = (n0 * n0) as f64;
                    for j in 1..p {
                        let (n, v) = modes[j][idx[j]];
                        ns[j] = n;
                        c *= v;
                        s += n;
                        sq += (n * n) as f64;
                    }
                    let theta = 1.0 - ns.iter().map(|n| chi_i(cfg, sq, *n as f64)).sum::<f64>();
                    if theta != 0.0 {
                        acc[(s + jo) as usize] += c * theta;
                    }
                    let mut j = p - 1;
                    loop {
                        if j == 0 {
                            return acc;
                        }
                        idx[j] += 1;
                        if idx[j] < modes[j].len() {
                            break;
                        }
                        idx[j] = 0;
                        j -= 1;
                    }
                }
            },
        )
        .reduce(
            || vec![zero(); 2 * j_out + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let out = out.into_iter().map(|v| v / norm).collect();
    FourierField::from_coeffs(j_out, out)
}

/// Paraproduct decomposition of `u₁⋯u_p`.
pub fn paraproduct_split(factors: &[FourierField], cfg: &CutoffConfig) -> Result<ParaproductSplit> {
    if factors.len() < 2 {
        return Err(Error::Dimension("a paraproduct needs at least two factors".into()));
    }
    let j_out: usize = factors.iter().map(FourierField::j_max).sum();
    let any_empty = factors.iter().any(FourierField::is_zero);
    let (para, theta) = if any_empty {
        (vec![FourierField::zeros(j_out); factors.len()], FourierField::zeros(j_out))
    } else {
        (para_parts(factors, cfg, j_out), theta_part(factors, cfg, j_out)?)
    };
    Ok(ParaproductSplit { para_parts: para, remainder_part: theta, factors: factors.to_vec(), cfg: *cfg })
}

/// `Op_σ(a_χ)u` evaluated directly, returning modes `|k| ≤ j_out`.
pub fn para_apply(a: &Symbol, u: &FourierField, cfg: &CutoffConfig, sigma: f64, j_out: usize) -> FourierField {
    let reg = a.regularize(cfg);
    let band = a.j_max() as i64;
    let modes = nonzero_modes(u);
    let scale = 1.0 / sqrt_2pi();
    FourierField::from_fn(j_out, |k| {
        let mut acc = zero();
        for &(j, v) in &modes {
            if (k - j).abs() <= band {
                let xi = (1.0 - sigma) * k as f64 + sigma * j as f64;
                acc += reg.mode_coeff(k - j, xi) * v;
            }
        }
        acc * scale
    })
}

/// `min max₂/max` over sampled tuples of nonzero input modes where `Θ ≠ 0`.
pub fn remainder_smoothing(split: &ParaproductSplit, seed: u64) -> Result<f64> {
    let modes: Vec<Vec<i64>> = split.factors.iter().map(|u| nonzero_modes(u).into_iter().map(|m| m.0).collect()).collect();
    let p = modes.len();
    let total: u64 = modes.iter().map(|m| m.len() as u64).product();
    const SAMPLE: u64 = 2_000_000;
    let mut best = f64::INFINITY;
    let mut visit = |ns: &[i64]| {
        let mut mags: Vec<f64> = ns.iter().map(|n| n.abs() as f64).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        if mags[0] == 0.0 {
            return;
        }
        if theta_cutoff(p, ns, &split.cfg).map(|t| t != 0.0).unwrap_or(false) {
            best = best.min(mags[1] / mags[0]);
        }
    };
    let mut ns = vec![0i64; p];
    if total <= SAMPLE {
        for flat in 0..total {
            let mut r = flat;
            for (j, m) in modes.iter().enumerate() {
                ns[j] = m[(r % m.len() as u64) as usize];
                r /= m.len() as u64;
            }
            visit(&ns);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..SAMPLE {
            for (j, m) in modes.iter().enumerate() {
                ns[j] = m[rng.random_range(0..m.len())];
            }
            visit(&ns);
        }
    }
    if best.is_infinite() {
        return Err(Error::Measurement("no sampled tuple lies in the support of Θ".into()));
    }
    Ok(best)
}

/// Factor slots `(derivative order, conjugate slot)` in a fixed order.
fn factor_slots(m: &Monomial) -> Vec<(u32, bool)> {
    let mut v = Vec::new();
    for k in 0..3u32 {
        v.extend(std::iter::repeat_n((k, false), m.alpha[k as usize] as usize));
        v.extend(std::iter::repeat_n((k, true), m.beta[k as usize] as usize));
    }
    v
}

/// Monomials of the second slot: `C̄ (u⁻)^α (u⁺)^β`.
fn second_slot(monos: &[Monomial]) -> Vec<Monomial> {
    monos.iter().map(|m| Monomial { alpha: m.beta, beta: m.alpha, c: m.c.conj() }).collect()
}

/// Derivative fields `[∂^k w⁺, ∂^k w⁻]`.
fn derivative_table(u: &PairField) -> [[FourierField; 2]; 3] {
    let d = |w: &FourierField, k| w.derivative(k);
    [
        [d(&u.plus, 0), d(&u.minus, 0)],
        [d(&u.plus, 1), d(&u.minus, 1)],
        [d(&u.plus, 2), d(&u.minus, 2)],
    ]
}

/// Coefficient fields of a scalar nonlinearity: `out[c][k] = ∂f/∂(∂^k w^c)`.
fn coefficient_fields(monos: &[Monomial], table: &[[FourierField; 2]; 3], j_coef: usize) -> [[FourierField; 3]; 2] {
    let mut out: [[FourierField; 3]; 2] = std::array::from_fn(|_| std::array::from_fn(|_| FourierField::zeros(j_coef)));
    for m in monos {
        let slots = factor_slots(m);
        for (i, &(k, conj)) in slots.iter().enumerate() {
            let others: Vec<&FourierField> =
                slots.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, (kk, cc))| &table[*kk as usize][*cc as usize]).collect();
            let prod = FourierField::product(&others).scale(m.c).resize(j_coef);
            let slot = &mut out[conj as usize][k as usize];
            *slot = &*slot + &prod;
        }
    }
    out
}

fn symbol_of(fields: &[FourierField; 3]) -> Symbol {
    let mut s = Symbol::zero();
    for (k, f) in fields.iter().enumerate() {
        if !f.is_zero() {
            let p = if k == 0 { Profile::one() } else { Profile::IxiPow(k as u32) };
            s = s.add(&Symbol::term(f.clone(), p));
        }
    }
    s
}

/// Standard-quantization symbols `B_{rc}(U; x, ξ) = Σ_k ∂f_r/∂(∂^k u^c) (iξ)^k`.
pub fn paralinear_symbol(f: &Nonlinearity, u: &PairField) -> [[Symbol; 2]; 2] {
    let table = derivative_table(u);
    let j_coef = (f.degree_bound().max(2) as usize - 1) * u.j_max();
    let rows = [f.monomials.clone(), second_slot(&f.monomials)];
    let mut out: [[Symbol; 2]; 2] = Default::default();
    for (r, monos) in rows.iter().enumerate() {
        let cf = coefficient_fields(monos, &table, j_coef);
        for c in 0..2 {
            out[r][c] = symbol_of(&cf[c]);
        }
    }
    out
}

/// Defects of the Weyl symbol matrix before and after symmetrization.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct StructureDefects {
    pub reality: f64,
    pub parity: f64,
    pub reversibility: f64,
}

impl StructureDefects {
    pub fn max(&self) -> f64 {
        self.reality.max(self.parity).max(self.reversibility)
    }
}

/// Output of [`paralinearize`].
#[derive(Clone, Debug, Serialize)]
pub struct Paralinearization {
    /// `coeffs[r][c][k]`: coefficient of `(iξ)^k` in entry `(r, c)`.
    pub coeffs: [[[FourierField; 3]; 2]; 2],
    #[serde(skip)]
    pub symbol: [[Symbol; 2]; 2],
    /// Weyl symbol matrix, symmetrized when the raw one failed a predicate.
    #[serde(skip)]
    pub weyl: [[Symbol; 2]; 2],
    /// `R(U)U` on modes `|k| ≤ deg·J`.
    pub remainder: PairField,
    pub defects_raw: StructureDefects,
    pub defects_symmetrized: StructureDefects,
    pub symmetrized: bool,
    #[serde(skip)]
    pub cfg: CutoffConfig,
}

fn full_matrix_eval(m: &[[Symbol; 2]; 2], x: f64, xi: f64) -> [[C64; 2]; 2] {
    std::array::from_fn(|r| std::array::from_fn(|c| m[r][c].eval(x, xi)))
}

fn conj_reflect(s: &Symbol) -> Symbol {
    s.conj().reflect_xi()
}

fn weyl_of(m: &[[Symbol; 2]; 2]) -> [[Symbol; 2]; 2] {
    std::array::from_fn(|r| std::array::from_fn(|c| m[r][c].std_to_weyl()))
}

/// Reality, parity and reversibility defects of a full 2×2 symbol matrix.
pub fn matrix_defects(m: &[[Symbol; 2]; 2], m_su: &[[Symbol; 2]; 2], plan: &SamplePlan) -> StructureDefects {
    let mut d = StructureDefects::default();
    let mut size: f64 = 0.0;
    for &x in &plan.xs {
        for &xi in &plan.xis {
            let a = full_matrix_eval(m, x, xi);
            let ar = full_matrix_eval(m, x, -xi);
            let ap = full_matrix_eval(m, -x, -xi);
            let b = full_matrix_eval(m_su, x, xi);
            for r in 0..2 {
                for c in 0..2 {
                    size = size.max(a[r][c].norm());
                    d.reality = d.reality.max((ar[r][c].conj() - a[1 - r][1 - c]).norm());
                    d.parity = d.parity.max((a[r][c] - ap[r][c]).norm());
                    // S A(U) = A(SU) S entrywise: row swap vs column swap.
                    d.reversibility = d.reversibility.max((a[1 - r][c] - b[r][1 - c]).norm());
                }
            }
        }
    }
    let s = size.max(1.0);
    StructureDefects { reality: d.reality / s, parity: d.parity / s, reversibility: d.reversibility / s }
}

fn half(a: &Symbol, b: &Symbol) -> Symbol {
    a.add(b).scale(C64::new(0.5, 0.0)).simplified()
}

/// Averages with the reversed, reflected and conjugated copies.
fn symmetrize(m: &[[Symbol; 2]; 2], m_su: &[[Symbol; 2]; 2]) -> [[Symbol; 2]; 2] {
    // ½(A(U) + S A(SU) S)
    let rev: [[Symbol; 2]; 2] = std::array::from_fn(|r| std::array::from_fn(|c| half(&m[r][c], &m_su[1 - r][1 - c])));
    // ½(A + A(−x,−ξ))
    let par: [[Symbol; 2]; 2] =
        std::array::from_fn(|r| std::array::from_fn(|c| half(&rev[r][c], &rev[r][c].reflect_x().reflect_xi())));
    // ½(A + S conj A(x,−ξ) S)
    std::array::from_fn(|r| std::array::from_fn(|c| half(&par[r][c], &conj_reflect(&par[1 - r][1 - c]))))
}

/// Paralinearization `F(U) = Op^𝓑(B(U))U + R(U)U` with the remainder
/// assembled from the paraproduct splits of every monomial.
pub fn paralinearize(f: &Nonlinearity, u: &PairField, cfg: &CutoffConfig) -> Result<Paralinearization> {
    let report = f.validate_hypothesis();
    if !report.passed() {
        return Err(Error::Hypothesis(report.violations.join("; ")));
    }
    let jm = u.j_max();
    let deg = f.degree_bound().max(2) as usize;
    let j_out = deg * jm;
    let j_coef = (deg - 1) * jm;
    let table = derivative_table(u);
    let rows = [f.monomials.clone(), second_slot(&f.monomials)];

    let mut coeffs: [[[FourierField; 3]; 2]; 2] =
        std::array::from_fn(|_| std::array::from_fn(|_| std::array::from_fn(|_| FourierField::zeros(j_coef))));
    let mut symbol: [[Symbol; 2]; 2] = Default::default();
    let mut rem = [FourierField::zeros(j_out), FourierField::zeros(j_out)];
    for (r, monos) in rows.iter().enumerate() {
        let cf = coefficient_fields(monos, &table, j_coef);
        for c in 0..2 {
            symbol[r][c] = symbol_of(&cf[c]);
        }
        coeffs[r] = cf;
        let parts: Vec<FourierField> = monos
            .par_iter()
            .map(|m| -> Result<FourierField> {
                let slots = factor_slots(m);
                let factors: Vec<FourierField> = slots.iter().map(|(k, c)| table[*k as usize][*c as usize].clone()).collect();
                let split = paraproduct_split(&factors, cfg)?;
                let mut acc = split.remainder_part.resize(j_out);
                for (i, mi) in split.para_parts.iter().enumerate() {
                    let others: Vec<&FourierField> = factors.iter().enumerate().filter(|(j, _)| *j != i).map(|x| x.1).collect();
                    let b = Symbol::term(FourierField::product(&others), Profile::one());
                    let single = para_apply(&b, &factors[i], cfg, 1.0, j_out);
                    acc = &acc + &(&mi.resize(j_out) - &single);
                }
                Ok(acc.scale(m.c))
            })
            .collect::<Result<_>>()?;
        for p in parts {
            rem[r] = &rem[r] + &p;
        }
    }
    let [rp, rm] = rem;
    let remainder = PairField { plus: rp, minus: rm };

    let plan = SamplePlan::default();
    let weyl = weyl_of(&symbol);
    let weyl_su = weyl_of(&paralinear_symbol(f, &apply_involution(u)));
    let defects_raw = matrix_defects(&weyl, &weyl_su, &plan);
    let (weyl, defects_symmetrized, symmetrized) = if defects_raw.max() > crate::symbol_algebra::PREDICATE_TOL {
        let s = symmetrize(&weyl, &weyl_su);
        let s_su = symmetrize(&weyl_su, &weyl);
        let d = matrix_defects(&s, &s_su, &plan);
        (s, d, true)
    } else {
        (weyl, defects_raw, false)
    };
    Ok(Paralinearization { coeffs, symbol, weyl, remainder, defects_raw, defects_symmetrized, symmetrized, cfg: *cfg })
}

impl Paralinearization {
    /// `Op^𝓑(B)U` on modes `|k| ≤ j_out`.
    pub fn apply_para(&self, u: &PairField, j_out: usize) -> PairField {
        let row = |r: usize| {
            let a = para_apply(&self.symbol[r][0], &u.plus, &self.cfg, 1.0, j_out);
            let b = para_apply(&self.symbol[r][1], &u.minus, &self.cfg, 1.0, j_out);
            &a + &b
        };
        PairField { plus: row(0), minus: row(1) }
    }

    /// `max |Op^𝓑(B)U + R − F(U)|` on `|k| ≤ J`, relative to `max |F(U)|`.
    pub fn reconstruction_residual(&self, f: &Nonlinearity, u: &PairField) -> f64 {
        let jm = u.j_max();
        let lhs = &self.apply_para(u, jm) + &PairField { plus: self.remainder.plus.resize(jm), minus: self.remainder.minus.resize(jm) };
        let exact = nonlinear_terms(u, f, true);
        lhs.max_abs_diff(&exact) / exact.max_abs().max(1e-300)
    }

    /// Coefficient of `(iξ)²` acting on `u⁺` in the first row.
    pub fn a2(&self) -> &FourierField {
        &self.coeffs[0][0][2]
    }

    /// First row of the Weyl matrix in structured form.
    pub fn weyl_matrix(&self) -> SymbolMatrix2 {
        SymbolMatrix2::new(self.weyl[0][0].clone(), self.weyl[0][1].clone())
    }
}
