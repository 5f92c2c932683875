//! Small divisors `ψ_N^ℓ`, the Vandermonde mechanism behind the measure
//! estimate, Monte-Carlo bad-set measures, kernel projection and the
//! homological equation of a normal-form step.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Monomial, PotentialParams};
use crate::quantize::bony_weyl;
use crate::spectral_core::{bracket, FourierField, PairField, C64, I};
use crate::stats::wilson_interval;
use crate::symbol_algebra::{CutoffConfig, Symbol};

/// Largest number of canonical tuples a scan will enumerate.
pub const SCAN_BUDGET: u64 = 10_000_000;

/// Samples drawn per RNG stream in the Monte-Carlo estimate.
const MC_SHARD: usize = 8192;

/// `N₀ = 2N + 6`, the default loss exponent of the scans.
pub fn default_n0(n_count: usize) -> usize {
    2 * n_count + 6
}

/// A divisor index: `N` frequencies, the first `ℓ` counted with `+`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DivisorQuery {
    #[serde(rename = "N")]
    pub n_count: usize,
    pub ell: usize,
    pub n: Vec<u32>,
}

impl DivisorQuery {
    pub fn new(ell: usize, n: Vec<u32>) -> Result<Self> {
        if n.is_empty() || ell > n.len() {
            return Err(Error::Range(format!("ℓ={ell} with {} frequencies", n.len())));
        }
        Ok(Self { n_count: n.len(), ell, n })
    }

    pub fn plus(&self) -> &[u32] {
        &self.n[..self.ell]
    }

    pub fn minus(&self) -> &[u32] {
        &self.n[self.ell..]
    }

    /// Each half sorted; `ψ` and the pairing test only see this form.
    pub fn canonical(&self) -> Self {
        let mut p = self.plus().to_vec();
        let mut m = self.minus().to_vec();
        p.sort_unstable();
        m.sort_unstable();
        p.extend(m);
        Self { n_count: self.n_count, ell: self.ell, n: p }
    }

    /// `(n_{ℓ+1},…,n_N | n₁,…,n_ℓ)` with `ℓ ↦ N − ℓ`.
    pub fn swapped(&self) -> Self {
        let mut n = self.minus().to_vec();
        n.extend_from_slice(self.plus());
        Self { n_count: self.n_count, ell: self.n_count - self.ell, n }
    }

    pub fn max_bracket(&self) -> f64 {
        bracket(self.n.iter().copied().max().unwrap_or(0) as f64)
    }
}

/// `ψ = Σ_{j≤ℓ} λ_{n_j} − Σ_{j>ℓ} λ_{n_j}`.
pub fn small_divisor(params: &PotentialParams, q: &DivisorQuery) -> f64 {
    let lam = |n: &u32| params.frequency(*n as f64);
    q.plus().iter().map(lam).sum::<f64>() - q.minus().iter().map(lam).sum::<f64>()
}

/// True iff `N` is even, `ℓ = N/2` and both halves agree as multisets.
pub fn pairing_excluded(q: &DivisorQuery) -> bool {
    if q.n_count % 2 != 0 || 2 * q.ell != q.n_count {
        return false;
    }
    let c = q.canonical();
    c.plus() == c.minus()
}

/// Determinant of the `q×q` matrix with rows `(⟨n_j⟩^{−3}, ⟨n_j⟩^{−5}, …, ⟨n_j⟩^{−(2q+1)})`,
/// in closed form `∏_j x_j^{3/2} ∏_{i<k}(x_k − x_i)` with `x = ⟨n⟩^{−2}`.
pub fn vandermonde_det(nvals: &[u32]) -> Result<f64> {
    check_distinct(nvals)?;
    let x: Vec<f64> = nvals.iter().map(|n| 1.0 / (1.0 + (*n as f64).powi(2))).collect();
    let mut det: f64 = x.iter().map(|v| v.powf(1.5)).product();
    for i in 0..x.len() {
        for k in i + 1..x.len() {
            det *= x[k] - x[i];
        }
    }
    Ok(det)
}

/// The same determinant from an LU factorization of the explicit matrix
/// `⟨n_j⟩^{−(2k+3)}`. Rows are written as `⟨n_j⟩^{−(2q+1)}` times the integer
/// entries `(1+n_j²)^{q−1−k}`, which are exact in floating point and keep the
/// elimination well conditioned.
pub fn vandermonde_det_lu(nvals: &[u32]) -> Result<f64> {
    check_distinct(nvals)?;
    let q = nvals.len();
    let y = |j: usize| 1.0 + (nvals[j] as f64).powi(2);
    let m = DMatrix::from_fn(q, q, |j, k| y(j).powi((q - 1 - k) as i32));
    let scale: f64 = (0..q).map(|j| bracket(nvals[j] as f64).powi(-(2 * q as i32 + 1))).product();
    Ok(scale * m.lu().determinant())
}

fn check_distinct(nvals: &[u32]) -> Result<()> {
    if nvals.is_empty() {
        return Err(Error::Precondition("empty frequency list".into()));
    }
    let mut s = nvals.to_vec();
    s.sort_unstable();
    if s.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Precondition(format!("repeated frequency in {nvals:?}")));
    }
    Ok(())
}

/// Outcome of a non-resonance scan over canonical tuples with `n_j ≤ n_max`.
#[derive(Clone, Debug, Serialize)]
pub struct NonresonanceReport {
    pub gamma_hat: f64,
    #[serde(rename = "N0")]
    pub n0: usize,
    pub worst_tuple: Option<DivisorQuery>,
    /// Canonical tuples skipped as paired.
    pub excluded_paired: u64,
    /// Non-paired canonical tuples with `ψ = 0` exactly.
    pub zero_divisors: u64,
    pub scanned: u64,
}

/// One CSV row of a scan.
#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    #[serde(rename = "N")]
    pub n_count: usize,
    pub ell: usize,
    pub n: String,
    pub psi: f64,
    pub scaled: f64,
}

fn multisets(k: usize, n_max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for s in &out {
            let lo = s.last().copied().unwrap_or(0);
            for v in lo..=n_max {
                let mut t = s.clone();
                t.push(v);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

fn binom_u64(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Number of canonical tuples visited for `ℓ ≤ N/2`.
pub fn scan_size(n_count: usize, n_max: u32) -> u64 {
    let ms = |k: usize| binom_u64(n_max as u64 + k as u64, k as u64);
    (0..=n_count / 2).map(|l| ms(l).saturating_mul(ms(n_count - l))).fold(0u64, u64::saturating_add)
}

/// Per-half data: sorted frequencies, `Σλ`, largest frequency.
struct Half {
    n: Vec<u32>,
    lam: f64,
    top: u32,
}

fn halves(k: usize, n_max: u32, lam: &[f64]) -> Vec<Half> {
    multisets(k, n_max)
        .into_iter()
        .map(|n| Half { lam: n.iter().map(|v| lam[*v as usize]).sum(), top: n.last().copied().unwrap_or(0), n })
        .collect()
}

/// Visits every canonical tuple with `ℓ ≤ N/2`; `ψ` for `ℓ > N/2` follows
/// from the antisymmetry under exchange of the halves.
fn visit<T: Send>(
    params: &PotentialParams,
    n_count: usize,
    n_max: u32,
    init: impl Fn() -> T + Sync + Send,
    step: impl Fn(T, usize, &Half, &Half, f64) -> T + Sync + Send,
    merge: impl Fn(T, T) -> T + Sync + Send,
) -> Result<T> {
    if n_count == 0 {
        return Err(Error::Range("N must be at least 1".into()));
    }
    let size = scan_size(n_count, n_max);
    if size > SCAN_BUDGET {
        return Err(Error::Budget(format!("{size} canonical tuples exceed the scan budget {SCAN_BUDGET}")));
    }
    let lam: Vec<f64> = (0..=n_max).map(|n| params.frequency(n as f64)).collect();
    let mut acc = init();
    for ell in 0..=n_count / 2 {
        let left = halves(ell, n_max, &lam);
        let right = halves(n_count - ell, n_max, &lam);
        let part = left
            .par_iter()
            .fold(&init, |mut a, l| {
                for r in &right {
                    a = step(a, ell, l, r, l.lam - r.lam);
                }
                a
            })
            .reduce(&init, &merge);
        acc = merge(acc, part);
    }
    Ok(acc)
}

fn query_of(ell: usize, l: &Half, r: &Half) -> DivisorQuery {
    let mut n = l.n.clone();
    n.extend_from_slice(&r.n);
    DivisorQuery { n_count: n.len(), ell, n }
}

#[derive(Clone)]
struct ScanAcc {
    best: Option<(f64, DivisorQuery)>,
    excluded: u64,
    zeros: u64,
    scanned: u64,
}

fn better(a: &(f64, DivisorQuery), b: &(f64, DivisorQuery)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// `gamma_hat = min |ψ|·max⟨n_j⟩^{N₀}` over non-paired tuples with `n_j ≤ n_max`.
pub fn scan_nonresonance(params: &PotentialParams, n_count: usize, n_max: u32, n0: usize) -> Result<NonresonanceReport> {
    let init = || ScanAcc { best: None, excluded: 0, zeros: 0, scanned: 0 };
    let acc = visit(
        params,
        n_count,
        n_max,
        init,
        |mut a, ell, l, r, psi| {
            a.scanned += 1;
            if 2 * ell == n_count && l.n == r.n {
                a.excluded += 1;
                return a;
            }
            if psi == 0.0 {
                a.zeros += 1;
            }
            let scaled = psi.abs() * bracket(l.top.max(r.top) as f64).powi(n0 as i32);
            let replace = match &a.best {
                None => true,
                Some(b) => scaled < b.0 || (scaled == b.0 && query_of(ell, l, r) < b.1),
            };
            if replace {
                a.best = Some((scaled, query_of(ell, l, r)));
            }
            a
        },
        |x, y| ScanAcc {
            best: match (x.best, y.best) {
                (Some(p), Some(q)) => Some(if better(&q, &p) { q } else { p }),
                (p, q) => p.or(q),
            },
            excluded: x.excluded + y.excluded,
            zeros: x.zeros + y.zeros,
            scanned: x.scanned + y.scanned,
        },
    )?;
    Ok(NonresonanceReport {
        gamma_hat: acc.best.as_ref().map_or(f64::INFINITY, |b| b.0),
        n0,
        worst_tuple: acc.best.map(|b| b.1),
        excluded_paired: acc.excluded,
        zero_divisors: acc.zeros,
        scanned: acc.scanned,
    })
}

/// Every non-paired canonical tuple of a scan as a CSV row, in enumeration order.
pub fn scan_rows(params: &PotentialParams, n_count: usize, n_max: u32, n0: usize) -> Result<Vec<ScanRow>> {
    visit(
        params,
        n_count,
        n_max,
        Vec::new,
        |mut rows, ell, l, r, psi| {
            if !(2 * ell == n_count && l.n == r.n) {
                let q = query_of(ell, l, r);
                rows.push(ScanRow {
                    n_count,
                    ell,
                    n: q.n.iter().map(u32::to_string).collect::<Vec<_>>().join(" "),
                    psi,
                    scaled: psi.abs() * q.max_bracket().powi(n0 as i32),
                });
            }
            rows
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    )
}

/// Monte-Carlo estimate of the measure of `{m⃗ : |ψ(m⃗)| < γ max⟨n⟩^{−N₀}}`.
#[derive(Clone, Debug, Serialize)]
pub struct BadSetEstimate {
    pub gamma: f64,
    pub fraction: f64,
    pub ci: [f64; 2],
    pub hits: u64,
    pub samples: u64,
}

/// Samples `m⃗` uniformly in `(−1/2, 1/2)^M`; each block of draws uses its own
/// ChaCha stream so the result does not depend on the thread count.
pub fn bad_set_measure_mc(
    q: &DivisorQuery,
    m_len: usize,
    gamma: f64,
    n0: usize,
    samples: usize,
    seed: u64,
) -> Result<BadSetEstimate> {
    if samples < 1000 {
        return Err(Error::Precondition(format!("{samples} samples, need at least 1000")));
    }
    if m_len == 0 {
        return Err(Error::Range("potential needs at least one parameter".into()));
    }
    // ψ is affine in m⃗: ψ = ψ₀ + Σ_k m_k c_k.
    let psi0 = small_divisor(&PotentialParams::zero(m_len), q);
    let c: Vec<f64> = (1..=m_len)
        .map(|k| {
            let w = |n: &u32| bracket(*n as f64).powi(-(2 * k as i32 + 1));
            q.plus().iter().map(w).sum::<f64>() - q.minus().iter().map(w).sum::<f64>()
        })
        .collect();
    let thr = gamma * q.max_bracket().powi(-(n0 as i32));
    let shards = samples.div_ceil(MC_SHARD);
    let hits: u64 = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let count = MC_SHARD.min(samples - s * MC_SHARD);
            let mut h = 0u64;
            for _ in 0..count {
                let psi = psi0 + c.iter().map(|ck| ck * rng.random_range(-0.5..0.5)).sum::<f64>();
                if psi.abs() < thr {
                    h += 1;
                }
            }
            h
        })
        .sum();
    let (lo, hi) = wilson_interval(hits, samples as u64, 1.96);
    Ok(BadSetEstimate { gamma, fraction: hits as f64 / samples as f64, ci: [lo, hi], hits, samples: samples as u64 })
}

/// Bad-set estimates at several `γ` with a linear fit of the fraction in `γ`.
#[derive(Clone, Debug, Serialize)]
pub struct BadSetScaling {
    pub estimates: Vec<BadSetEstimate>,
    pub slope: f64,
    pub intercept: f64,
    /// Each scaled estimate `(γ_{i+1}/γ_i)·p̂_i` falls in the 3σ Wilson interval of `p̂_{i+1}`.
    pub linear: bool,
}

pub fn bad_set_scaling(
    q: &DivisorQuery,
    m_len: usize,
    gammas: &[f64],
    n0: usize,
    samples: usize,
    seed: u64,
) -> Result<BadSetScaling> {
    let est: Vec<BadSetEstimate> =
        gammas.iter().map(|g| bad_set_measure_mc(q, m_len, *g, n0, samples, seed)).collect::<Result<_>>()?;
    let xs: Vec<f64> = est.iter().map(|e| e.gamma).collect();
    let ys: Vec<f64> = est.iter().map(|e| e.fraction).collect();
    let fit = crate::stats::fit_line(&xs, &ys)?;
    let linear = est.windows(2).all(|w| {
        let pred = w[0].fraction * w[1].gamma / w[0].gamma;
        let (lo, hi) = wilson_interval(w[1].hits, w[1].samples, 3.0);
        (lo..=hi).contains(&pred)
    });
    Ok(BadSetScaling { estimates: est, slope: fit.slope, intercept: fit.intercept, linear })
}

/// One coefficient of a table indexed by divisor tuples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub query: DivisorQuery,
    pub value: C64,
}

/// Keeps the paired entries and zeroes every other one.
pub fn kernel_project(table: &[TableEntry]) -> Vec<TableEntry> {
    table
        .iter()
        .map(|e| TableEntry {
            query: e.query.clone(),
            value: if pairing_excluded(&e.query) { e.value } else { C64::new(0.0, 0.0) },
        })
        .collect()
}

/// Solution of `ψ f = −m_p` off the kernel; the kernel part of `m_p` is kept.
#[derive(Clone, Debug, Serialize)]
pub struct HomologicalSolution {
    pub solution: Vec<TableEntry>,
    pub kernel: Vec<TableEntry>,
    pub max_residual: f64,
    pub solved: usize,
}

pub fn solve_homological(mp: &[TableEntry], params: &PotentialParams, n0: usize) -> Result<HomologicalSolution> {
    let mut solution = Vec::with_capacity(mp.len());
    let mut worst: f64 = 0.0;
    let mut solved = 0;
    for e in mp {
        if pairing_excluded(&e.query) {
            solution.push(TableEntry { query: e.query.clone(), value: C64::new(0.0, 0.0) });
            continue;
        }
        let psi = small_divisor(params, &e.query);
        let floor = 1e-10 * e.query.max_bracket().powi(-(n0 as i32));
        if psi.abs() < floor {
            return Err(Error::SmallDivisor { value: psi.abs(), floor, tuple: format!("{:?}", e.query) });
        }
        let f = -e.value / psi;
        worst = worst.max(homological_residual(psi, f, e.value));
        solved += 1;
        solution.push(TableEntry { query: e.query.clone(), value: f });
    }
    Ok(HomologicalSolution { solution, kernel: kernel_project(mp), max_residual: worst, solved })
}

/// `|ψ f + m_p|`, relative to `|m_p|` when that is nonzero.
pub fn homological_residual(psi: f64, f: C64, mp: C64) -> f64 {
    let r = (f * psi + mp).norm();
    if mp.norm() > 0.0 {
        r / mp.norm()
    } else {
        r
    }
}

/// `∂_{z_slot}` of a monomial list (Wirtinger, conjugate slots held fixed).
pub fn partial_z(monos: &[Monomial], slot: usize) -> Vec<Monomial> {
    monos
        .iter()
        .filter(|m| m.alpha[slot] > 0)
        .map(|m| {
            let mut alpha = m.alpha;
            alpha[slot] -= 1;
            Monomial { alpha, beta: m.beta, c: m.c * m.alpha[slot] as f64 }
        })
        .collect()
}

fn slot_orders(e: [u32; 3]) -> Vec<u32> {
    (0..3u32).flat_map(|d| std::iter::repeat_n(d, e[d as usize] as usize)).collect()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Average over slot assignments of `∏ (σ i n_{π(j)})^{d_j}`.
fn symmetrized(orders: &[u32], modes: &[i64], sigma: f64, perms: &[Vec<usize>]) -> C64 {
    if perms.is_empty() {
        return C64::new(1.0, 0.0);
    }
    let mut acc = C64::new(0.0, 0.0);
    for p in perms {
        let mut t = C64::new(1.0, 0.0);
        for (j, d) in orders.iter().enumerate() {
            t *= (I * sigma * modes[p[j]] as f64).powu(*d);
        }
        acc += t;
    }
    acc / perms.len() as f64
}

fn distinct_orderings(sorted: &[u32]) -> f64 {
    let mut count = crate::symbol_algebra::factorial(sorted.len());
    let mut i = 0;
    while i < sorted.len() {
        let j = (i..sorted.len()).find(|&k| sorted[k] != sorted[i]).unwrap_or(sorted.len());
        count /= crate::symbol_algebra::factorial(j - i);
        i = j;
    }
    count
}

/// Coefficient table of the spatial mean of the polynomial `g(u, u_x, u_xx)`
/// on even fields `u = Σ_{n∈ℤ} v_{|n|} e^{inx}/√(2π)`: for every canonical
/// tuple `q` with `n_j ≤ n_max`, the coefficient of `∏_{j≤ℓ} v_{n_j} ∏_{j>ℓ} v̄_{n_j}`.
pub fn mean_coefficient_table(monos: &[Monomial], n_max: u32) -> Vec<TableEntry> {
    let mut out: Vec<TableEntry> = Vec::new();
    for m in monos {
        let ell = m.alpha.iter().sum::<u32>() as usize;
        let n_count = ell + m.beta.iter().sum::<u32>() as usize;
        let (po, mo) = (slot_orders(m.alpha), slot_orders(m.beta));
        let (pp, mp) = (permutations(po.len()), permutations(mo.len()));
        let norm = (2.0 * std::f64::consts::PI).powf(n_count as f64 / 2.0);
        for l in multisets(ell, n_max) {
            for r in multisets(n_count - ell, n_max) {
                let all: Vec<u32> = l.iter().chain(&r).copied().collect();
                let free: Vec<usize> = (0..n_count).filter(|&j| all[j] != 0).collect();
                let mut acc = C64::new(0.0, 0.0);
                for mask in 0u64..(1u64 << free.len()) {
                    let mut s: Vec<i64> = all.iter().map(|v| *v as i64).collect();
                    for (b, &j) in free.iter().enumerate() {
                        if mask >> b & 1 == 1 {
                            s[j] = -s[j];
                        }
                    }
                    if s[..ell].iter().sum::<i64>() != s[ell..].iter().sum::<i64>() {
                        continue;
                    }
                    acc += symmetrized(&po, &s[..ell], 1.0, &pp) * symmetrized(&mo, &s[ell..], -1.0, &mp);
                }
                if acc == C64::new(0.0, 0.0) {
                    continue;
                }
                let value = acc * m.c * distinct_orderings(&l) * distinct_orderings(&r) / norm;
                let query = DivisorQuery { n_count, ell, n: all };
                match out.iter_mut().find(|e| e.query == query) {
                    Some(e) => e.value += value,
                    None => out.push(TableEntry { query, value }),
                }
            }
        }
    }
    out
}

/// `Σ_q T(q) ∏_{j≤ℓ} v_{n_j} ∏_{j>ℓ} v̄_{n_j}` with `v_n = û(n)` of an even field.
pub fn table_eval(table: &[TableEntry], u: &FourierField) -> C64 {
    table
        .iter()
        .map(|e| {
            let mut t = e.value;
            for (j, n) in e.query.n.iter().enumerate() {
                let v = u.get(*n as i64);
                t *= if j < e.query.ell { v } else { v.conj() };
            }
            t
        })
        .sum()
}

/// `Re i⟨⟨D⟩ˢZ, Op^{BW}(diag(a, ā^∨)) E ⟨D⟩ˢZ⟩` for an x-independent `a`,
/// relative to `Σ⟨k⟩^{2s}|ẑ(k)|²·max|a|`.
pub fn fei_quadratic_form(a: &Symbol, z: &PairField, s: f64, cfg: &CutoffConfig) -> Result<f64> {
    if !a.is_x_independent() {
        return Err(Error::Precondition("energy form needs an x-independent symbol".into()));
    }
    let j = z.j_max();
    let w = z.map_modes(|k| {
        let b = bracket(k as f64).powf(s);
        (C64::new(b, 0.0), C64::new(b, 0.0))
    });
    let op_p = bony_weyl(a, cfg, j);
    let op_m = bony_weyl(&a.conj().reflect_xi(), cfg, j);
    let ap = op_p.apply(&w.plus);
    let am = op_m.apply(&w.minus.scale(C64::new(-1.0, 0.0)));
    let mut form = C64::new(0.0, 0.0);
    let mut scale = 0.0;
    for k in -(j as i64)..=j as i64 {
        form += w.plus.get(k).conj() * ap.get(k) + w.minus.get(k).conj() * am.get(k);
        scale += w.plus.get(k).norm_sqr() + w.minus.get(k).norm_sqr();
    }
    let amax = (-(j as i64)..=j as i64).map(|k| a.eval(0.0, k as f64).norm()).fold(0.0, f64::max);
    Ok((I * form).re.abs() / (scale * amax).max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Nonlinearity;
    use crate::symbol_algebra::Profile;

    fn q(ell: usize, n: &[u32]) -> DivisorQuery {
        DivisorQuery::new(ell, n.to_vec()).unwrap()
    }

    #[test]
    fn divisor_examples() {
        let p = PotentialParams::new(vec![0.3, -0.2]).unwrap();
        assert_eq!(small_divisor(&p, &q(1, &[7, 7])), 0.0);
        let z = PotentialParams::zero(3);
        assert_eq!(small_divisor(&z, &q(1, &[5, 3, 4])), 0.0);
        assert_eq!(small_divisor(&z, &q(2, &[2, 3, 1])), -4.0 - 9.0 + 1.0);
        // λ₀ = m₁ = 1/2, so ψ₂⁰(0,0) = −2λ₀.
        let h = PotentialParams::new(vec![0.5]).unwrap();
        assert_eq!(small_divisor(&h, &q(0, &[0, 0])), -1.0);
    }

    #[test]
    fn divisor_symmetries() {
        let p = PotentialParams::new(vec![0.31, -0.12, 0.4, 0.05, -0.27]).unwrap();
        let a = q(2, &[3, 9, 1, 4, 6]);
        assert_eq!(small_divisor(&p, &a), -small_divisor(&p, &a.swapped()));
        let b = q(2, &[9, 3, 6, 1, 4]);
        assert!((small_divisor(&p, &a) - small_divisor(&p, &b)).abs() < 1e-12);
    }

    #[test]
    fn pairing_examples() {
        assert!(pairing_excluded(&q(2, &[3, 5, 5, 3])));
        assert!(!pairing_excluded(&q(2, &[3, 5, 5, 5])));
        assert!(!pairing_excluded(&q(1, &[3, 3, 0])));
        assert!(!pairing_excluded(&q(1, &[2, 2, 2, 2])));
    }

    #[test]
    fn vandermonde_examples() {
        assert!((vandermonde_det(&[0]).unwrap() - 1.0).abs() < 1e-15);
        let d = vandermonde_det(&[0, 1]).unwrap();
        assert!((d.abs() - 1.0 / (4.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((d - vandermonde_det_lu(&[0, 1]).unwrap()).abs() < 1e-15);
        let n = [4, 0, 7, 2, 11];
        let (a, b) = (vandermonde_det(&n).unwrap(), vandermonde_det_lu(&n).unwrap());
        assert!((a - b).abs() <= 1e-10 * a.abs());
        assert!(matches!(vandermonde_det(&[2, 5, 2]), Err(Error::Precondition(_))));
    }

    #[test]
    fn unperturbed_scan_hits_zero() {
        let r = scan_nonresonance(&PotentialParams::zero(5), 3, 12, 12).unwrap();
        assert_eq!(r.gamma_hat, 0.0);
        assert!(r.zero_divisors > 0);
        assert_eq!(r.excluded_paired, 0);
        let r4 = scan_nonresonance(&PotentialParams::zero(1), 4, 6, 14).unwrap();
        assert_eq!(r4.excluded_paired, binom_u64(6 + 2, 2));
    }

    #[test]
    fn perturbed_scan_positive() {
        let p = PotentialParams::new(vec![0.213, -0.377, 0.091, 0.442, -0.158]).unwrap();
        let r = scan_nonresonance(&p, 2, 50, default_n0(2)).unwrap();
        assert!(r.gamma_hat > 0.0 && r.zero_divisors == 0);
        let w = r.worst_tuple.unwrap();
        let direct = small_divisor(&p, &w).abs() * w.max_bracket().powi(10);
        assert_eq!(direct, r.gamma_hat);
        let rows = scan_rows(&p, 2, 50, 10).unwrap();
        assert_eq!(rows.len() as u64, r.scanned - r.excluded_paired);
        assert!(matches!(scan_nonresonance(&p, 6, 400, 18), Err(Error::Budget(_))));
    }

    #[test]
    fn monte_carlo_measure() {
        let t = q(1, &[4, 4, 0]);
        assert_eq!(bad_set_measure_mc(&t, 5, 0.0, 0, 4000, 1).unwrap().hits, 0);
        let paired = q(1, &[6, 6]);
        assert_eq!(bad_set_measure_mc(&paired, 5, 1e-3, 10, 4000, 2).unwrap().fraction, 1.0);
        let sc = bad_set_scaling(&t, 5, &[0.02, 0.04, 0.08], 0, 200_000, 3).unwrap();
        assert!(sc.linear, "{sc:?}");
        assert!(sc.intercept.abs() < 5e-3);
    }

    #[test]
    fn homological_examples() {
        let p = PotentialParams::new(vec![0.5]).unwrap();
        let zero = vec![TableEntry { query: q(1, &[3, 1, 0]), value: C64::new(0.0, 0.0) }];
        assert_eq!(solve_homological(&zero, &p, 12).unwrap().solution[0].value, C64::new(0.0, 0.0));
        // λ₀ = 1 with m⃗ = (1/2, 1/2), so ψ₂²(0,0) = 2.
        let p2 = PotentialParams::new(vec![0.5, 0.5]).unwrap();
        let e = TableEntry { query: q(2, &[0, 0]), value: C64::new(1.0, 0.0) };
        let s = solve_homological(&[e], &p2, 12).unwrap();
        assert_eq!(s.solution[0].value, C64::new(-0.5, 0.0));
        let z = PotentialParams::zero(1);
        let bad = vec![TableEntry { query: q(1, &[5, 3, 4]), value: C64::new(1.0, 0.0) }];
        assert!(matches!(solve_homological(&bad, &z, 12), Err(Error::SmallDivisor { .. })));
        let kern = vec![TableEntry { query: q(1, &[5, 5]), value: C64::new(0.3, 0.1) }];
        let s = solve_homological(&kern, &z, 12).unwrap();
        assert_eq!(s.kernel[0].value, C64::new(0.3, 0.1));
        assert_eq!(s.solution[0].value, C64::new(0.0, 0.0));
    }

    #[test]
    fn kernel_projection_examples() {
        let t3 = vec![TableEntry { query: q(1, &[2, 1, 1]), value: C64::new(1.0, 0.0) }];
        assert!(kernel_project(&t3).iter().all(|e| e.value == C64::new(0.0, 0.0)));
        let t2 = vec![
            TableEntry { query: q(1, &[4, 4]), value: C64::new(2.0, 0.0) },
            TableEntry { query: q(1, &[4, 3]), value: C64::new(2.0, 0.0) },
        ];
        let k = kernel_project(&t2);
        assert_eq!(k[0].value, C64::new(2.0, 0.0));
        assert_eq!(k[1].value, C64::new(0.0, 0.0));
    }

    #[test]
    fn mean_table_matches_direct_mean() {
        let f = Nonlinearity::cubic();
        let a0 = partial_z(&f.monomials, 0);
        let u = FourierField::from_fn(3, |n| C64::new(0.1 / (1 + n.abs()) as f64, 0.03 * n.abs() as f64));
        let direct = FourierField::product(&[&u, &u.conj_fn()]).scale(C64::new(2.0, 0.0)).mean();
        let table = mean_coefficient_table(&a0, 3);
        assert!((table_eval(&table, &u) - direct).norm() < 1e-15);
        for e in kernel_project(&table) {
            assert!(e.value.im.abs() < 1e-15);
        }
        let g = vec![Monomial::new([1, 1, 0], [1, 1, 0], 1.0), Monomial::new([2, 0, 1], [1, 0, 0], 0.5)];
        let table = mean_coefficient_table(&g, 3);
        let direct = FourierField::product(&[&u, &u.derivative(1), &u.conj_fn(), &u.derivative(1).conj_fn()]).mean()
            + FourierField::product(&[&u, &u, &u.derivative(2), &u.conj_fn()]).scale(C64::new(0.5, 0.0)).mean();
        assert!((table_eval(&table, &u) - direct).norm() < 1e-14);
    }

    #[test]
    fn energy_form() {
        let z = PairField::realified(FourierField::from_fn(8, |n| C64::new(0.2, 0.1) / (1 + n * n) as f64));
        let cfg = CutoffConfig::default();
        let a = Symbol::multiplier(Profile::Const(C64::new(0.7, 0.0)));
        assert!(fei_quadratic_form(&a, &z, 2.0, &cfg).unwrap() < 1e-14);
        let b = Symbol::multiplier(Profile::Const(C64::new(0.7, 0.01)));
        assert!(fei_quadratic_form(&b, &z, 2.0, &cfg).unwrap() > 1e-3);
    }
}
