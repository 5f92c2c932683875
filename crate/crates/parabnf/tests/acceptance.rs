//! Acceptance suite. Each criterion is measured against an oracle written here
//! where one is cheap, and prints a single PASS/FAIL line with its tolerance.
//!
//! Criteria 1 to 12 fail the run when they miss their tolerance. The lifespan
//! experiment (13) is run in full and its verdict printed, but a censored or
//! shallow fit does not abort the suite: it measures a physical effect rather
//! than a code identity.

use std::process::ExitCode;
use std::time::Instant;

use parabnf::evolve::{integrate, linear_model_energy, reversibility_test, DtPolicy, StepGuard, StopRule};
use parabnf::harness::{lifespan_scan, ExperimentConfig, ParamsSource};
use parabnf::paralin::{paralinearize, paraproduct_split};
use parabnf::quantize::{bony_weyl, quantize, std_to_weyl, OperatorMatrix};
use parabnf::reduce::reduction_pipeline;
use parabnf::resonance::{
    fei_quadratic_form, kernel_project, mean_coefficient_table, partial_z, scan_nonresonance, solve_homological,
    table_eval, vandermonde_det, vandermonde_det_lu, DivisorQuery, TableEntry,
};
use parabnf::spectral_core::{forward_transform, sqrt_2pi};
use parabnf::sym_calculus::{compose_expansion, remainder_order};
use parabnf::symbol_algebra::{CutoffConfig, Profile, Symbol, SymbolMatrix2};
use parabnf::{FourierField, Monomial, Nonlinearity, PairField, PotentialParams, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(checks: &[(&str, f64, f64, bool)]) -> Verdict {
    // (label, value, bound, upper bound?)
    let mut pass = true;
    let mut parts = vec![];
    for (label, v, b, upper) in checks {
        let ok = if *upper { *v <= *b } else { *v >= *b } && !v.is_nan();
        pass &= ok;
        parts.push(format!("{label}={v:.3e} ({} {b:.0e})", if *upper { "≤" } else { "≥" }));
    }
    Verdict { pass, detail: parts.join(", ") }
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ tag)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn rand_field(j: usize, amp: f64, r: &mut ChaCha8Rng) -> FourierField {
    FourierField::from_fn(j, |n| {
        let w = amp / (1.0 + (n * n) as f64);
        c(r.random_range(-w..w), r.random_range(-w..w))
    })
}

fn real_part_field(f: &FourierField) -> FourierField {
    FourierField::from_fn(f.j_max(), |n| 0.5 * (f.get(n) + f.get(-n).conj()))
}

fn even_pair(j: usize, amp: f64, r: &mut ChaCha8Rng) -> PairField {
    let v: Vec<C64> = (0..=j).map(|k| c(r.random_range(-amp..amp), r.random_range(-amp..amp)) / (1.0 + (k * k) as f64)).collect();
    PairField::realified(FourierField::from_fn(j, |n| v[n.unsigned_abs() as usize]))
}

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

fn random_symbol(r: &mut ChaCha8Rng, real: bool) -> Symbol {
    let mut a = Symbol::zero();
    for _ in 0..r.random_range(1..=3) {
        let mut coeff = rand_field(r.random_range(1..=4), 0.5, r);
        if real {
            coeff = real_part_field(&coeff);
        }
        let k = if real { 2 } else { 1 };
        let prof = match r.random_range(0..4) {
            0 => Profile::IxiPow(k),
            1 => Profile::Bracket(r.random_range(-1.0..1.0)),
            2 => Profile::Product(vec![Profile::IxiPow(k), Profile::Bracket(-0.5)]),
            _ => Profile::Potential(vec![r.random_range(-0.5..0.5), r.random_range(-0.5..0.5)]),
        };
        a = a.add(&Symbol::term(coeff, prof));
    }
    a
}

/// `Op_σ(a)` entries from a quadrature of `a(·, ξ)`, for symbols of x-bandwidth ≤ 4.
fn quadrature_entry(a: &Symbol, sigma: f64, k: i64, j: i64) -> C64 {
    let n = k - j;
    if n.abs() > 4 {
        return c(0.0, 0.0);
    }
    let m = 16;
    let xi = (1.0 - sigma) * k as f64 + sigma * j as f64;
    (0..m)
        .map(|q| {
            let x = 2.0 * std::f64::consts::PI * q as f64 / m as f64;
            a.eval(x, xi) * C64::from_polar(1.0, -(n as f64) * x)
        })
        .sum::<C64>()
        / m as f64
}

fn max_entry_gap(op: &OperatorMatrix, f: impl Fn(i64, i64) -> C64) -> f64 {
    let jm = op.j_max() as i64;
    let mut worst: f64 = 0.0;
    for k in -jm..=jm {
        for j in -jm..=jm {
            worst = worst.max((op.entry(k, j) - f(k, j)).norm());
        }
    }
    worst
}

fn criterion_1() -> Verdict {
    let mut r = rng(1);
    let (mut gap, mut oracle): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let a = random_symbol(&mut r, false);
        let std = quantize(&a, 1.0, 64);
        let weyl = quantize(&std_to_weyl(&a), 0.5, 64);
        gap = gap.max(std.max_abs_diff(&weyl));
        let scale = std.max_abs().max(1.0);
        oracle = oracle.max(max_entry_gap(&weyl, |k, j| quadrature_entry(&a, 1.0, k, j)) / scale);
    }
    verdict(&[("std_vs_weyl", gap, 1e-13, true), ("weyl_vs_quadrature_rel", oracle, 1e-13, true)])
}

fn hermitian_gap(op: &OperatorMatrix) -> f64 {
    max_entry_gap(op, |k, j| op.entry(j, k).conj())
}

fn criterion_2() -> Verdict {
    let mut r = rng(2);
    let cfg = CutoffConfig::default();
    let (mut real, mut ctrl) = (0.0f64, f64::INFINITY);
    for _ in 0..20 {
        let a = random_symbol(&mut r, true);
        real = real.max(hermitian_gap(&bony_weyl(&a, &cfg, 64)));
        let b = random_symbol(&mut r, false);
        ctrl = ctrl.min(hermitian_gap(&bony_weyl(&b, &cfg, 64)));
    }
    verdict(&[("real_defect", real, 1e-12, true), ("complex_defect", ctrl, 1e-6, false)])
}

fn criterion_3() -> Verdict {
    let mut r = rng(3);
    let f = rand_field(4, 1.0, &mut r);
    let a = Symbol::term(f.clone(), Profile::one());
    let d = Symbol::multiplier(Profile::IxiPow(1));
    let exp = compose_expansion(&a, &d, 1).expect("expansion");
    // Op^W(f)∘∂_x has entries f̂(k−j)·ij/√(2π).
    let op = quantize(&exp, 0.5, 32);
    let residual = max_entry_gap(&op, |k, j| {
        let n = k - j;
        if n.unsigned_abs() as usize > f.j_max() {
            c(0.0, 0.0)
        } else {
            f.get(n) * c(0.0, j as f64) / sqrt_2pi()
        }
    });
    let target = Symbol::term(f.clone(), Profile::IxiPow(1)).add(&Symbol::term(f.derivative(1).scale(c(-0.5, 0.0)), Profile::one()));
    let xis = [-9.0, -2.5, 0.0, 1.0, 3.5, 12.0];
    let sym_gap = exp.max_diff_on(&target, &xis);
    // term_k(a,b) = (−1)^k term_k(b,a)
    let p = Symbol::term(FourierField::from_function(3, |x| c(x.cos(), 0.0)), Profile::IxiPow(2));
    let q = Symbol::term(FourierField::from_function(3, |x| c((2.0 * x).sin(), 0.3 * x.cos())), Profile::Bracket(1.0));
    let mut anti: f64 = 0.0;
    for k in 1..=3u32 {
        let term = |x: &Symbol, y: &Symbol| compose_expansion(x, y, k).unwrap().sub(&compose_expansion(x, y, k - 1).unwrap());
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let lhs = term(&p, &q);
        let rhs = term(&q, &p).scale(c(sign, 0.0));
        anti = anti.max(lhs.max_diff_on(&rhs, &xis) / lhs.max_abs_on(&xis).max(1.0));
    }
    verdict(&[("matrix_residual", residual, 1e-12, true), ("symbol_gap", sym_gap, 1e-13, true), ("odd_antisymmetry", anti, 1e-12, true)])
}

fn criterion_4() -> Verdict {
    let cosx = FourierField::from_function(2, |x| c(x.cos(), 0.0));
    let a = Symbol::term(cosx, Profile::IxiPow(1));
    let rep = remainder_order(&a, &a, 3, &CutoffConfig::new(0.25).unwrap(), 128).expect("remainder");
    let order = rep.measured_order;
    let mut v = verdict(&[("order_floor", order, 0.0, false), ("measured_order", order, 1.0, false)]);
    v.detail.push_str(&format!(", fit_range={:?}", rep.fit_range));
    v
}

/// Naive convolution with the `1/√(2π)` of the normalization.
fn convolve(a: &FourierField, b: &FourierField) -> FourierField {
    let mut out = FourierField::zeros(a.j_max() + b.j_max());
    for (m, x) in a.modes() {
        for (n, y) in b.modes() {
            let k = m + n;
            out.set(k, out.get(k) + x * y / sqrt_2pi());
        }
    }
    out
}

fn criterion_5() -> Verdict {
    let mut r = rng(5);
    let cfg = CutoffConfig::default();
    let mut checks = vec![];
    let mut worst = [0.0f64; 3];
    for p in 2..=4usize {
        let fs: Vec<FourierField> = (0..p).map(|_| rand_field(64 / p, 1.0, &mut r)).collect();
        let split = paraproduct_split(&fs, &cfg).expect("split");
        let mut prod = fs[0].clone();
        for f in &fs[1..] {
            prod = convolve(&prod, f);
        }
        let total = split.total();
        let jm = prod.j_max().max(total.j_max());
        worst[p - 2] = total.resize(jm).max_abs_diff(&prod.resize(jm)) / prod.max_abs();
    }
    let labels = ["p2", "p3", "p4"];
    for (i, w) in worst.iter().enumerate() {
        checks.push((labels[i], *w, 1e-12, true));
    }
    verdict(&checks)
}

/// `(f, conj f)` on modes `|k| ≤ J`, from pointwise values of the hand-written
/// nonlinearity on a grid fine enough for cubic products.
fn pointwise_rhs(u: &PairField, quasilinear: bool) -> PairField {
    let j = u.j_max();
    let n = 8 * j + 1;
    let p = u.plus.to_grid(n).unwrap();
    let pxx = u.plus.derivative(2).to_grid(n).unwrap();
    let vals: Vec<C64> = (0..n).map(|k| p[k] * p[k].conj() * if quasilinear { pxx[k] } else { p[k] }).collect();
    let conj: Vec<C64> = vals.iter().map(|v| v.conj()).collect();
    PairField { plus: forward_transform(&vals, j).unwrap(), minus: forward_transform(&conj, j).unwrap() }
}

fn criterion_6() -> Verdict {
    let mut r = rng(6);
    let cfg = CutoffConfig::default();
    let u = even_pair(12, 0.2, &mut r);
    let mut checks = vec![];
    let mut out = [0.0f64; 6];
    for (i, (f, ql)) in [(Nonlinearity::cubic(), false), (Nonlinearity::cubic_quasilinear(), true)].into_iter().enumerate() {
        let pl = paralinearize(&f, &u, &cfg).expect("paralinearize");
        let jm = u.j_max();
        let lhs = &pl.apply_para(&u, jm) + &PairField { plus: pl.remainder.plus.resize(jm), minus: pl.remainder.minus.resize(jm) };
        let exact = pointwise_rhs(&u, ql);
        out[3 * i] = lhs.max_abs_diff(&exact) / exact.max_abs();
        out[3 * i + 1] = pl.a2().reality_defect();
        // ∂_{u_xx} f is |u|² or 0.
        let n = 4 * jm + 1;
        let g = u.plus.to_grid(n).unwrap();
        let a2 = pl.a2().resize(2 * jm).to_grid(n).unwrap();
        out[3 * i + 2] =
            (0..n).map(|k| (a2[k] - if ql { c(g[k].norm_sqr(), 0.0) } else { c(0.0, 0.0) }).norm()).fold(0.0, f64::max);
    }
    let names = ["cubic_recon", "cubic_a2_imag", "cubic_a2_pointwise", "ql_recon", "ql_a2_imag", "ql_a2_pointwise"];
    let bounds = [1e-11, 1e-12, 1e-12, 1e-11, 1e-12, 1e-12];
    for i in 0..6 {
        checks.push((names[i], out[i], bounds[i], true));
    }
    verdict(&checks)
}

fn criterion_7() -> Verdict {
    let mut r = rng(7);
    let f = Nonlinearity::new(vec![Monomial::new([1, 0, 1], [1, 0, 0], 1.0), Monomial::new([2, 0, 0], [0, 0, 1], 0.5)]).unwrap();
    let u = even_pair(6, 0.15, &mut r);
    let steps = reduction_pipeline(&f, &u, &CutoffConfig::default()).expect("pipeline");
    let get = |step: &str, key: &str| {
        steps
            .iter()
            .find(|s| s.step == step)
            .and_then(|s| s.defects.iter().find(|(k, _)| k == key))
            .map_or(f64::NAN, |(_, v)| *v)
    };
    verdict(&[
        ("conjugation", get("diagonalize", "conjugation"), 1e-12, true),
        ("straighten_constancy", get("straighten", "constancy"), 1e-10, true),
        ("gamma_periodic", get("straighten", "integrand_mean"), 1e-12, true),
        ("order_one", get("order_one", "residual"), 1e-11, true),
        ("order_zero", get("order_zero", "residual"), 1e-11, true),
    ])
}

fn criterion_8() -> Verdict {
    let mut r = rng(8);
    let (mut lu, mut closed): (f64, f64) = (0.0, 0.0);
    for t in 0..100 {
        let q = 1 + t % 6;
        let mut n: Vec<u32> = vec![];
        while n.len() < q {
            let v = r.random_range(0..=20u32);
            if !n.contains(&v) {
                n.push(v);
            }
        }
        let x: Vec<f64> = n.iter().map(|v| bracket(*v as f64).powi(-2)).collect();
        let mut oracle: f64 = n.iter().map(|v| bracket(*v as f64).powi(-3)).product();
        for i in 0..q {
            for k in i + 1..q {
                oracle *= x[k] - x[i];
            }
        }
        lu = lu.max(((vandermonde_det_lu(&n).unwrap() - oracle) / oracle).abs());
        closed = closed.max(((vandermonde_det(&n).unwrap() - oracle) / oracle).abs());
    }
    verdict(&[("lu_vs_product", lu, 1e-10, true), ("closed_vs_product", closed, 1e-12, true)])
}

fn draw_params(r: &mut ChaCha8Rng) -> PotentialParams {
    PotentialParams::new((0..5).map(|_| r.random_range(-0.5..0.5)).collect()).unwrap()
}

fn lambda(m: &[f64], j: u32) -> f64 {
    let b = bracket(j as f64);
    -(j as f64).powi(2) + m.iter().enumerate().map(|(k, mk)| mk / b.powi(2 * k as i32 + 3)).sum::<f64>()
}

/// Minimum of `|ψ|·max⟨n⟩^{N₀}` over every ordered triple and split, written out directly.
fn brute_gamma(m: &[f64], n_max: u32, n0: i32) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..=n_max {
        for b in 0..=n_max {
            for d in 0..=n_max {
                let l = [lambda(m, a), lambda(m, b), lambda(m, d)];
                let w = bracket(a.max(b).max(d) as f64).powi(n0);
                for ell in 0..=3 {
                    let psi: f64 = (0..3).map(|i| if i < ell { l[i] } else { -l[i] }).sum();
                    best = best.min(psi.abs() * w);
                }
            }
        }
    }
    best
}

fn criterion_9() -> Verdict {
    let mut r = rng(9);
    let (mut least, mut small_gap) = (f64::INFINITY, 0.0f64);
    for k in 0..20 {
        let p = draw_params(&mut r);
        least = least.min(scan_nonresonance(&p, 3, 30, 12).unwrap().gamma_hat);
        if k < 3 {
            let lib = scan_nonresonance(&p, 3, 10, 12).unwrap().gamma_hat;
            let oracle = brute_gamma(p.m(), 10, 12);
            small_gap = small_gap.max((lib - oracle).abs() / oracle);
        }
    }
    let zero = scan_nonresonance(&PotentialParams::zero(5), 3, 30, 12).unwrap();
    // 5² = 3² + 4²
    let pyth = lambda(&[0.0; 5], 5) - lambda(&[0.0; 5], 3) - lambda(&[0.0; 5], 4);
    let positive = if least > 0.0 { 1.0 } else { 0.0 };
    let mut v = verdict(&[
        ("min_gamma_hat_positive", positive, 1.0, false),
        ("brute_force_gap_rel", small_gap, 1e-12, true),
        ("unperturbed_gamma_hat", zero.gamma_hat, 0.0, true),
        ("unperturbed_zero_divisors", zero.zero_divisors as f64, 1.0, false),
        ("pythagorean_psi", pyth.abs(), 0.0, true),
    ]);
    v.detail.push_str(&format!(", min_gamma_hat={least:.3e}"));
    v
}

fn paired(q: &DivisorQuery) -> bool {
    if q.n_count % 2 != 0 || q.ell != q.n_count / 2 {
        return false;
    }
    let (mut a, mut b) = (q.n[..q.ell].to_vec(), q.n[q.ell..].to_vec());
    a.sort_unstable();
    b.sort_unstable();
    a == b
}

fn criterion_10() -> Verdict {
    let mut r = rng(10);
    let params = draw_params(&mut r);
    let mut table = vec![];
    let mut push = |ell: usize, n: Vec<u32>, r: &mut ChaCha8Rng| {
        let value = c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        table.push(TableEntry { query: DivisorQuery::new(ell, n).unwrap(), value });
    };
    for _ in 0..400 {
        let n: Vec<u32> = (0..3).map(|_| r.random_range(0..=20)).collect();
        let ell = r.random_range(0..=3);
        push(ell, n, &mut r);
    }
    for a in 0..=8u32 {
        for b in 0..=8u32 {
            push(1, vec![a, b], &mut r);
            push(2, vec![a, b, b, a], &mut r);
        }
    }
    let sol = solve_homological(&table, &params, 12).expect("solver");
    let (mut residual, mut kernel_ok, mut kernel_count) = (0.0f64, true, 0);
    for ((e, f), k) in table.iter().zip(&sol.solution).zip(&sol.kernel) {
        if paired(&e.query) {
            kernel_count += 1;
            kernel_ok &= k.value == e.value && f.value == c(0.0, 0.0);
        } else {
            let l: Vec<f64> = e.query.n.iter().map(|n| lambda(params.m(), *n)).collect();
            let psi: f64 = l.iter().enumerate().map(|(i, v)| if i < e.query.ell { *v } else { -v }).sum();
            residual = residual.max((f.value * psi + e.value).norm() / e.value.norm());
        }
    }
    let a0 = partial_z(&Nonlinearity::cubic().monomials, 0);
    let kernel = kernel_project(&mean_coefficient_table(&a0, 10));
    let entries_imag = kernel.iter().map(|e| e.value.im.abs()).fold(0.0, f64::max);
    let u = even_pair(10, 0.5, &mut r);
    let symbol_imag = table_eval(&kernel, &u.plus).im.abs();
    let mut v = verdict(&[
        ("residual", residual, 1e-12, true),
        ("kernel_preserved", if kernel_ok { 1.0 } else { 0.0 }, 1.0, false),
        ("kernel_entries_imag", entries_imag, 1e-12, true),
        ("kernel_symbol_imag", symbol_imag, 1e-12, true),
    ]);
    v.detail.push_str(&format!(", kernel_tuples={kernel_count}"));
    v
}

fn criterion_11() -> Verdict {
    let mut r = rng(11);
    let u = even_pair(6, 0.3, &mut r);
    let a0 = partial_z(&Nonlinearity::cubic().monomials, 0);
    let avg = table_eval(&kernel_project(&mean_coefficient_table(&a0, 6)), &u.plus);
    // Mean of ∂_u(|u|²u) = 2|u|² is ‖u‖²_{L²}/π, all of it from paired tuples.
    let oracle = u.plus.modes().map(|(_, v)| v.norm_sqr()).sum::<f64>() / std::f64::consts::PI;
    let avg_gap = (avg - c(oracle, 0.0)).norm() / oracle;
    let params = draw_params(&mut r);
    let z = even_pair(24, 1.0, &mut r);
    let diag = |a: C64| SymbolMatrix2::diagonal(Symbol::multiplier(Profile::Const(a)));
    let drift = linear_model_energy(&z, &params, 0.05, &diag(avg), 10.0, 2.0, 50).unwrap();
    let ctrl = linear_model_energy(&z, &params, 0.05, &diag(avg + c(0.0, -0.01)), 10.0, 2.0, 50).unwrap();
    let ctrl_gap = (ctrl - (0.2f64.exp() - 1.0)).abs();
    let cfg = CutoffConfig::default();
    let form = fei_quadratic_form(&Symbol::multiplier(Profile::Const(avg)), &z, 2.0, &cfg).unwrap().abs();
    let form_ctrl = fei_quadratic_form(&Symbol::multiplier(Profile::Const(avg + c(0.0, -0.01))), &z, 2.0, &cfg).unwrap().abs();
    verdict(&[
        ("mean_symbol_vs_parseval", avg_gap, 1e-12, true),
        ("projected_drift", drift, 1e-9, true),
        ("control_drift", ctrl, 1e-3, false),
        ("control_vs_exp", ctrl_gap, 1e-9, true),
        ("quadratic_form", form, 1e-11, true),
        ("control_quadratic_form", form_ctrl, 1e-6, false),
    ])
}

fn initial(eps: f64) -> PairField {
    PairField::realified(FourierField::from_fn(64, |n| c(eps * sqrt_2pi() * (-(n.abs() as f64)).exp(), 0.0)))
}

fn criterion_12() -> Verdict {
    let mut r = rng(12);
    let params = draw_params(&mut r);
    let g = StepGuard::default();
    let u0 = initial(0.1);
    let stop = StopRule { t_max: 10.0, norm_factor: None };
    let lin = integrate(&u0, &params, &Nonlinearity::zero(), &[0.0, 4.0], &stop, &DtPolicy::Fixed { dt: 0.01 }, &g).unwrap();
    let t = *lin.times.last().unwrap();
    let exact = u0.map_modes(|j| {
        let ph = C64::from_polar(1.0, lambda(params.m(), j.unsigned_abs() as u32) * t);
        (ph, ph.conj())
    });
    let phase = lin.final_state.max_abs_diff(&exact) / u0.max_abs();
    let adaptive = DtPolicy::Adaptive { dt0: 1e-3, tol: 1e-9, dt_max: 0.05 };
    let cubic = integrate(&u0, &params, &Nonlinearity::cubic(), &[4.0], &stop, &adaptive, &g).unwrap();
    let rev = reversibility_test(&initial(0.05), &params, &Nonlinearity::cubic(), 5.0, 1e-3, &g).unwrap();
    verdict(&[
        ("isometry_h0", lin.max_norm_drift(0), 1e-11, true),
        ("isometry_h4", lin.max_norm_drift(1), 1e-11, true),
        ("exact_phase_rel", phase, 1e-11, true),
        ("parity", cubic.max_parity_defect(), 1e-9, true),
        ("realification", cubic.max_realification_defect(), 1e-9, true),
        ("reversibility", rev, 1e-6, true),
    ])
}

fn criterion_13() -> Verdict {
    let cfg = ExperimentConfig { j_max: 64, s: vec![4.0], params: ParamsSource::Seeded { len: 5 }, ..Default::default() };
    let rep = lifespan_scan(&cfg, SEED).expect("lifespan scan runs to completion");
    let ratio = rep.runs.iter().map(|x| x.max_norm_ratio).fold(0.0, f64::max);
    let mut detail = match rep.fit.slope {
        Some(s) => format!("slope={s:.3} (≤ {}), status={}", rep.slope_bound, rep.fit.status),
        None => format!("status={}, no slope", rep.fit.status),
    };
    detail.push_str(&format!(
        ", censored={}/{}, max_norm_ratio={ratio:.4}, grid_spans_decade={}",
        rep.fit.censored,
        rep.runs.len(),
        rep.fit.grid_valid
    ));
    if let Some((runs, fz)) = &rep.unperturbed {
        let rz = runs.iter().map(|x| x.max_norm_ratio).fold(0.0, f64::max);
        detail.push_str(&format!(
            "; zero potential: slope={}, censored={}/{}, max_norm_ratio={rz:.4}",
            fz.slope.map_or("none".into(), |s| format!("{s:.3}")),
            fz.censored,
            runs.len()
        ));
    }
    Verdict { pass: rep.pass, detail }
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Verdict); 13] = [
        (1, "quantization identities", criterion_1),
        (2, "self-adjointness", criterion_2),
        (3, "composition expansion exactness", criterion_3),
        (4, "composition remainder smoothing", criterion_4),
        (5, "paraproduct exactness", criterion_5),
        (6, "paralinearization reconstruction", criterion_6),
        (7, "reduction formulas", criterion_7),
        (8, "vandermonde determinant", criterion_8),
        (9, "non-resonance scan", criterion_9),
        (10, "homological solver", criterion_10),
        (11, "energy cancellation", criterion_11),
        (12, "evolution sanity", criterion_12),
        (13, "lifespan scaling", criterion_13),
    ];
    let mut hard_failures = 0;
    for (id, name, run) in criteria {
        let start = Instant::now();
        let v = run();
        let secs = start.elapsed().as_secs_f64();
        println!("{} criterion {id:>2} {name}: {} [{secs:.1}s]", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass && id != 13 {
            hard_failures += 1;
        }
    }
    if hard_failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{hard_failures} criteria failed");
        ExitCode::FAILURE
    }
}
