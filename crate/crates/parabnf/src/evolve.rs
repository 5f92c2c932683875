//! Integrating-factor Runge–Kutta integration of `U̇ = iE(ΛU + F(U))` and
//! of constant-coefficient linear model systems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{nonlinear_part, Nonlinearity, PotentialParams};
use crate::spectral_core::{bracket, PairField, C64, I};
use crate::symbol_algebra::SymbolMatrix2;

/// Most records a trajectory keeps, whatever the step count.
pub const MAX_RECORDS: usize = 10_000;

/// How the step size is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DtPolicy {
    Fixed { dt: f64 },
    /// Step doubling with a relative error target per step.
    Adaptive { dt0: f64, tol: f64, dt_max: f64 },
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Adaptive { dt0: 1e-3, tol: 1e-9, dt_max: 0.05 }
    }
}

/// Step-size guard `|dt| ≤ cfl/J²`, enforced when `f` involves `u_x` or `u_xx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepGuard {
    pub cfl: f64,
}

impl Default for StepGuard {
    fn default() -> Self {
        Self { cfl: 10.0 }
    }
}

fn has_derivatives(f: &Nonlinearity) -> bool {
    f.monomials.iter().any(|m| m.alpha[1] + m.alpha[2] + m.beta[1] + m.beta[2] > 0)
}

/// `e^{iEΛt}`: phases `e^{iλ_j t}` on `u⁺`, `e^{−iλ_j t}` on `u⁻`.
pub fn linear_propagate(u: &PairField, params: &PotentialParams, t: f64) -> PairField {
    u.map_modes(|j| {
        let ph = C64::from_polar(1.0, params.frequency(j as f64) * t);
        (ph, ph.conj())
    })
}

fn lawson_stage(u: &PairField, dt: f64, params: &PotentialParams, f: &Nonlinearity) -> PairField {
    let n = |w: &PairField| nonlinear_part(w, f, true);
    let half = |w: &PairField| linear_propagate(w, params, 0.5 * dt);
    let h = C64::new(dt, 0.0);
    let k1 = n(u);
    let k2 = n(&half(&u.axpy(h * 0.5, &k1)));
    let eu = half(u);
    let k3 = n(&eu.axpy(h * 0.5, &k2));
    let k4 = n(&linear_propagate(u, params, dt).axpy(h, &half(&k3)));
    let mid = &k2 + &k3;
    let acc = linear_propagate(&k1, params, dt).axpy(C64::new(2.0, 0.0), &half(&mid));
    let acc = &acc + &k4;
    linear_propagate(u, params, dt).axpy(h / 6.0, &acc)
}

/// Defects of a step before re-symmetrization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StepDefects {
    pub realification: f64,
    pub parity: f64,
}

/// One Lawson RK4 step. The result is projected back onto even realified
/// pairs; the defects measured before that projection are returned.
pub fn step_lawson(
    u: &PairField,
    dt: f64,
    params: &PotentialParams,
    f: &Nonlinearity,
    guard: &StepGuard,
) -> Result<(PairField, StepDefects)> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::Precondition(format!("step size {dt} must be positive")));
    }
    signed_step(u, dt, params, f, guard)
}

fn signed_step(
    u: &PairField,
    dt: f64,
    params: &PotentialParams,
    f: &Nonlinearity,
    guard: &StepGuard,
) -> Result<(PairField, StepDefects)> {
    let j = u.j_max().max(1) as f64;
    if has_derivatives(f) && dt.abs() > guard.cfl / (j * j) {
        return Err(Error::Precondition(format!("|dt| = {} exceeds {}/J²", dt.abs(), guard.cfl)));
    }
    let next = lawson_stage(u, dt, params, f);
    if !next.is_finite() {
        return Err(Error::StepFailure { t: dt, reason: "non-finite coefficients".into() });
    }
    let defects = StepDefects { realification: next.realification_defect(), parity: next.parity_defect() };
    Ok((next.resymmetrize().even_projection(), defects))
}

/// Why an integration stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    TMax,
    NormThreshold,
    StepFailure,
}

/// Stopping rules; `norm_factor` stops at the first time the `H^{s_0}` norm,
/// `s_0` the first requested index, reaches that multiple of its initial value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub t_max: f64,
    #[serde(default)]
    pub norm_factor: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRecord {
    pub s_list: Vec<f64>,
    pub times: Vec<f64>,
    /// `sobolev_norms[i][k]`: `H^{s_i}` norm at `times[k]`.
    pub sobolev_norms: Vec<Vec<f64>>,
    pub parity_defects: Vec<f64>,
    pub realification_defects: Vec<f64>,
    pub terminal_reason: TerminalReason,
    /// Threshold crossing time, interpolated linearly in the norm, or the last time reached.
    pub terminal_time: f64,
    pub steps: usize,
    pub rejected_steps: usize,
    pub failure: Option<String>,
    #[serde(skip)]
    pub final_state: PairField,
}

impl TrajectoryRecord {
    fn push(&mut self, t: f64, u: &PairField, d: StepDefects) {
        self.times.push(t);
        for (i, s) in self.s_list.iter().enumerate() {
            self.sobolev_norms[i].push(u.sobolev_norm(*s));
        }
        self.parity_defects.push(d.parity);
        self.realification_defects.push(d.realification);
    }

    pub fn max_parity_defect(&self) -> f64 {
        self.parity_defects.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_realification_defect(&self) -> f64 {
        self.realification_defects.iter().cloned().fold(0.0, f64::max)
    }

    /// Largest `|‖u(t)‖/‖u(0)‖ − 1|` over the record for index `i`.
    pub fn max_norm_drift(&self, i: usize) -> f64 {
        let n = &self.sobolev_norms[i];
        n.iter().map(|v| (v / n[0] - 1.0).abs()).fold(0.0, f64::max)
    }

    /// CSV with columns `t`, `norm_s…`, `parity_defect`, `realification_defect`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(self.s_list.iter().map(|s| format!("norm_h{s}")));
        header.extend(["parity_defect".to_string(), "realification_defect".to_string()]);
        out.write_record(&header)?;
        for k in 0..self.times.len() {
            let mut row = vec![format!("{:e}", self.times[k])];
            row.extend(self.sobolev_norms.iter().map(|n| format!("{:e}", n[k])));
            row.push(format!("{:e}", self.parity_defects[k]));
            row.push(format!("{:e}", self.realification_defects[k]));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Integrates from `u0` until a stop rule fires. Step failures end the record
/// rather than returning an error.
pub fn integrate(
    u0: &PairField,
    params: &PotentialParams,
    f: &Nonlinearity,
    s_list: &[f64],
    stop: &StopRule,
    policy: &DtPolicy,
    guard: &StepGuard,
) -> Result<TrajectoryRecord> {
    if s_list.is_empty() {
        return Err(Error::Config("at least one Sobolev index is needed".into()));
    }
    if !(stop.t_max > 0.0) {
        return Err(Error::Config(format!("t_max = {} must be positive", stop.t_max)));
    }
    let mut rec = TrajectoryRecord {
        s_list: s_list.to_vec(),
        times: vec![],
        sobolev_norms: vec![vec![]; s_list.len()],
        parity_defects: vec![],
        realification_defects: vec![],
        terminal_reason: TerminalReason::TMax,
        terminal_time: 0.0,
        steps: 0,
        rejected_steps: 0,
        failure: None,
        final_state: u0.clone(),
    };
    let init = StepDefects { realification: u0.realification_defect(), parity: u0.parity_defect() };
    rec.push(0.0, u0, init);
    let n0 = u0.sobolev_norm(s_list[0]);
    let threshold = stop.norm_factor.map(|k| k * n0);
    let record_dt = stop.t_max / (MAX_RECORDS - 2) as f64;
    let mut next_record = record_dt;
    let mut u = u0.clone();
    let mut t = 0.0;
    let mut prev_norm = n0;
    let mut dt = match policy {
        DtPolicy::Fixed { dt } => *dt,
        DtPolicy::Adaptive { dt0, .. } => *dt0,
    };
    if !(dt > 0.0) {
        return Err(Error::Config(format!("step size {dt} must be positive")));
    }
    while t < stop.t_max {
        let h = dt.min(stop.t_max - t);
        let attempt = match policy {
            DtPolicy::Fixed { .. } => signed_step(&u, h, params, f, guard).map(|r| (r, None)),
            DtPolicy::Adaptive { tol, dt_max, .. } => doubling_step(&u, h, params, f, guard).map(|(r, err)| {
                let grow = if err > 0.0 { 0.9 * (tol / err).powf(0.2) } else { 2.0 };
                let next = (h * grow.clamp(0.2, 2.0)).min(*dt_max);
                (r, Some((err <= *tol, next)))
            }),
        };
        let ((next, defects), control) = match attempt {
            Ok(v) => v,
            Err(e) => {
                rec.terminal_reason = TerminalReason::StepFailure;
                rec.failure = Some(format!("t={t}: {e}"));
                break;
            }
        };
        if let Some((accepted, next_dt)) = control {
            dt = next_dt;
            if !accepted {
                rec.rejected_steps += 1;
                if rec.rejected_steps > 100_000 {
                    rec.terminal_reason = TerminalReason::StepFailure;
                    rec.failure = Some(format!("t={t}: step size control stalled"));
                    break;
                }
                continue;
            }
        }
        u = next;
        t += h;
        rec.steps += 1;
        let norm = u.sobolev_norm(s_list[0]);
        if let Some(thr) = threshold {
            if norm >= thr {
                let frac = if norm > prev_norm { (thr - prev_norm) / (norm - prev_norm) } else { 1.0 };
                rec.push(t, &u, defects);
                rec.terminal_reason = TerminalReason::NormThreshold;
                rec.terminal_time = t - h + frac * h;
                rec.final_state = u;
                return Ok(rec);
            }
        }
        prev_norm = norm;
        if t >= next_record || t >= stop.t_max {
            rec.push(t, &u, defects);
            while next_record <= t {
                next_record += record_dt;
            }
        }
    }
    rec.terminal_time = t;
    rec.final_state = u;
    Ok(rec)
}

/// One step of size `h` and two of size `h/2`; returns the two-half-step
/// result and the relative max-norm gap between the two.
fn doubling_step(
    u: &PairField,
    h: f64,
    params: &PotentialParams,
    f: &Nonlinearity,
    guard: &StepGuard,
) -> Result<((PairField, StepDefects), f64)> {
    let (full, _) = signed_step(u, h, params, f, guard)?;
    let (mid, d1) = signed_step(u, 0.5 * h, params, f, guard)?;
    let (fine, d2) = signed_step(&mid, 0.5 * h, params, f, guard)?;
    let err = full.max_abs_diff(&fine) / fine.max_abs().max(f64::MIN_POSITIVE);
    let d = StepDefects { realification: d1.realification.max(d2.realification), parity: d1.parity.max(d2.parity) };
    Ok(((fine, d), err))
}

/// Fixed-step integration over `[0, t]` with either sign of `t`.
pub fn propagate_fixed(
    u0: &PairField,
    params: &PotentialParams,
    f: &Nonlinearity,
    t: f64,
    dt: f64,
    guard: &StepGuard,
) -> Result<PairField> {
    if !(dt > 0.0) {
        return Err(Error::Precondition(format!("step size {dt} must be positive")));
    }
    let steps = (t.abs() / dt).round().max(1.0) as usize;
    let h = t / steps as f64;
    let mut u = u0.clone();
    for k in 0..steps {
        u = signed_step(&u, h, params, f, guard)
            .map_err(|e| Error::StepFailure { t: k as f64 * h, reason: e.to_string() })?
            .0;
    }
    Ok(u)
}

/// `‖conj u(−T) − v(T)‖_{H⁰}` with `u(0) = u₀` and `v(0) = conj u₀`.
pub fn reversibility_test(
    u0: &PairField,
    params: &PotentialParams,
    f: &Nonlinearity,
    t: f64,
    dt: f64,
    guard: &StepGuard,
) -> Result<f64> {
    let back = propagate_fixed(u0, params, f, -t, dt, guard)?;
    let fwd = propagate_fixed(&u0.conj_fn(), params, f, t, dt, guard)?;
    Ok((&back.conj_fn().plus - &fwd.plus).sobolev_norm(0.0))
}

/// Step-doubling convergence order `log₂(|u_h − u_{h/2}| / |u_{h/2} − u_{h/4}|)` at time `t`.
pub fn observed_order(
    u0: &PairField,
    params: &PotentialParams,
    f: &Nonlinearity,
    t: f64,
    dt: f64,
    guard: &StepGuard,
) -> Result<f64> {
    let a = propagate_fixed(u0, params, f, t, dt, guard)?;
    let b = propagate_fixed(u0, params, f, t, dt / 2.0, guard)?;
    let c = propagate_fixed(u0, params, f, t, dt / 4.0, guard)?;
    Ok(((&a.plus - &b.plus).l2_norm() / (&b.plus - &c.plus).l2_norm()).log2())
}

/// `e^{Mt}` for a complex 2×2 matrix, from the Cayley–Hamilton form.
fn expm2(m: [[C64; 2]; 2], t: f64) -> [[C64; 2]; 2] {
    let half_tr = (m[0][0] + m[1][1]) * 0.5;
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let delta = (half_tr * half_tr - det).sqrt();
    let (c, s) = if (delta * t).norm() < 1e-8 {
        let d2 = delta * delta * t * t;
        (C64::new(1.0, 0.0) + d2 * 0.5, C64::new(t, 0.0) * (C64::new(1.0, 0.0) + d2 / 6.0))
    } else {
        ((delta * t).cosh(), (delta * t).sinh() / delta)
    };
    let e = (half_tr * t).exp();
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let id = [[one, zero], [zero, one]];
    let mut out = [[zero; 2]; 2];
    for r in 0..2 {
        for k in 0..2 {
            let shifted = m[r][k] - if r == k { half_tr } else { zero };
            out[r][k] = e * (c * id[r][k] + s * shifted);
        }
    }
    out
}

/// Integrates `Ż = iE(Λ + m(iξ)² + Op^{BW}(A))Z` for an x-independent matrix
/// symbol `A` exactly, one 2×2 exponential per mode, and returns the largest
/// `|‖Z(t)‖²_{H^s}/‖Z₀‖²_{H^s} − 1|` over `samples` equispaced times in `(0, T]`.
pub fn linear_model_energy(
    z0: &PairField,
    params: &PotentialParams,
    mconst: f64,
    a0: &SymbolMatrix2,
    t: f64,
    s: f64,
    samples: usize,
) -> Result<f64> {
    if !a0.a.is_x_independent() || !a0.b.is_x_independent() {
        return Err(Error::Precondition("linear model needs an x-independent symbol".into()));
    }
    let jm = z0.j_max() as i64;
    let weight = |k: i64| bracket(k as f64).powf(2.0 * s);
    let e0: f64 = (-jm..=jm).map(|k| weight(k) * (z0.plus.get(k).norm_sqr() + z0.minus.get(k).norm_sqr())).sum();
    let gens: Vec<[[C64; 2]; 2]> = (-jm..=jm)
        .map(|k| {
            let xi = k as f64;
            let lam = params.frequency(xi) - mconst * xi * xi;
            let m = a0.eval(0.0, xi);
            [[I * (lam + m[0][0]), I * m[0][1]], [-I * m[1][0], -I * (lam + m[1][1])]]
        })
        .collect();
    let mut worst: f64 = 0.0;
    for step in 1..=samples.max(1) {
        let tau = t * step as f64 / samples.max(1) as f64;
        let mut e = 0.0;
        for (idx, k) in (-jm..=jm).enumerate() {
            let g = expm2(gens[idx], tau);
            let (p, q) = (z0.plus.get(k), z0.minus.get(k));
            let np = g[0][0] * p + g[0][1] * q;
            let nq = g[1][0] * p + g[1][1] * q;
            e += weight(k) * (np.norm_sqr() + nq.norm_sqr());
        }
        worst = worst.max((e / e0 - 1.0).abs());
    }
    Ok(worst)
}
