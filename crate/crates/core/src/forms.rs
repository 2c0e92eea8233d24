//! The Dirichlet form, the approximate forms `E^(t)` and the p-form `E_p`.
//!
//! `E_p[u]` is available through three independent routes:
//!
//! * [`pform_limit`]: extrapolation of `E^(t)(u, u^<p-1>)` as `t -> 0+`,
//! * [`pform_generator`]: the pairing `-⟨Lu, u^<p-1>⟩`,
//! * [`pform_jump`]: the double sum `(1/p) Σ_x Σ_y F_p(u(x), u(y)) J(x,y)`.
//!
//! On a finite state space every function is continuous and belongs to every
//! domain, so all three must agree.

use serde::Serialize;

use crate::bregman::{check_p, fp_unchecked, hp_unchecked, spow, ComparabilityScan};
use crate::error::{invalid, Error, Result};
use crate::model::{Model, StateFunction};
use crate::semigroup::{Generator, Spectral};

/// Relative agreement required between the three p-form routes.
pub const PFORM_AGREEMENT_TOL: f64 = 1e-7;
/// Relative spread of three consecutive extrapolated values that counts as
/// converged.
pub const LIMIT_CONVERGENCE_TOL: f64 = 1e-8;
/// Extrapolation depth (Neville levels) used by [`pform_limit`].
pub const EXTRAPOLATION_DEPTH: usize = 4;

fn check_len(n: usize, u: &StateFunction) -> Result<()> {
    if u.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: u.len(),
        });
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    Ok(())
}

/// `E(u,v) = ½ Σ_x Σ_y (u(y) - u(x)) (v(y) - v(x)) J(x,y)`.
pub fn dirichlet_form(model: &Model, u: &StateFunction, v: &StateFunction) -> Result<f64> {
    let n = model.n();
    check_len(n, u)?;
    check_len(n, v)?;
    let (u, v) = (u.values(), v.values());
    let mut s = 0.0;
    for x in 0..n {
        for y in 0..n {
            let j = model.jump(x, y);
            if j != 0.0 {
                s += (u[y] - u[x]) * (v[y] - v[x]) * j;
            }
        }
    }
    Ok(0.5 * s)
}

/// `E^(t)(u,v) = (1/t) ⟨u - P_t u, v⟩_m`.
pub fn approx_form(spec: &Spectral, t: f64, u: &StateFunction, v: &StateFunction) -> Result<f64> {
    check_t(t)?;
    check_len(spec.n(), v)?;
    let diff = spec.apply_pt_minus_identity(t, u)?;
    Ok(-diff.inner(v, spec.measure()) / t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    Bregman,
    Symmetrized,
}

/// `E^(t)(u, u^<p-1>)` written against the heat kernel:
/// `(1/(pt)) Σ_x Σ_y D(u(x), u(y)) K_t[x][y]` with `D = F_p` or `D = H_p`.
pub fn approx_pform_kernel(spec: &Spectral, t: f64, p: f64, u: &StateFunction, variant: KernelVariant) -> Result<f64> {
    check_t(t)?;
    check_p(p)?;
    check_len(spec.n(), u)?;
    let k = spec.heat_kernel(t)?;
    let n = spec.n();
    let u = u.values();
    let div = match variant {
        KernelVariant::Bregman => fp_unchecked,
        KernelVariant::Symmetrized => hp_unchecked,
    };
    let mut s = 0.0;
    for x in 0..n {
        for y in 0..n {
            if x != y {
                s += div(p, u[x], u[y]) * k[x * n + y];
            }
        }
    }
    Ok(s / (p * t))
}

/// `t_k = 2^{-k}`, `k = 3..=20`.
pub fn default_schedule() -> Vec<f64> {
    (3..=20).map(|k| 0.5f64.powi(k)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PFormReport {
    pub p: f64,
    pub value_limit: f64,
    pub value_generator: f64,
    pub value_jump: f64,
    pub t_schedule: Vec<f64>,
    /// Raw `E^(t)(u, u^<p-1>)` along the schedule.
    pub approx_values: Vec<f64>,
    pub converged: bool,
    /// Largest pairwise deviation among the three routes relative to the
    /// largest of them; values at roundoff level of the energy scale
    /// `||u||_∞^p Σ J / p` count as zero.
    pub max_deviation: f64,
    pub agree: bool,
}

/// Extrapolates `E^(t)(u, u^<p-1>)` to `t = 0` along a strictly decreasing
/// schedule. The sequence is smooth in `t`, so polynomial (Neville)
/// extrapolation in `t` converges fast; for the geometric default schedule this
/// is repeated Richardson extrapolation with ratio 2.
///
/// Returns `(limit, raw values, converged)`.
pub fn pform_limit(spec: &Spectral, p: f64, u: &StateFunction, schedule: &[f64]) -> Result<(f64, Vec<f64>, bool)> {
    check_p(p)?;
    check_len(spec.n(), u)?;
    if schedule.len() < 4 {
        return Err(invalid("extrapolation schedule needs at least 4 points"));
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) || schedule.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("schedule must be positive and strictly decreasing"));
    }
    let v = u.map(|x| spow(x, p - 1.0));
    let raw = schedule
        .iter()
        .map(|&t| approx_form(spec, t, u, &v))
        .collect::<Result<Vec<_>>>()?;

    // Neville tableau, extrapolating to t = 0, truncated at EXTRAPOLATION_DEPTH.
    let mut accel = Vec::with_capacity(raw.len());
    let mut prev_row: Vec<f64> = Vec::new();
    for (i, &val) in raw.iter().enumerate() {
        let mut row = vec![val];
        for j in 1..=i.min(EXTRAPOLATION_DEPTH) {
            let ti = schedule[i];
            let tij = schedule[i - j];
            let a = row[j - 1];
            let b = prev_row[j - 1];
            row.push(a + (a - b) * ti / (tij - ti));
        }
        accel.push(*row.last().unwrap());
        prev_row = row;
    }

    let scale = u.sup_norm().powf(p) * spec_jump_scale(spec);
    let floor = 1e-14 * scale;
    let close = |a: f64, b: f64| (a - b).abs() <= LIMIT_CONVERGENCE_TOL * a.abs().max(b.abs()) + floor;
    let k = accel.len();
    let converged = close(accel[k - 3], accel[k - 2]) && close(accel[k - 2], accel[k - 1]);
    Ok((*accel.last().unwrap(), raw, converged))
}

fn spec_jump_scale(spec: &Spectral) -> f64 {
    spec.eigenvalues().iter().fold(0.0, |a: f64, l| a.max(-l)) * spec.measure().iter().sum::<f64>()
}

/// `E_p[u] = -⟨Lu, u^<p-1>⟩_m`.
pub fn pform_generator(gen: &Generator, p: f64, u: &StateFunction) -> Result<f64> {
    check_p(p)?;
    check_len(gen.n(), u)?;
    let lu = gen.apply(u);
    Ok(-lu
        .values()
        .iter()
        .zip(u.values())
        .zip(gen.measure())
        .map(|((l, x), m)| l * spow(*x, p - 1.0) * m)
        .sum::<f64>())
}

/// `E_p[u] = (1/p) Σ_{x != y} F_p(u(x), u(y)) J(x,y)`.
pub fn pform_jump(model: &Model, p: f64, u: &StateFunction) -> Result<f64> {
    check_p(p)?;
    check_len(model.n(), u)?;
    let mut scratch = BregmanScratch::new(model.n());
    Ok(scratch.pform_jump(model, p, u.values()))
}

/// Cached per-state powers for repeated evaluations of the jump double sum.
pub(crate) struct BregmanScratch {
    abs_p: Vec<f64>,
    signed: Vec<f64>,
}

impl BregmanScratch {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            abs_p: vec![0.0; n],
            signed: vec![0.0; n],
        }
    }

    /// `(1/p) Σ_x Σ_y F_p(u_x, u_y) J(x,y)` with `|u|^p` and `u^<p-1>`
    /// evaluated once per state.
    pub(crate) fn pform_jump(&mut self, model: &Model, p: f64, u: &[f64]) -> f64 {
        let n = model.n();
        for (x, &v) in u.iter().enumerate() {
            self.abs_p[x] = v.abs().powf(p);
            self.signed[x] = spow(v, p - 1.0);
        }
        let jumps = model.jumps();
        let mut s = 0.0;
        for x in 0..n {
            let row = &jumps[x * n..(x + 1) * n];
            let (ax, sx, ux) = (self.abs_p[x], self.signed[x], u[x]);
            let mut acc = 0.0;
            for y in 0..n {
                let j = row[y];
                if j != 0.0 {
                    acc += (self.abs_p[y] - ax - p * sx * (u[y] - ux)) * j;
                }
            }
            s += acc;
        }
        s / p
    }
}

/// All three routes for `E_p[u]` side by side.
pub fn pform_report(
    model: &Model,
    gen: &Generator,
    spec: &Spectral,
    p: f64,
    u: &StateFunction,
    schedule: &[f64],
) -> Result<PFormReport> {
    let (value_limit, approx_values, converged) = pform_limit(spec, p, u, schedule)?;
    let value_generator = pform_generator(gen, p, u)?;
    let value_jump = pform_jump(model, p, u)?;
    let values = [value_limit, value_generator, value_jump];
    let scale = u.sup_norm().powf(p) * model.jumps().iter().sum::<f64>() / p;
    let denom = values
        .iter()
        .fold(1e-12 * scale, |a, v| a.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let max_deviation = [
        (value_limit - value_generator).abs(),
        (value_generator - value_jump).abs(),
        (value_limit - value_jump).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
        / denom;
    Ok(PFormReport {
        p,
        value_limit,
        value_generator,
        value_jump,
        t_schedule: schedule.to_vec(),
        approx_values,
        converged,
        max_deviation,
        agree: converged && max_deviation <= PFORM_AGREEMENT_TOL,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HalfPowerCheck {
    pub p: f64,
    /// `E(u^<p/2>, u^<p/2>)`.
    pub halfpower_energy: f64,
    /// `(p / (2 c_p)) E_p[u]`.
    pub bound: f64,
    pub holds: bool,
    /// The same inequality between approximate forms at finite `t`:
    /// `(t, lhs, rhs)`.
    pub finite_t: Vec<(f64, f64, f64)>,
}

/// Checks `E[u^<p/2>] <= (p / (2 c_p)) E_p[u]`, both at the limit and for the
/// approximate forms at a few finite `t`, with `c_p` from `scan`.
pub fn halfpower_inclusion_check(
    model: &Model,
    spec: &Spectral,
    p: f64,
    u: &StateFunction,
    scan: &ComparabilityScan,
) -> Result<HalfPowerCheck> {
    check_p(p)?;
    check_len(model.n(), u)?;
    if scan.p != p {
        return Err(invalid(format!("scan was computed for p = {}, not {p}", scan.p)));
    }
    let factor = p / (2.0 * scan.c_est);
    let g = u.map(|x| spow(x, 0.5 * p));
    let halfpower_energy = dirichlet_form(model, &g, &g)?;
    let bound = factor * pform_jump(model, p, u)?;
    let slack = 1e-8;
    let mut holds = halfpower_energy <= bound * (1.0 + slack) + 1e-300;

    let v = u.map(|x| spow(x, p - 1.0));
    let mut finite_t = Vec::new();
    for t in [1e-3, 1e-1, 1.0] {
        let lhs = approx_form(spec, t, &g, &g)?;
        let rhs = factor * approx_form(spec, t, u, &v)?;
        holds &= lhs <= rhs * (1.0 + slack) + 1e-14 * (1.0 + rhs.abs());
        finite_t.push((t, lhs, rhs));
    }
    Ok(HalfPowerCheck {
        p,
        halfpower_energy,
        bound,
        holds,
        finite_t,
    })
}
