//! Signed powers, the Bregman divergence `F_p` of `|·|^p`, its symmetrization
//! `H_p`, and a grid estimate of the comparability constants
//!
//! ```text
//! c_p (b^<p/2> - a^<p/2>)^2  <=  F_p(a, b)  <=  C_p (b^<p/2> - a^<p/2>)^2.
//! ```

use serde::Serialize;

use crate::error::{invalid, Result};

/// Smallest exponent accepted anywhere `p` enters.
pub const P_MIN: f64 = 1.0 + 1e-6;
/// Largest exponent accepted; above it `|a|^p` overflows for moderate `a`.
pub const P_MAX: f64 = 1e3;

/// Below this distance from 1 the comparability ratio is replaced by its
/// limit `2(p-1)/p`.
pub const RATIO_ONE_BAND: f64 = 1e-4;

/// `|x|` at which the large-argument behaviour of the ratio is probed.
pub const LARGE_PROBE: f64 = 1e6;

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(P_MIN..=P_MAX).contains(&p) {
        return Err(invalid(format!("exponent p must lie in [{P_MIN}, {P_MAX}], got {p}")));
    }
    Ok(())
}

/// `|a|^κ sgn a`, without argument checks. `0^<κ> = 0`.
#[inline]
pub fn spow(a: f64, kappa: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a.abs().powf(kappa).copysign(a)
    }
}

#[inline]
pub(crate) fn fp_unchecked(p: f64, a: f64, b: f64) -> f64 {
    b.abs().powf(p) - a.abs().powf(p) - p * spow(a, p - 1.0) * (b - a)
}

#[inline]
pub(crate) fn hp_unchecked(p: f64, a: f64, b: f64) -> f64 {
    0.5 * p * (b - a) * (spow(b, p - 1.0) - spow(a, p - 1.0))
}

/// Signed power `a^<κ> = |a|^κ sgn a` for `κ > 0`.
pub fn signed_power(a: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(invalid(format!("signed power needs kappa > 0, got {kappa}")));
    }
    Ok(spow(a, kappa))
}

/// Bregman divergence `F_p(a,b) = |b|^p - |a|^p - p a^<p-1> (b - a)`.
pub fn bregman_f(p: f64, a: f64, b: f64) -> Result<f64> {
    check_p(p)?;
    Ok(fp_unchecked(p, a, b))
}

/// Symmetrized divergence `H_p(a,b) = (p/2)(b - a)(b^<p-1> - a^<p-1>)`.
pub fn bregman_h(p: f64, a: f64, b: f64) -> Result<f64> {
    check_p(p)?;
    Ok(hp_unchecked(p, a, b))
}

/// Limit of the comparability ratio at `x = 1`.
pub fn ratio_at_one(p: f64) -> f64 {
    2.0 * (p - 1.0) / p
}

/// `r(x) = (|x|^p - 1 - p(x - 1)) / (x^<p/2> - 1)^2`, the one-variable form of
/// `F_p(a,b) / (b^<p/2> - a^<p/2>)^2` with `x = b/a`. Inside
/// [`RATIO_ONE_BAND`] of 1 the analytic limit is returned instead.
pub fn comparability_ratio(p: f64, x: f64) -> f64 {
    if (x - 1.0).abs() < RATIO_ONE_BAND {
        return ratio_at_one(p);
    }
    let num = x.abs().powf(p) - 1.0 - p * (x - 1.0);
    let den = spow(x, 0.5 * p) - 1.0;
    num / (den * den)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparabilityScan {
    pub p: f64,
    /// Grid covers `±[x_min, x_max]`, log-spaced, plus `x = 0`.
    pub x_min: f64,
    pub x_max: f64,
    /// Nodes per sign branch.
    pub nodes: usize,
    pub c_est: f64,
    #[serde(rename = "C_est")]
    pub c_upper_est: f64,
    /// `±inf` when the extremum is the limit at infinity.
    pub argmin_x: f64,
    pub argmax_x: f64,
    /// The substituted limit `2(p-1)/p`.
    pub r_at_one: f64,
    pub r_at_large_pos: f64,
    pub r_at_large_neg: f64,
}

impl ComparabilityScan {
    /// Largest relative grid step; a bound on how far the grid extrema may
    /// sit from the true ones before refinement.
    pub fn grid_step(&self) -> f64 {
        ((self.x_max / self.x_min).ln() / (self.nodes - 1) as f64).exp_m1()
    }
}

/// Scans `r(x)` over a two-sided log grid and returns its infimum and supremum
/// together with the analytic anchors `r(1) = 2(p-1)/p` and `r(±∞) = 1`.
/// Grid extrema are polished by golden-section search between neighbours.
pub fn comparability_scan(p: f64, x_min: f64, x_max: f64, nodes: usize) -> Result<ComparabilityScan> {
    check_p(p)?;
    if nodes < 100 {
        return Err(invalid(format!(
            "comparability scan needs at least 100 nodes, got {nodes}"
        )));
    }
    if !(x_min > 0.0 && x_min <= 1e-4) {
        return Err(invalid(format!(
            "grid must reach down to |x| <= 1e-4 around zero (x_min = {x_min})"
        )));
    }
    if !(x_max >= 1e4 && x_max.is_finite()) {
        return Err(invalid(format!("grid must cover large |x| >= 1e4 (x_max = {x_max})")));
    }

    let r = |x: f64| comparability_ratio(p, x);
    let (lmin, lmax) = (x_min.ln(), x_max.ln());
    let step = (lmax - lmin) / (nodes - 1) as f64;
    let node = |i: usize| (lmin + step * i as f64).exp();

    let anchor_one = ratio_at_one(p);
    let mut lo = (anchor_one, 1.0);
    let mut hi = (anchor_one, 1.0);
    for (val, x) in [(1.0, f64::INFINITY), (1.0, f64::NEG_INFINITY), (r(0.0), 0.0)] {
        if val < lo.0 {
            lo = (val, x);
        }
        if val > hi.0 {
            hi = (val, x);
        }
    }
    // grid minima/maxima per branch: (value, sign, index)
    let mut grid_lo = (f64::INFINITY, 1.0, 0usize);
    let mut grid_hi = (f64::NEG_INFINITY, 1.0, 0usize);
    for sign in [1.0, -1.0] {
        for i in 0..nodes {
            let v = r(sign * node(i));
            if v < grid_lo.0 {
                grid_lo = (v, sign, i);
            }
            if v > grid_hi.0 {
                grid_hi = (v, sign, i);
            }
        }
    }

    let polish = |sign: f64, i: usize, minimize: bool| -> (f64, f64) {
        let a = lmin + step * i.saturating_sub(1) as f64;
        let b = lmin + step * (i + 1).min(nodes - 1) as f64;
        let g = |s: f64| {
            let v = r(sign * s.exp());
            if minimize {
                v
            } else {
                -v
            }
        };
        let s = golden_section(g, a, b, 80);
        let x = sign * s.exp();
        (r(x), x)
    };
    for (cand, minimize) in [(grid_lo, true), (grid_hi, false)] {
        let (v0, sign, i) = cand;
        let (v1, x1) = polish(sign, i, minimize);
        let (v, x) = if (minimize && v1 < v0) || (!minimize && v1 > v0) {
            (v1, x1)
        } else {
            (v0, sign * node(i))
        };
        if minimize && v < lo.0 {
            lo = (v, x);
        }
        if !minimize && v > hi.0 {
            hi = (v, x);
        }
    }

    Ok(ComparabilityScan {
        p,
        x_min,
        x_max,
        nodes,
        c_est: lo.0,
        c_upper_est: hi.0,
        argmin_x: lo.1,
        argmax_x: hi.1,
        r_at_one: anchor_one,
        r_at_large_pos: r(LARGE_PROBE),
        r_at_large_neg: r(-LARGE_PROBE),
    })
}

/// Scan over `±[1e-8, 1e8]` with 4001 nodes per branch.
pub fn default_comparability_scan(p: f64) -> Result<ComparabilityScan> {
    comparability_scan(p, 1e-8, 1e8, 4001)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
