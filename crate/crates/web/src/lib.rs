//! Browser bindings. Every exported function is a thin wrapper over a plain
//! Rust function so the numbers can be tested natively.

use jumpform::hardy_stein::hardy_stein_verify;
use jumpform::{
    builder_alpha_stable_ring, comparability_ratio, decompose_model, default_comparability_scan, pform_jump, Model,
    QuadratureConfig, StateFunction,
};
use wasm_bindgen::prelude::*;

fn js_err(e: jumpform::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `(x, r(x))` on a log grid over `[x_min, x_max]`, mirrored to negative
/// `x`, flattened as `[x0, r0, x1, r1, ...]` in increasing `x`.
pub fn ratio_curve(p: f64, x_min: f64, x_max: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    let step = (x_max / x_min).ln() / (points - 1) as f64;
    let pos: Vec<f64> = (0..points).map(|i| x_min * (step * i as f64).exp()).collect();
    let xs = pos.iter().rev().map(|x| -x).chain(pos.iter().copied());
    xs.flat_map(|x| [x, comparability_ratio(p, x)]).collect()
}

#[wasm_bindgen(js_name = ratioCurve)]
pub fn ratio_curve_js(p: f64, x_min: f64, x_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    jumpform::bregman_f(p, 0.0, 0.0).map_err(js_err)?;
    if !(x_min > 0.0 && x_max > x_min) {
        return Err(JsError::new("need 0 < x_min < x_max"));
    }
    Ok(ratio_curve(p, x_min, x_max, points))
}

/// `[c_p, C_p, argmin, argmax, r(1)]` from the default scan.
#[wasm_bindgen(js_name = comparabilityConstants)]
pub fn comparability_constants(p: f64) -> Result<Vec<f64>, JsError> {
    let s = default_comparability_scan(p).map_err(js_err)?;
    Ok(vec![s.c_est, s.c_upper_est, s.argmin_x, s.argmax_x, s.r_at_one])
}

/// Hardy–Stein run on the alpha-stable ring for `f = 1_{0}` minus its mean.
#[wasm_bindgen]
pub struct Profile {
    t: Vec<f64>,
    integrand: Vec<f64>,
    cumulative: Vec<f64>,
    lhs: f64,
    rhs: f64,
    rel_residual: f64,
    t_trunc: f64,
    panels: usize,
}

#[wasm_bindgen]
impl Profile {
    #[wasm_bindgen(getter)]
    pub fn t(&self) -> Vec<f64> {
        self.t.clone()
    }
    /// `p E_p[P_t f]` at each `t`.
    #[wasm_bindgen(getter)]
    pub fn integrand(&self) -> Vec<f64> {
        self.integrand.clone()
    }
    /// `||f||_p^p - ||P_t f||_p^p`, which the integral up to `t` must equal.
    #[wasm_bindgen(getter)]
    pub fn cumulative(&self) -> Vec<f64> {
        self.cumulative.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn lhs(&self) -> f64 {
        self.lhs
    }
    #[wasm_bindgen(getter)]
    pub fn rhs(&self) -> f64 {
        self.rhs
    }
    #[wasm_bindgen(getter, js_name = relResidual)]
    pub fn rel_residual(&self) -> f64 {
        self.rel_residual
    }
    #[wasm_bindgen(getter, js_name = tTrunc)]
    pub fn t_trunc(&self) -> f64 {
        self.t_trunc
    }
    #[wasm_bindgen(getter)]
    pub fn panels(&self) -> usize {
        self.panels
    }
}

pub fn ring_profile(n: usize, alpha: f64, p: f64, points: usize) -> jumpform::Result<Profile> {
    let model = builder_alpha_stable_ring(n, alpha)?;
    let (_, spec) = decompose_model(&model)?;
    let f = StateFunction::centered_indicator(&model, 0)?;
    let report = hardy_stein_verify(&spec, &model, p, &f, &QuadratureConfig::default(), false)?;
    let m = model.measure();
    let norm0 = f.lp_norm_pow(m, p);
    let t_end = report.t_trunc.max(1e-3);
    let points = points.max(2);
    let mut t = Vec::with_capacity(points);
    let mut integrand = Vec::with_capacity(points);
    let mut cumulative = Vec::with_capacity(points);
    for i in 0..points {
        let s = t_end * 1e-4f64.powf(1.0 - i as f64 / (points - 1) as f64);
        let u = spec.apply_pt(s, &f)?;
        t.push(s);
        integrand.push(p * pform_jump(&model, p, &u)?);
        cumulative.push(norm0 - u.lp_norm_pow(m, p));
    }
    Ok(Profile {
        t,
        integrand,
        cumulative,
        lhs: report.lhs,
        rhs: report.rhs,
        rel_residual: report.rel_residual,
        t_trunc: report.t_trunc,
        panels: report.panels_used,
    })
}

#[wasm_bindgen(js_name = ringProfile)]
pub fn ring_profile_js(n: usize, alpha: f64, p: f64, points: usize) -> Result<Profile, JsError> {
    if n > 128 {
        return Err(JsError::new("keep n <= 128 in the browser"));
    }
    ring_profile(n, alpha, p, points).map_err(js_err)
}

/// Row `x` of `K_t / t` next to row `x` of `J`, flattened as
/// `[k_0, j_0, k_1, j_1, ...]`.
pub fn kernel_row(model: &Model, x: usize, t: f64) -> jumpform::Result<Vec<f64>> {
    if x >= model.n() {
        return Err(jumpform::Error::StateOutOfRange { index: x, n: model.n() });
    }
    let (_, spec) = decompose_model(model)?;
    let k = spec.heat_kernel(t)?;
    let n = model.n();
    Ok((0..n).flat_map(|y| [k[x * n + y] / t, model.jump(x, y)]).collect())
}

#[wasm_bindgen(js_name = ringKernelRow)]
pub fn ring_kernel_row_js(n: usize, alpha: f64, t: f64) -> Result<Vec<f64>, JsError> {
    if n > 128 {
        return Err(JsError::new("keep n <= 128 in the browser"));
    }
    let model = builder_alpha_stable_ring(n, alpha).map_err(js_err)?;
    kernel_row(&model, 0, t).map_err(js_err)
}
