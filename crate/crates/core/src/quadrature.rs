//! Composite Gauss–Legendre quadrature on geometrically growing panels.
//!
//! Each panel is integrated with an order-`k` rule and checked against the
//! order-`k/2` rule. Panels whose two estimates disagree by more than the leaf
//! tolerance are bisected, so kinks of the integrand (sign changes of `P_t f`
//! enter through `u^<p-1>`) get graded refinement automatically.

use serde::Serialize;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureConfig {
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Width of the first panel; `None` lets the caller pick (`1/decay` for
    /// the Hardy–Stein integral, `0.5` otherwise).
    pub initial_width: Option<f64>,
    pub growth: f64,
    /// Truncate the semi-infinite integral once the tail bound drops below
    /// `tail_tol * lhs`.
    pub tail_tol: f64,
    /// Budget of geometric panels (bisections are not counted).
    pub max_panels: usize,
    /// Leaf acceptance: `|Q_k - Q_{k/2}| <= leaf_tol * scale`.
    pub leaf_tol: f64,
    pub max_depth: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            order: 16,
            initial_width: None,
            growth: 2.0,
            tail_tol: 1e-10,
            max_panels: 200,
            leaf_tol: 1e-13,
            max_depth: 60,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(invalid(format!("quadrature order must be >= 2, got {}", self.order)));
        }
        if !(self.growth >= 1.0) {
            return Err(invalid(format!("panel growth must be >= 1, got {}", self.growth)));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol < 1e-2) {
            return Err(invalid(format!(
                "tail_tol must lie in (0, 1e-2), got {}",
                self.tail_tol
            )));
        }
        if let Some(w) = self.initial_width {
            if !(w > 0.0 && w.is_finite()) {
                return Err(invalid(format!("initial panel width must be positive, got {w}")));
            }
        }
        if self.max_panels == 0 {
            return Err(invalid("max_panels must be positive"));
        }
        if !(self.leaf_tol > 0.0) {
            return Err(invalid("leaf_tol must be positive"));
        }
        Ok(())
    }
}

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum();
        s * half
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PanelRecord {
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub error_estimate: f64,
    pub leaves: usize,
    pub nodes: usize,
}

/// Adaptive integrator for a single panel.
#[derive(Debug, Clone)]
pub struct PanelIntegrator {
    high: GaussLegendre,
    low: GaussLegendre,
    abs_tol: f64,
    max_depth: usize,
}

impl PanelIntegrator {
    pub fn new(order: usize, abs_tol: f64, max_depth: usize) -> Self {
        Self {
            high: GaussLegendre::new(order),
            low: GaussLegendre::new((order / 2).max(1)),
            abs_tol,
            max_depth,
        }
    }

    pub fn integrate(&self, f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> PanelRecord {
        let mut rec = PanelRecord {
            a,
            b,
            value: 0.0,
            error_estimate: 0.0,
            leaves: 0,
            nodes: 0,
        };
        self.recurse(f, a, b, 0, &mut rec);
        rec
    }

    fn recurse(&self, f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, depth: usize, rec: &mut PanelRecord) {
        let hi = self.high.integrate(f, a, b);
        let lo = self.low.integrate(f, a, b);
        rec.nodes += self.high.nodes.len() + self.low.nodes.len();
        let err = (hi - lo).abs();
        let mid = 0.5 * (a + b);
        let too_small = !(mid > a && mid < b);
        if err <= self.abs_tol || depth >= self.max_depth || too_small {
            rec.value += hi;
            rec.error_estimate += err;
            rec.leaves += 1;
            return;
        }
        self.recurse(f, a, mid, depth + 1, rec);
        self.recurse(f, mid, b, depth + 1, rec);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub panels_used: usize,
    pub max_panel_error_estimate: f64,
    pub panels: Vec<PanelRecord>,
}

/// Geometric panel edges `0, w, w(1+g), w(1+g+g^2), ...`, the last panel
/// clipped at `t_end`.
pub struct PanelEdges {
    next_start: f64,
    width: f64,
    growth: f64,
}

impl PanelEdges {
    pub fn new(initial_width: f64, growth: f64) -> Self {
        Self {
            next_start: 0.0,
            width: initial_width,
            growth,
        }
    }
}

impl Iterator for PanelEdges {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        let a = self.next_start;
        let b = a + self.width;
        self.next_start = b;
        self.width *= self.growth;
        Some((a, b))
    }
}

/// Integrates `integrand` over `[0, t_end]`. `scale` sets the absolute leaf
/// tolerance `cfg.leaf_tol * scale`.
pub fn integrate_panels(
    mut integrand: impl FnMut(f64) -> f64,
    cfg: &QuadratureConfig,
    t_end: f64,
    scale: f64,
) -> Result<QuadratureResult> {
    cfg.validate()?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(invalid(format!("integration end must be finite and >= 0, got {t_end}")));
    }
    let integ = PanelIntegrator::new(
        cfg.order,
        cfg.leaf_tol * scale.abs().max(f64::MIN_POSITIVE),
        cfg.max_depth,
    );
    let mut out = QuadratureResult {
        value: 0.0,
        panels_used: 0,
        max_panel_error_estimate: 0.0,
        panels: Vec::new(),
    };
    if t_end == 0.0 {
        return Ok(out);
    }
    for (a, b) in PanelEdges::new(cfg.initial_width.unwrap_or(0.5), cfg.growth) {
        if out.panels_used == cfg.max_panels {
            return Err(Error::PanelBudget(cfg.max_panels));
        }
        let b = b.min(t_end);
        let rec = integ.integrate(&mut integrand, a, b);
        out.value += rec.value;
        out.panels_used += 1;
        out.max_panel_error_estimate = out.max_panel_error_estimate.max(rec.error_estimate);
        out.panels.push(rec);
        if b >= t_end {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(16);
        assert!((gl.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // degree 31 is integrated exactly
        let v = gl.integrate(&mut |x| x.powi(30), -1.0, 1.0);
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
        let gl3 = GaussLegendre::new(3);
        assert!((gl3.nodes[2] - (0.6f64).sqrt()).abs() < 1e-15);
        assert!((gl3.weights[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_examples() {
        let cfg = QuadratureConfig::default();
        let r = integrate_panels(|t| (-t).exp(), &cfg, 40.0, 1.0).unwrap();
        assert!((r.value - (1.0 - (-40f64).exp())).abs() < 1e-12);
        let r = integrate_panels(|_| 0.0, &cfg, 40.0, 1.0).unwrap();
        assert_eq!(r.value, 0.0);
        let r = integrate_panels(|t| 4.0 * (-6.0 * t).exp(), &cfg, 10.0, 1.0).unwrap();
        assert!((r.value - 2.0 / 3.0 * (1.0 - (-60f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn kink_is_refined() {
        // |t - 1/3|^{0.3}: integral over [0,1] in closed form
        let cfg = QuadratureConfig::default();
        let c: f64 = 1.0 / 3.0;
        let exact = (c.powf(1.3) + (1.0 - c).powf(1.3)) / 1.3;
        let r = integrate_panels(|t: f64| (t - c).abs().powf(0.3), &cfg, 1.0, 1.0).unwrap();
        assert!((r.value - exact).abs() < 1e-11, "{} vs {exact}", r.value);
    }

    #[test]
    fn budget_and_validation() {
        let cfg = QuadratureConfig {
            max_panels: 3,
            growth: 1.0,
            initial_width: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            integrate_panels(|_| 1.0, &cfg, 10.0, 1.0),
            Err(Error::PanelBudget(3))
        ));
        let bad = QuadratureConfig {
            order: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureConfig {
            tail_tol: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
