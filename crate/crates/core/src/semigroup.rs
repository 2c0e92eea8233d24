//! Generator, spectral decomposition and the heat semigroup `P_t = exp(tL)`.
//!
//! The generator of a model is
//!
//! ```text
//! (Lu)(x) = (1/m(x)) Σ_y J(x,y) (u(y) - u(x)),
//! ```
//!
//! which is self-adjoint in `⟨u,v⟩_m = Σ u v m`. Conjugating by `D^{1/2}`,
//! `D = diag(m)`, gives an ordinary symmetric matrix; one Jacobi
//! diagonalization of it then serves every `P_t` evaluation in `O(n^2)`.
//!
//! Differences `P_t - I` are evaluated through `expm1` so that small-`t`
//! quantities such as `(u - P_t u)/t` and `K_t/t` keep full relative accuracy.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg::jacobi_eigen;
use crate::model::{Model, StateFunction};

/// Eigenvalues within this fraction of the spectral radius are set to 0.
pub const ZERO_SNAP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Generator {
    n: usize,
    matrix: Vec<f64>,
    measure: Vec<f64>,
}

impl Generator {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Row-major `n × n` matrix of `L`.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    #[inline]
    pub fn entry(&self, x: usize, y: usize) -> f64 {
        self.matrix[x * self.n + y]
    }

    pub fn apply(&self, u: &StateFunction) -> StateFunction {
        let u = u.values();
        let out = (0..self.n)
            .map(|x| {
                let row = &self.matrix[x * self.n..(x + 1) * self.n];
                row.iter().zip(u).map(|(l, v)| l * v).sum()
            })
            .collect();
        StateFunction::from_vec_unchecked(out)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

pub fn assemble_generator(model: &Model) -> Generator {
    let n = model.n();
    let m = model.measure();
    let mut matrix = vec![0.0; n * n];
    for x in 0..n {
        let mut diag = 0.0;
        for y in 0..n {
            if x != y {
                let rate = model.jump(x, y) / m[x];
                matrix[x * n + y] = rate;
                diag += rate;
            }
        }
        matrix[x * n + x] = -diag;
    }
    Generator {
        n,
        matrix,
        measure: m.to_vec(),
    }
}

/// Eigendecomposition of `L` in the m-weighted inner product.
#[derive(Debug, Clone)]
pub struct Spectral {
    n: usize,
    eigenvalues: Vec<f64>,
    /// Row-major; `vectors[x * n + k] = φ_k(x)`.
    vectors: Vec<f64>,
    measure: Vec<f64>,
    components: Vec<Vec<usize>>,
    sweeps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub spectral_gap: f64,
    pub decay_rate: f64,
    pub components: usize,
    pub sweeps: usize,
}

/// Diagonalizes `S = D^{1/2} L D^{-1/2}` by cyclic Jacobi and maps the
/// eigenvectors back to `φ_k = D^{-1/2} ψ_k`.
pub fn spectral_decompose(gen: &Generator, model: &Model) -> Result<Spectral> {
    let n = gen.n;
    let sqrt_m: Vec<f64> = model.measure().iter().map(|m| m.sqrt()).collect();
    let mut s = vec![0.0; n * n];
    for x in 0..n {
        s[x * n + x] = gen.entry(x, x);
        for y in x + 1..n {
            let a = sqrt_m[x] * gen.entry(x, y) / sqrt_m[y];
            let b = sqrt_m[y] * gen.entry(y, x) / sqrt_m[x];
            let v = 0.5 * (a + b);
            s[x * n + y] = v;
            s[y * n + x] = v;
        }
    }
    let eig = jacobi_eigen(&s, n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.values[j].total_cmp(&eig.values[i]));
    let radius = eig.values.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|&k| {
            let v = eig.values[k];
            if v.abs() <= ZERO_SNAP * radius || v > 0.0 {
                0.0
            } else {
                v
            }
        })
        .collect();
    let mut psi = vec![0.0; n * n];
    for x in 0..n {
        for (k, &src) in order.iter().enumerate() {
            psi[x * n + k] = eig.vectors[x * n + src];
        }
    }
    let components = model.components();
    if eigenvalues.iter().filter(|l| **l == 0.0).count() == components.len() {
        pin_null_space(&mut psi, n, &sqrt_m, &components);
    }
    let mut vectors = psi;
    for x in 0..n {
        for k in 0..n {
            vectors[x * n + k] /= sqrt_m[x];
        }
    }
    Ok(Spectral {
        n,
        eigenvalues,
        vectors,
        measure: model.measure().to_vec(),
        components,
        sweeps: eig.sweeps,
    })
}

/// The kernel of `S` is spanned by `√m · 1_C` for the components `C`. Replaces
/// the computed null vectors (the leading columns) by that exact basis and
/// projects it out of the remaining columns.
fn pin_null_space(psi: &mut [f64], n: usize, sqrt_m: &[f64], components: &[Vec<usize>]) {
    let zeros = components.len();
    for (k, comp) in components.iter().enumerate() {
        let norm = comp.iter().map(|&x| sqrt_m[x] * sqrt_m[x]).sum::<f64>().sqrt();
        for x in 0..n {
            psi[x * n + k] = 0.0;
        }
        for &x in comp {
            psi[x * n + k] = sqrt_m[x] / norm;
        }
    }
    for j in zeros..n {
        for k in 0..zeros {
            let dot: f64 = (0..n).map(|x| psi[x * n + k] * psi[x * n + j]).sum();
            for x in 0..n {
                psi[x * n + j] -= dot * psi[x * n + k];
            }
        }
        let norm = (0..n).map(|x| psi[x * n + j] * psi[x * n + j]).sum::<f64>().sqrt();
        for x in 0..n {
            psi[x * n + j] /= norm;
        }
    }
}

/// Convenience: assemble and decompose in one go.
pub fn decompose_model(model: &Model) -> Result<(Generator, Spectral)> {
    let gen = assemble_generator(model);
    let spec = spectral_decompose(&gen, model)?;
    Ok((gen, spec))
}

fn check_time(t: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero { t >= 0.0 } else { t > 0.0 };
    if !ok || !t.is_finite() {
        let bound = if allow_zero { ">= 0" } else { "> 0" };
        return Err(invalid(format!("time must be finite and {bound}, got {t}")));
    }
    Ok(())
}

impl Spectral {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted descending; `eigenvalues()[0] == 0`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    #[inline]
    pub fn phi(&self, k: usize, x: usize) -> f64 {
        self.vectors[x * self.n + k]
    }

    pub fn eigenvector(&self, k: usize) -> StateFunction {
        StateFunction::from_vec_unchecked((0..self.n).map(|x| self.phi(k, x)).collect())
    }

    /// `-λ_1`; zero when the jump graph is disconnected or `n = 1`.
    pub fn spectral_gap(&self) -> f64 {
        self.eigenvalues.get(1).map_or(0.0, |l| -l)
    }

    /// Smallest nonzero `|λ_k|`: the exponential rate at which functions with
    /// zero mean on every component decay. Zero if every eigenvalue is zero.
    pub fn decay_rate(&self) -> f64 {
        self.eigenvalues.iter().find(|l| **l < 0.0).map_or(0.0, |l| -l)
    }

    pub fn summary(&self) -> SpectralSummary {
        SpectralSummary {
            n: self.n,
            eigenvalues: self.eigenvalues.clone(),
            spectral_gap: self.spectral_gap(),
            decay_rate: self.decay_rate(),
            components: self.components.len(),
            sweeps: self.sweeps,
        }
    }

    /// `c_k = ⟨u, φ_k⟩_m`.
    pub fn coefficients(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n, "state function length mismatch");
        let mut c = vec![0.0; self.n];
        for x in 0..self.n {
            let w = u[x] * self.measure[x];
            let row = &self.vectors[x * self.n..(x + 1) * self.n];
            for (ck, phi) in c.iter_mut().zip(row) {
                *ck += w * phi;
            }
        }
        c
    }

    /// `Σ_k g(λ_k) c_k φ_k` written into `out`.
    pub(crate) fn synthesize(&self, coeffs: &[f64], g: impl Fn(f64) -> f64, out: &mut [f64]) {
        let weights: Vec<f64> = self.eigenvalues.iter().zip(coeffs).map(|(&l, &c)| g(l) * c).collect();
        for (x, o) in out.iter_mut().enumerate() {
            let row = &self.vectors[x * self.n..(x + 1) * self.n];
            *o = row.iter().zip(&weights).map(|(p, w)| p * w).sum();
        }
    }

    /// `P_t u = Σ_k e^{λ_k t} ⟨u, φ_k⟩_m φ_k`.
    pub fn apply_pt(&self, t: f64, u: &StateFunction) -> Result<StateFunction> {
        check_time(t, true)?;
        self.check_len(u)?;
        if t == 0.0 {
            return Ok(u.clone());
        }
        let c = self.coefficients(u.values());
        let mut out = vec![0.0; self.n];
        self.synthesize(&c, |l| (l * t).exp(), &mut out);
        Ok(StateFunction::from_vec_unchecked(out))
    }

    /// `(P_t - I) u`, accurate for small `t`.
    pub fn apply_pt_minus_identity(&self, t: f64, u: &StateFunction) -> Result<StateFunction> {
        check_time(t, true)?;
        self.check_len(u)?;
        let c = self.coefficients(u.values());
        let mut out = vec![0.0; self.n];
        self.synthesize(&c, |l| (l * t).exp_m1(), &mut out);
        Ok(StateFunction::from_vec_unchecked(out))
    }

    /// `L u` through the decomposition.
    pub fn apply_generator(&self, u: &StateFunction) -> Result<StateFunction> {
        self.check_len(u)?;
        let c = self.coefficients(u.values());
        let mut out = vec![0.0; self.n];
        self.synthesize(&c, |l| l, &mut out);
        Ok(StateFunction::from_vec_unchecked(out))
    }

    /// Dense `L` rebuilt from eigenpairs, `L = Φ Λ Φ^T D`.
    pub fn reconstruct_generator(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                out[x * n + y] = (0..n)
                    .map(|k| self.phi(k, x) * self.eigenvalues[k] * self.phi(k, y))
                    .sum::<f64>()
                    * self.measure[y];
            }
        }
        out
    }

    /// Symmetric kernel `K[x][y] = m(x) P_t(x, {y})`; rows sum to `m(x)`.
    pub fn heat_kernel(&self, t: f64) -> Result<Vec<f64>> {
        check_time(t, false)?;
        let n = self.n;
        let growth: Vec<f64> = self.eigenvalues.iter().map(|l| (l * t).exp_m1()).collect();
        let mut k = vec![0.0; n * n];
        for x in 0..n {
            for y in x..n {
                let s: f64 = (0..n).map(|j| growth[j] * self.phi(j, x) * self.phi(j, y)).sum();
                let mut v = self.measure[x] * self.measure[y] * s;
                if x == y {
                    v += self.measure[x];
                }
                k[x * n + y] = v;
                k[y * n + x] = v;
            }
        }
        Ok(k)
    }

    /// `max_{x != y} |K_t[x][y]/t - J(x,y)|`, the off-diagonal distance of
    /// `P_t(dx,dy)/t` from the jump measure.
    pub fn vague_limit_residual(&self, model: &Model, t: f64) -> Result<f64> {
        let k = self.heat_kernel(t)?;
        let n = self.n;
        let mut worst: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    worst = worst.max((k[x * n + y] / t - model.jump(x, y)).abs());
                }
            }
        }
        Ok(worst)
    }

    fn check_len(&self, u: &StateFunction) -> Result<()> {
        if u.len() != self.n {
            return Err(crate::Error::LengthMismatch {
                expected: self.n,
                got: u.len(),
            });
        }
        Ok(())
    }
}
