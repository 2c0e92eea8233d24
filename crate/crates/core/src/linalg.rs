//! Cyclic Jacobi eigensolver for dense symmetric matrices.

use crate::error::{Error, Result};

/// Iteration cap, in full sweeps over the strict upper triangle.
pub const MAX_SWEEPS: usize = 100;
/// Convergence when `off(A) <= OFF_TOL * ||A||_F`.
pub const OFF_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub n: usize,
    /// Unsorted, matching the columns of `vectors`.
    pub values: Vec<f64>,
    /// Row-major `n × n`; column `k` is the eigenvector for `values[k]`.
    pub vectors: Vec<f64>,
    pub sweeps: usize,
    pub off_ratio: f64,
}

fn off_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Diagonalizes the symmetric row-major matrix `a` (only symmetry up to
/// roundoff is assumed; the strict upper triangle drives the rotations).
pub fn jacobi_eigen(a: &[f64], n: usize) -> Result<SymmetricEigen> {
    assert_eq!(a.len(), n * n);
    let mut a = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = OFF_TOL * frob;

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a, n);
        if off <= target || frob == 0.0 {
            let values = (0..n).map(|i| a[i * n + i]).collect();
            return Ok(SymmetricEigen {
                n,
                values,
                vectors: v,
                sweeps,
                off_ratio: if frob == 0.0 { 0.0 } else { off / frob },
            });
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_ratio: off / frob,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;

                // A <- R^T A R, rotation in the (p, q) plane
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
}
