mod common;

use common::{random_function, random_model, rel};
use jumpform::linalg::jacobi_eigen;
use jumpform::{assemble_generator, builder_alpha_stable_ring, decompose_model, Model, StateFunction};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn symmetrized(model: &Model) -> DMatrix<f64> {
    let gen = assemble_generator(model);
    let n = model.n();
    let m = model.measure();
    DMatrix::from_fn(n, n, |x, y| m[x].sqrt() * gen.entry(x, y) / m[y].sqrt())
}

/// `P_t u` through nalgebra's eigensolver, independent of the crate's Jacobi.
fn oracle_pt(model: &Model, t: f64, u: &StateFunction) -> Vec<f64> {
    let n = model.n();
    let s = symmetrized(model);
    let eig = s.symmetric_eigen();
    let sq: Vec<f64> = model.measure().iter().map(|v| v.sqrt()).collect();
    let w = DVector::from_fn(n, |x, _| sq[x] * u.values()[x]);
    let exp = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (l * t).exp()));
    let out = &eig.eigenvectors * exp * eig.eigenvectors.transpose() * w;
    (0..n).map(|x| out[x] / sq[x]).collect()
}

#[test]
fn eigenvalues_match_nalgebra() {
    for i in 0..25 {
        let model = random_model(i, 40);
        let (_, spec) = decompose_model(&model).unwrap();
        let mut oracle: Vec<f64> = symmetrized(&model)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        oracle.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in spec.eigenvalues().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12, "model {i}: {a} vs {b}");
        }
    }
}

#[test]
fn semigroup_matches_nalgebra_exponential() {
    for i in 0..25 {
        let model = random_model(50 + i, 40);
        let (_, spec) = decompose_model(&model).unwrap();
        let u = random_function(model.n(), 0.3, i);
        for t in [1e-4, 0.3, 5.0] {
            let ours = spec.apply_pt(t, &u).unwrap();
            let oracle = oracle_pt(&model, t, &u);
            for (a, b) in ours.values().iter().zip(&oracle) {
                assert!((a - b).abs() <= 1e-12, "model {i} t={t}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn generator_is_reconstructed_from_spectrum() {
    let model = builder_alpha_stable_ring(24, 1.2).unwrap();
    let (gen, spec) = decompose_model(&model).unwrap();
    let rec = spec.reconstruct_generator();
    let scale = gen.max_abs();
    for (a, b) in rec.iter().zip(gen.matrix()) {
        assert!((a - b).abs() <= 1e-12 * scale);
    }
}

#[test]
fn ring_spectrum_is_circulant() {
    // uniform measure and translation-invariant J: eigenvalues are the
    // discrete Fourier transform of the jump profile
    let n = 16;
    let model = builder_alpha_stable_ring(n, 0.8).unwrap();
    let (_, spec) = decompose_model(&model).unwrap();
    let m0 = model.measure()[0];
    let mut expected: Vec<f64> = (0..n)
        .map(|k| {
            (1..n)
                .map(|d| {
                    let theta = 2.0 * std::f64::consts::PI * (k * d) as f64 / n as f64;
                    model.jump(0, d) / m0 * (theta.cos() - 1.0)
                })
                .sum()
        })
        .collect();
    expected.sort_by(|a: &f64, b| b.total_cmp(a));
    for (a, b) in spec.eigenvalues().iter().zip(&expected) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobi_diagonalizes_random_symmetric(n in 1usize..12, seed in any::<u64>()) {
        let a = DMatrix::from_fn(n, n, |i, j| {
            let (i, j) = (i.min(j) as u64, i.max(j) as u64);
            let h = seed ^ (i * 1_000_003 + j * 7_919);
            ((h.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        });
        let flat: Vec<f64> = (0..n * n).map(|k| a[(k / n, k % n)]).collect();
        let ours = jacobi_eigen(&flat, n).unwrap();
        let mut ev = ours.values.clone();
        ev.sort_by(f64::total_cmp);
        let mut oracle: Vec<f64> = a.symmetric_eigen().eigenvalues.iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(&oracle) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn stationary_measure_is_invariant(i in 0u64..500, t in 1e-3f64..20.0) {
        // ⟨P_t u⟩_m = ⟨u⟩_m
        let model = random_model(i, 20);
        let (_, spec) = decompose_model(&model).unwrap();
        let u = random_function(model.n(), 0.2, i + 99);
        let pt = spec.apply_pt(t, &u).unwrap();
        let m = model.measure();
        let a = pt.inner(&StateFunction::constant(model.n(), 1.0), m);
        let b = u.inner(&StateFunction::constant(model.n(), 1.0), m);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }

    #[test]
    fn positivity_preserving(i in 0u64..500, t in 1e-3f64..5.0) {
        let model = random_model(i, 20);
        let (_, spec) = decompose_model(&model).unwrap();
        let u = random_function(model.n(), 1.0, i).map(f64::abs);
        let pt = spec.apply_pt(t, &u).unwrap();
        prop_assert!(pt.values().iter().all(|v| *v >= -1e-14));
        let kernel = spec.heat_kernel(t).unwrap();
        let n = model.n();
        for x in 0..n {
            for y in 0..n {
                prop_assert!(kernel[x * n + y] >= -1e-14);
                prop_assert!(rel(kernel[x * n + y], kernel[y * n + x]) <= 1e-12);
            }
        }
    }
}
