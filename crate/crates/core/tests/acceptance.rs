//! Acceptance suite. Runs every criterion and prints one PASS/FAIL line each.
//! Exits non-zero if any criterion fails, except those listed in
//! `KNOWN_FAILURES`, which must fail.

mod common;

use std::panic;
use std::time::{Duration, Instant};

use common::{random_function, random_model, rel, rng, two_state};
use jumpform::forms::KernelVariant;
use jumpform::hardy_stein::{finite_horizon_check, hardy_stein_verify};
use jumpform::{
    approx_form, approx_pform_kernel, bregman_f, decay_check, decompose_model, default_comparability_scan,
    default_schedule, detailed_balance_check, empirical_pt_check, pform_report, ratio_at_one, simulate_paths,
    simulate_stationary, spow, Model, QuadratureConfig, StateFunction,
};
use rand::Rng;

/// Criteria that cannot hold for the stated parameters. Criterion 6 asks
/// for |r(±1e6) - 1| <= 1e-3 at p = 1.5, but r(x) - 1 ~ -p |x|^{1-p} there,
/// which is 1.4e-3. They are still evaluated at full strictness; the run fails
/// if one of them starts passing, so the list cannot go stale.
const KNOWN_FAILURES: &[usize] = &[6];

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

/// Worst case tracker: keeps the largest value and a label for it.
struct Worst {
    value: f64,
    label: String,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: 0.0,
            label: String::from("-"),
        }
    }

    fn see(&mut self, v: f64, label: impl FnOnce() -> String) {
        if v > self.value || v.is_nan() {
            self.value = v;
            self.label = label();
        }
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let model = two_state();
    let (_, spec) = decompose_model(&model).unwrap();
    let f = StateFunction::new(vec![1.0, -1.0]).unwrap();
    let cfg = QuadratureConfig::default();
    let mut worst = Worst::new();
    let mut lhs_ok = true;
    for p in [1.2, 1.5, 2.0, 3.0, 7.0] {
        let r = hardy_stein_verify(&spec, &model, p, &f, &cfg, false).unwrap();
        lhs_ok &= r.lhs == 2.0;
        worst.see(r.rel_residual, || format!("p={p}"));
        // independent oracle: p E_p[P_t f] = 4p e^{-2pt} integrates to 2
        let oracle = 4.0 * p / (2.0 * p);
        worst.see(rel(r.rhs, oracle), || format!("p={p} vs oracle"));
    }
    let elapsed = start.elapsed();
    let ok = lhs_ok && worst.value <= 1e-9 && elapsed < Duration::from_secs(1);
    outcome(
        ok,
        format!(
            "lhs=2: {lhs_ok}, max rel_residual {:.2e} ({}), {:.3} s",
            worst.value,
            worst.label,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let cfg = QuadratureConfig::default();
    let mut worst = Worst::new();
    let mut runs = 0;
    for i in 0..100 {
        let model = random_model(i, 50);
        let (_, spec) = decompose_model(&model).unwrap();
        let f = random_function(model.n(), 0.4, 7000 + i);
        for p in [1.5, 2.0, 3.0] {
            for t in [0.1, 1.0, 10.0] {
                let r = finite_horizon_check(&spec, &model, p, &f, t, &cfg, false).unwrap();
                worst.see(r.rel_residual, || format!("model {i} n={} p={p} T={t}", model.n()));
                runs += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = worst.value <= 1e-8 && elapsed < Duration::from_secs(60);
    outcome(
        ok,
        format!(
            "{runs} runs, max rel_residual {:.2e} ({}), {:.1} s",
            worst.value,
            worst.label,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let cfg = QuadratureConfig::default();
    let mut worst = Worst::new();
    let mut worst_tail = Worst::new();
    let mut hyp = true;
    for i in 0..100 {
        let model = random_model(i, 50);
        let (_, spec) = decompose_model(&model).unwrap();
        let f = random_function(model.n(), 0.4, 7000 + i).centered(&model);
        for p in [1.5, 2.0, 3.0] {
            let r = hardy_stein_verify(&spec, &model, p, &f, &cfg, false).unwrap();
            hyp &= r.hypothesis_ii.decay.holds;
            worst.see(r.rel_residual, || format!("model {i} p={p}"));
            worst_tail.see(r.tail_bound / r.lhs, || format!("model {i} p={p}"));
        }
    }
    let ok = hyp && worst.value <= 1e-7 && worst_tail.value <= 1e-9;
    outcome(
        ok,
        format!(
            "zero-mean: {hyp}, max rel_residual {:.2e} ({}), max tail/lhs {:.2e} ({})",
            worst.value, worst.label, worst_tail.value, worst_tail.label
        ),
    )
}

fn criterion_4() -> Outcome {
    let schedule = default_schedule();
    let mut worst = Worst::new();
    let mut converged = true;
    let mut r = rng(44);
    for i in 0..100u64 {
        let model = random_model(200 + i, 30);
        let (gen, spec) = decompose_model(&model).unwrap();
        let u = random_function(model.n(), r.random_range(-0.5..0.5), 8000 + i);
        let p = r.random_range(1.1..8.0);
        let rep = pform_report(&model, &gen, &spec, p, &u, &schedule).unwrap();
        converged &= rep.converged;
        let dev = rel(rep.value_limit, rep.value_generator)
            .max(rel(rep.value_generator, rep.value_jump))
            .max(rel(rep.value_limit, rep.value_jump));
        worst.see(dev, || format!("triple {i} p={p:.3}"));
    }
    let ok = converged && worst.value <= 1e-7;
    outcome(
        ok,
        format!(
            "all converged: {converged}, max pairwise deviation {:.2e} ({})",
            worst.value, worst.label
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut worst = Worst::new();
    let mut r = rng(55);
    for i in 0..40u64 {
        let model = random_model(300 + i, 25);
        let (_, spec) = decompose_model(&model).unwrap();
        let u = random_function(model.n(), r.random_range(-0.5..0.5), 9000 + i);
        let p = r.random_range(1.1..8.0);
        let v = u.map(|x| spow(x, p - 1.0));
        for t in [1e-3, 0.1, 1.0] {
            let a = approx_form(&spec, t, &u, &v).unwrap();
            let b = approx_pform_kernel(&spec, t, p, &u, KernelVariant::Bregman).unwrap();
            let c = approx_pform_kernel(&spec, t, p, &u, KernelVariant::Symmetrized).unwrap();
            let dev = rel(a, b).max(rel(b, c)).max(rel(a, c));
            worst.see(dev, || format!("input {i} p={p:.3} t={t}"));
        }
    }
    outcome(
        worst.value <= 1e-10,
        format!("max three-way deviation {:.2e} ({})", worst.value, worst.label),
    )
}

fn criterion_6() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for p in [1.5, 3.0, 7.0] {
        let scan = default_comparability_scan(p).unwrap();
        let anchor = scan.r_at_one == ratio_at_one(p) && scan.r_at_one == 2.0 * (p - 1.0) / p;
        let dev = (scan.r_at_large_pos - 1.0).abs().max((scan.r_at_large_neg - 1.0).abs());
        let large = dev <= 1e-3;

        let mut r = rng(66 + p as u64);
        let mut sandwich = true;
        for _ in 0..10_000 {
            let a: f64 = r.random_range(-1.0..1.0) * 10f64.powf(r.random_range(-4.0..4.0));
            let b: f64 = r.random_range(-1.0..1.0) * 10f64.powf(r.random_range(-4.0..4.0));
            let f = bregman_f(p, a, b).unwrap();
            let g = spow(b, 0.5 * p) - spow(a, 0.5 * p);
            let g2 = g * g;
            let slack = 1e-9 * g2 + 1e-12 * (a.abs().max(b.abs())).powf(p);
            sandwich &= scan.c_est * g2 <= f + slack && f <= scan.c_upper_est * g2 + slack;
        }
        ok &= anchor && large && sandwich;
        notes.push(format!(
            "p={p}: r(1) exact {anchor}, |r(±1e6)-1|={dev:.3e}, sandwich {sandwich}"
        ));
    }
    outcome(ok, notes.join("; "))
}

fn criterion_7() -> Outcome {
    let mut ratio_lo = f64::INFINITY;
    let mut ratio_hi = 0.0f64;
    let mut small = Worst::new();
    for i in 0..20u64 {
        let model = random_model(400 + i, 40);
        let (_, spec) = decompose_model(&model).unwrap();
        for t in [1e-2, 1e-3] {
            let ratio =
                spec.vague_limit_residual(&model, t).unwrap() / spec.vague_limit_residual(&model, t / 2.0).unwrap();
            ratio_lo = ratio_lo.min(ratio);
            ratio_hi = ratio_hi.max(ratio);
        }
        let r4 = spec.vague_limit_residual(&model, 1e-4).unwrap() / model.max_jump();
        small.see(r4, || format!("model {i}"));
    }
    let ok = ratio_lo >= 1.8 && ratio_hi <= 2.2 && small.value <= 1e-3;
    outcome(
        ok,
        format!(
            "halving ratios in [{ratio_lo:.4}, {ratio_hi:.4}], max residual(1e-4)/max J {:.2e}",
            small.value
        ),
    )
}

fn lp_pow(u: &StateFunction, m: &[f64], p: f64) -> f64 {
    u.lp_norm_pow(m, p)
}

fn criterion_8() -> Outcome {
    let tol = 1e-12;
    let mut contraction = Worst::new();
    let mut law = Worst::new();
    let mut conserve = Worst::new();
    let mut adjoint = Worst::new();
    let mut monotone = Worst::new();
    let mut r = rng(88);
    for i in 0..100u64 {
        let model = random_model(500 + i, 40);
        let (_, spec) = decompose_model(&model).unwrap();
        let m = model.measure();
        let u = random_function(model.n(), r.random_range(-0.5..0.5), 10_000 + i);
        let v = random_function(model.n(), 0.0, 20_000 + i);
        let t = 10f64.powf(r.random_range(-3.0..1.0));
        let s = 10f64.powf(r.random_range(-3.0..1.0));
        let ptu = spec.apply_pt(t, &u).unwrap();

        for p in [1.5, 2.0, 3.0, 7.0] {
            let excess = (ptu.lp_norm(m, p) - u.lp_norm(m, p)) / u.lp_norm(m, p);
            contraction.see(excess, || format!("input {i} p={p}"));
        }
        let lhs = spec.apply_pt(t + s, &u).unwrap();
        let rhs = spec.apply_pt(s, &ptu).unwrap();
        let d = lhs
            .values()
            .iter()
            .zip(rhs.values())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        law.see(d / u.sup_norm(), || format!("input {i}"));

        let one = spec.apply_pt(t, &StateFunction::constant(model.n(), 1.0)).unwrap();
        conserve.see(one.values().iter().fold(0.0f64, |a, x| a.max((x - 1.0).abs())), || {
            format!("input {i}")
        });

        let ptv = spec.apply_pt(t, &v).unwrap();
        let a = ptu.inner(&v, m);
        let b = u.inner(&ptv, m);
        let scale = lp_pow(&u, m, 2.0).sqrt() * lp_pow(&v, m, 2.0).sqrt();
        adjoint.see((a - b).abs() / scale, || format!("input {i}"));

        let ts = [1e-3, 1e-2, 0.1, 1.0, 10.0];
        let vals: Vec<f64> = ts.iter().map(|&t| approx_form(&spec, t, &u, &u).unwrap()).collect();
        for w in vals.windows(2) {
            monotone.see((w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE), || {
                format!("input {i}")
            });
        }
    }
    let ok = contraction.value <= tol
        && law.value <= tol
        && conserve.value <= tol
        && adjoint.value <= tol
        && monotone.value <= tol;
    outcome(
        ok,
        format!(
            "contraction excess {:.1e}, semigroup law {:.1e}, conservativeness {:.1e}, self-adjointness {:.1e}, E^(t) increase {:.1e} (tol {tol:.0e})",
            contraction.value, law.value, conserve.value, adjoint.value, monotone.value
        ),
    )
}

fn criterion_9() -> Outcome {
    let model = two_state();
    let (_, spec) = decompose_model(&model).unwrap();
    let u = StateFunction::new(vec![1.0, -1.0]).unwrap();
    let seed = 20_240_915;
    let ens = simulate_paths(&model, 0, 0.5, 100_000, seed).unwrap();
    let chk = empirical_pt_check(&ens, &spec, &u).unwrap();
    let exact_ok = (chk.exact - (-1f64).exp()).abs() < 1e-14;
    let dev = (chk.empirical_mean - (-1f64).exp()).abs() / chk.standard_error;

    let st = simulate_stationary(&model, 0.5, 100_000, seed).unwrap();
    let db = detailed_balance_check(&st).unwrap();

    let replay = simulate_paths(&model, 0, 0.5, 100_000, seed).unwrap();
    let bytes_a = serde_json::to_vec(&ens).unwrap();
    let bytes_b = serde_json::to_vec(&replay).unwrap();
    let identical = bytes_a == bytes_b;

    let ok = exact_ok && dev <= 5.0 && db.max_abs_z <= 5.0 && identical;
    outcome(
        ok,
        format!(
            "empirical {:.5} vs e^-1, {:.2} standard errors; flux max |z| {:.2}; replay identical {identical}",
            chk.empirical_mean, dev, db.max_abs_z
        ),
    )
}

fn disconnected_model() -> Model {
    // two random blocks glued into one state space with no edges between them
    let a = random_model(900, 12);
    let b = random_model(901, 9);
    let n = a.n() + b.n();
    let mut measure = a.measure().to_vec();
    measure.extend_from_slice(b.measure());
    let mut jumps = vec![0.0; n * n];
    for x in 0..a.n() {
        for y in 0..a.n() {
            jumps[x * n + y] = a.jump(x, y);
        }
    }
    for x in 0..b.n() {
        for y in 0..b.n() {
            jumps[(a.n() + x) * n + a.n() + y] = b.jump(x, y);
        }
    }
    Model::new(measure, jumps).unwrap()
}

fn criterion_10() -> Outcome {
    let cfg = QuadratureConfig::default();
    let mut worst = Worst::new();
    let mut violated = true;
    let mut cases: Vec<(String, Model, StateFunction)> = Vec::new();
    for i in 0..20u64 {
        let model = random_model(600 + i, 30);
        let f = random_function(model.n(), 0.8, 30_000 + i);
        cases.push((format!("model {i}"), model, f));
    }
    let dis = disconnected_model();
    let f = random_function(dis.n(), 0.0, 31_000);
    let centered = f.centered(&dis);
    // zero global mean but different means on the two blocks
    let shifted: Vec<f64> = centered
        .values()
        .iter()
        .enumerate()
        .map(|(x, v)| v + if x < 12.min(dis.n()) { 0.5 } else { -0.5 })
        .collect();
    cases.push((String::from("disconnected"), dis, StateFunction::new(shifted).unwrap()));

    for (label, model, f) in &cases {
        let (_, spec) = decompose_model(model).unwrap();
        let verdict = decay_check(model, f).unwrap();
        violated &= !verdict.holds;
        for p in [1.5, 2.0, 3.0] {
            let r = hardy_stein_verify(&spec, model, p, f, &cfg, false).unwrap();
            let predicted = verdict.surviving_mass(p);
            worst.see(rel(r.lhs - r.rhs, predicted), || format!("{label} p={p}"));
        }
    }
    outcome(
        violated && worst.value <= 1e-7,
        format!(
            "{} functions, all violate decay: {violated}, max rel error of predicted gap {:.2e} ({})",
            cases.len(),
            worst.value,
            worst.label
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("two-state closed form", criterion_1),
        ("finite-horizon identity", criterion_2),
        ("full identity", criterion_3),
        ("three p-form representations", criterion_4),
        ("kernel representations", criterion_5),
        ("comparability anchors and sandwich", criterion_6),
        ("vague limit rate", criterion_7),
        ("semigroup axioms", criterion_8),
        ("Monte Carlo cross-check", criterion_9),
        ("decay hypothesis sharpness", criterion_10),
    ];
    let mut failures = 0;
    let mut unexpected = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        let res = panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (res.ok, known) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (known)",
            (true, true) => "PASS (expected FAIL)",
        };
        if !res.ok {
            failures += 1;
        }
        if res.ok == known {
            unexpected.push(id);
        }
        println!("criterion {id:>2} {tag}  {name}: {}", res.detail);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if !unexpected.is_empty() {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
