#![allow(dead_code)]

use jumpform::{builder_complete_graph, builder_random_connected, Model, StateFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The two-state model `m = (1,1)`, `J(0,1) = 1`.
pub fn two_state() -> Model {
    builder_complete_graph(2, 1.0).unwrap()
}

/// Random connected model number `i`: size in `2..=max_n`, density and seed
/// derived from `i`.
pub fn random_model(i: u64, max_n: usize) -> Model {
    let mut r = rng(0x5eed_0000 + i);
    let n = r.random_range(2..=max_n);
    let density = r.random_range(0.05..0.6);
    builder_random_connected(n, density, 1.0, 1000 + i).unwrap()
}

/// Values uniform on `[-1, 1]` plus `offset`.
pub fn random_function(n: usize, offset: f64, seed: u64) -> StateFunction {
    let mut r = rng(seed);
    StateFunction::new((0..n).map(|_| r.random_range(-1.0..1.0) + offset).collect()).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / a.abs().max(b.abs())
    }
}
