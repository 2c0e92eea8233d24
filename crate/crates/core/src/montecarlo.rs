//! Path simulation of the jump process with rates `J(x,y)/m(x)`.
//!
//! Path `i` draws from `ChaCha8Rng` seeded with `seed` on stream `i`, so any
//! path can be regenerated on its own and the ensemble does not depend on the
//! order in which paths are produced. All aggregates are integer counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{Model, StateFunction};
use crate::semigroup::Spectral;

/// Fewer paths than this make the standard error meaningless.
pub const MIN_PATHS_FOR_STATISTICS: usize = 100;
/// Two-sided acceptance band for the z-scores.
pub const Z_BAND: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    State(usize),
    /// `X_0` drawn from `m / m(E)`.
    Stationary,
}

/// Jump counts along one edge, in both directions, summed over paths,
/// together with the per-path net flux moments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeFlux {
    pub x: usize,
    pub y: usize,
    pub forward: u64,
    pub backward: u64,
    pub net_sum: i64,
    pub net_sq_sum: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JumpStats {
    pub total: u64,
    pub max_per_path: u64,
    /// Paths that never left their start state.
    pub frozen_paths: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathEnsemble {
    pub n_paths: usize,
    pub t_max: f64,
    pub seed: u64,
    pub start: Start,
    pub start_counts: Vec<u64>,
    /// `terminal_counts[x][y]`: paths started at `x` that sit at `y` at `t_max`.
    pub terminal_counts: Vec<Vec<u64>>,
    pub jumps: JumpStats,
    /// Largest jump time recorded in any path.
    pub last_jump_time: f64,
    pub edges: Vec<EdgeFlux>,
}

struct Sampler {
    rates: Vec<f64>,
    /// Cumulative `J(x, ·)` per row.
    cumulative: Vec<Vec<f64>>,
    measure_cumulative: Vec<f64>,
}

impl Sampler {
    fn new(model: &Model) -> Self {
        let n = model.n();
        let cumulative = (0..n)
            .map(|x| {
                let mut acc = 0.0;
                (0..n)
                    .map(|y| {
                        acc += model.jump(x, y);
                        acc
                    })
                    .collect()
            })
            .collect();
        let mut acc = 0.0;
        let measure_cumulative = model
            .measure()
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        Self {
            rates: (0..n).map(|x| model.exit_rate(x)).collect(),
            cumulative,
            measure_cumulative,
        }
    }

    fn pick(cumulative: &[f64], u: f64) -> usize {
        let total = *cumulative.last().unwrap();
        let target = u * total;
        let i = cumulative.partition_point(|c| *c <= target);
        // guard against roundoff at the top end and zero-weight entries
        let mut i = i.min(cumulative.len() - 1);
        while i > 0 && cumulative[i] == cumulative[i - 1] {
            i -= 1;
        }
        i
    }
}

fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn check_state(model: &Model, x: usize) -> Result<()> {
    if x >= model.n() {
        return Err(Error::StateOutOfRange { index: x, n: model.n() });
    }
    Ok(())
}

/// Simulates `n_paths` independent paths from `x0` up to `t_max`.
pub fn simulate_paths(model: &Model, x0: usize, t_max: f64, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    check_state(model, x0)?;
    simulate(model, Start::State(x0), t_max, n_paths, seed)
}

/// Simulates paths whose start state is drawn from the normalized measure.
pub fn simulate_stationary(model: &Model, t_max: f64, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    simulate(model, Start::Stationary, t_max, n_paths, seed)
}

fn simulate(model: &Model, start: Start, t_max: f64, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(invalid(format!("t_max must be finite and >= 0, got {t_max}")));
    }
    if n_paths == 0 {
        return Err(invalid("n_paths must be at least 1"));
    }
    let n = model.n();
    let sampler = Sampler::new(model);

    let mut edge_index = vec![usize::MAX; n * n];
    let mut edges = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            if model.jump(x, y) > 0.0 {
                edge_index[x * n + y] = edges.len();
                edge_index[y * n + x] = edges.len();
                edges.push(EdgeFlux {
                    x,
                    y,
                    forward: 0,
                    backward: 0,
                    net_sum: 0,
                    net_sq_sum: 0,
                });
            }
        }
    }

    let mut ens = PathEnsemble {
        n_paths,
        t_max,
        seed,
        start,
        start_counts: vec![0; n],
        terminal_counts: vec![vec![0; n]; n],
        jumps: JumpStats {
            total: 0,
            max_per_path: 0,
            frozen_paths: 0,
        },
        last_jump_time: 0.0,
        edges,
    };

    let mut net = vec![0i64; ens.edges.len()];
    let mut touched: Vec<usize> = Vec::new();
    for i in 0..n_paths {
        let mut rng = path_rng(seed, i);
        let x0 = match start {
            Start::State(x) => x,
            Start::Stationary => Sampler::pick(&sampler.measure_cumulative, rng.random::<f64>()),
        };
        let mut x = x0;
        let mut t = 0.0;
        let mut count = 0u64;
        loop {
            let rate = sampler.rates[x];
            if rate <= 0.0 {
                break;
            }
            let hold: f64 = rng.sample::<f64, _>(Exp1) / rate;
            t += hold;
            if t > t_max {
                break;
            }
            let y = Sampler::pick(&sampler.cumulative[x], rng.random::<f64>());
            let e = edge_index[x * n + y];
            let edge = &mut ens.edges[e];
            if x < y {
                edge.forward += 1;
                net[e] += 1;
            } else {
                edge.backward += 1;
                net[e] -= 1;
            }
            touched.push(e);
            ens.last_jump_time = ens.last_jump_time.max(t);
            count += 1;
            x = y;
        }
        for &e in &touched {
            let d = net[e];
            if d != 0 {
                ens.edges[e].net_sum += d;
                ens.edges[e].net_sq_sum += (d * d) as u64;
                net[e] = 0;
            }
        }
        touched.clear();
        ens.start_counts[x0] += 1;
        ens.terminal_counts[x0][x] += 1;
        ens.jumps.total += count;
        ens.jumps.max_per_path = ens.jumps.max_per_path.max(count);
        if count == 0 {
            ens.jumps.frozen_paths += 1;
        }
    }
    Ok(ens)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PtCheck {
    pub empirical_mean: f64,
    /// `Σ_x (N_x / N) P_t u(x)` over the realized start states.
    pub exact: f64,
    pub standard_error: f64,
    pub z: f64,
    pub within_band: bool,
}

/// `diff / se`; a difference within `noise` of zero scores 0 even when the
/// standard error vanishes.
fn z_score(diff: f64, se: f64, noise: f64) -> f64 {
    if diff.abs() <= noise {
        0.0
    } else if se == 0.0 {
        f64::INFINITY.copysign(diff)
    } else {
        diff / se
    }
}

/// Compares the empirical mean of `u(X_t)` with the spectral `P_t u`.
pub fn empirical_pt_check(ens: &PathEnsemble, spec: &Spectral, u: &StateFunction) -> Result<PtCheck> {
    if ens.n_paths < MIN_PATHS_FOR_STATISTICS {
        return Err(invalid(format!(
            "at least {MIN_PATHS_FOR_STATISTICS} paths are needed for a standard error, got {}",
            ens.n_paths
        )));
    }
    let n = spec.n();
    if u.len() != n || ens.start_counts.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: if u.len() != n { u.len() } else { ens.start_counts.len() },
        });
    }
    let pt = spec.apply_pt(ens.t_max, u)?;
    let uv = u.values();
    let total = ens.n_paths as f64;
    let (mut sum, mut exact, mut var_sum) = (0.0, 0.0, 0.0);
    for x in 0..n {
        let nx = ens.start_counts[x];
        if nx == 0 {
            continue;
        }
        let row = &ens.terminal_counts[x];
        let nxf = nx as f64;
        let sx: f64 = row.iter().zip(uv).map(|(c, v)| *c as f64 * v).sum();
        let mean_x = sx / nxf;
        let ss: f64 = row.iter().zip(uv).map(|(c, v)| *c as f64 * (v - mean_x).powi(2)).sum();
        if nx > 1 {
            var_sum += nxf * ss / (nxf - 1.0);
        }
        sum += sx;
        exact += nxf * pt.values()[x];
    }
    let empirical_mean = sum / total;
    let exact = exact / total;
    let standard_error = var_sum.sqrt() / total;
    let z = z_score(empirical_mean - exact, standard_error, 1e-12 * u.sup_norm());
    Ok(PtCheck {
        empirical_mean,
        exact,
        standard_error,
        z,
        within_band: z.abs() <= Z_BAND,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeBalance {
    pub x: usize,
    pub y: usize,
    pub forward: u64,
    pub backward: u64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetailedBalanceCheck {
    pub edges: Vec<EdgeBalance>,
    pub max_abs_z: f64,
    pub holds: bool,
}

/// Flux symmetry `#(x→y) ≈ #(y→x)` for paths started from the stationary
/// measure, tested through the per-path net flux.
pub fn detailed_balance_check(ens: &PathEnsemble) -> Result<DetailedBalanceCheck> {
    if ens.start != Start::Stationary {
        return Err(invalid("detailed balance needs a stationary-start ensemble"));
    }
    if ens.n_paths < MIN_PATHS_FOR_STATISTICS {
        return Err(invalid(format!(
            "at least {MIN_PATHS_FOR_STATISTICS} paths are needed for a standard error, got {}",
            ens.n_paths
        )));
    }
    let total = ens.n_paths as f64;
    let edges: Vec<EdgeBalance> = ens
        .edges
        .iter()
        .map(|e| {
            let mean = e.net_sum as f64 / total;
            let var = (e.net_sq_sum as f64 - total * mean * mean) / (total - 1.0);
            let se = (var.max(0.0) / total).sqrt();
            EdgeBalance {
                x: e.x,
                y: e.y,
                forward: e.forward,
                backward: e.backward,
                z: z_score(mean, se, 0.0),
            }
        })
        .collect();
    let max_abs_z = edges.iter().map(|e| e.z.abs()).fold(0.0, f64::max);
    Ok(DetailedBalanceCheck {
        holds: max_abs_z <= Z_BAND,
        edges,
        max_abs_z,
    })
}
