//! Finite symmetric jump models `(E, m, J)`.
//!
//! A [`Model`] holds a strictly positive reference measure `m` on `n` states
//! and a dense symmetric jump intensity matrix `J` with zero diagonal. All
//! downstream objects (generator, semigroup, forms) are derived from it.
//!
//! Models come from three places: the explicit constructor, the parametric
//! builders used as fixtures, and the key–value model-spec document read by
//! the CLI (see [`build_model_from_spec`]).

use std::collections::VecDeque;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    n: usize,
    measure: Vec<f64>,
    jumps: Vec<f64>,
}

/// One broken model invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Asymmetric {
        x: usize,
        y: usize,
        forward: f64,
        backward: f64,
    },
    DiagonalJump {
        x: usize,
        weight: f64,
    },
    NonPositiveMeasure {
        x: usize,
        value: f64,
    },
    NegativeJump {
        x: usize,
        y: usize,
        weight: f64,
    },
    NonFinite {
        x: usize,
        y: Option<usize>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Asymmetric {
                x,
                y,
                forward,
                backward,
            } => {
                write!(f, "asymmetric jump at ({x}, {y}): {forward} != {backward}")
            }
            Violation::DiagonalJump { x, weight } => {
                write!(f, "diagonal jump at state {x} (weight {weight})")
            }
            Violation::NonPositiveMeasure { x, value } => {
                write!(f, "nonpositive measure at state {x}: {value}")
            }
            Violation::NegativeJump { x, y, weight } => {
                write!(f, "negative jump weight at ({x}, {y}): {weight}")
            }
            Violation::NonFinite { x, y: Some(y) } => write!(f, "non-finite jump at ({x}, {y})"),
            Violation::NonFinite { x, y: None } => write!(f, "non-finite measure at state {x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub violations: Vec<Violation>,
    /// Connected components of the jump graph, each sorted ascending.
    pub components: Vec<Vec<usize>>,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Model {
    /// Builds and validates a model from a measure and a dense row-major
    /// `n × n` jump matrix.
    pub fn new(measure: Vec<f64>, jumps: Vec<f64>) -> Result<Self> {
        let model = Self::new_unchecked(measure, jumps)?;
        let diag = validate_model(&model);
        if diag.is_valid() {
            Ok(model)
        } else {
            Err(Error::InvalidModel(diag.violations))
        }
    }

    /// Builds a model without checking the invariants. Only the shape is
    /// checked; use [`validate_model`] to inspect the result.
    pub fn new_unchecked(measure: Vec<f64>, jumps: Vec<f64>) -> Result<Self> {
        let n = measure.len();
        if n == 0 {
            return Err(invalid("model needs at least one state"));
        }
        if jumps.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                got: jumps.len(),
            });
        }
        Ok(Self { n, measure, jumps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    /// Row-major `n × n` jump matrix.
    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    #[inline]
    pub fn jump(&self, x: usize, y: usize) -> f64 {
        self.jumps[x * self.n + y]
    }

    pub fn total_mass(&self) -> f64 {
        self.measure.iter().sum()
    }

    pub fn max_jump(&self) -> f64 {
        self.jumps.iter().copied().fold(0.0, f64::max)
    }

    /// Total jump rate out of `x`, `Σ_y J(x,y) / m(x)`.
    pub fn exit_rate(&self, x: usize) -> f64 {
        let row = &self.jumps[x * self.n..(x + 1) * self.n];
        row.iter().sum::<f64>() / self.measure[x]
    }

    pub fn components(&self) -> Vec<Vec<usize>> {
        connected_components(self.n, |x, y| self.jump(x, y) != 0.0 || self.jump(y, x) != 0.0)
    }

    /// Serializes to the explicit model-spec document (upper-triangle jump
    /// list). Reading it back with [`build_model_from_spec`] reproduces the
    /// model bit for bit.
    pub fn to_spec_string(&self) -> String {
        let mut jumps = Vec::new();
        for x in 0..self.n {
            for y in x + 1..self.n {
                let w = self.jump(x, y);
                if w != 0.0 {
                    jumps.push((x, y, w));
                }
            }
        }
        let doc = ExplicitDoc {
            n: self.n,
            measure: self.measure.clone(),
            jumps,
        };
        toml::to_string(&doc).expect("explicit model document always serializes")
    }
}

#[derive(Serialize)]
struct ExplicitDoc {
    n: usize,
    measure: Vec<f64>,
    jumps: Vec<(usize, usize, f64)>,
}

fn connected_components(n: usize, adjacent: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                if !seen[y] && adjacent(x, y) {
                    seen[y] = true;
                    comp.push(y);
                    queue.push_back(y);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Checks every model invariant and reports the jump-graph components.
pub fn validate_model(model: &Model) -> Diagnostics {
    let n = model.n;
    let mut violations = Vec::new();
    for (x, &m) in model.measure.iter().enumerate() {
        if !m.is_finite() {
            violations.push(Violation::NonFinite { x, y: None });
        } else if m <= 0.0 {
            violations.push(Violation::NonPositiveMeasure { x, value: m });
        }
    }
    for x in 0..n {
        let d = model.jump(x, x);
        if d != 0.0 {
            violations.push(Violation::DiagonalJump { x, weight: d });
        }
        for y in 0..n {
            let w = model.jump(x, y);
            if !w.is_finite() {
                violations.push(Violation::NonFinite { x, y: Some(y) });
            } else if w < 0.0 {
                violations.push(Violation::NegativeJump { x, y, weight: w });
            }
        }
        for y in x + 1..n {
            let (a, b) = (model.jump(x, y), model.jump(y, x));
            if a != b {
                violations.push(Violation::Asymmetric {
                    x,
                    y,
                    forward: a,
                    backward: b,
                });
            }
        }
    }
    Diagnostics {
        violations,
        components: model.components(),
    }
}

/// A real-valued function on the states of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateFunction(Vec<f64>);

impl StateFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("state function entry {i} is not finite")));
        }
        Ok(Self(values))
    }

    /// Like [`StateFunction::new`], additionally checking the length
    /// against `model`.
    pub fn for_model(model: &Model, values: Vec<f64>) -> Result<Self> {
        if values.len() != model.n() {
            return Err(Error::LengthMismatch {
                expected: model.n(),
                got: values.len(),
            });
        }
        Self::new(values)
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    /// Entries uniform on `[-1, 1]`, reproducible from `seed`.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self((0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
    }

    /// `1_{x = k}` minus its m-mean on the component of `k`.
    pub fn centered_indicator(model: &Model, k: usize) -> Result<Self> {
        if k >= model.n() {
            return Err(Error::StateOutOfRange { index: k, n: model.n() });
        }
        let mut v = vec![0.0; model.n()];
        v[k] = 1.0;
        Ok(Self(v).centered(model))
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `Σ |u(x)|^p m(x)`.
    pub fn lp_norm_pow(&self, measure: &[f64], p: f64) -> f64 {
        self.0.iter().zip(measure).map(|(u, m)| u.abs().powf(p) * m).sum()
    }

    /// `(Σ |u(x)|^p m(x))^{1/p}`.
    pub fn lp_norm(&self, measure: &[f64], p: f64) -> f64 {
        self.lp_norm_pow(measure, p).powf(1.0 / p)
    }

    /// `⟨u, v⟩_m = Σ u(x) v(x) m(x)`.
    pub fn inner(&self, other: &StateFunction, measure: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .zip(measure)
            .map(|((a, b), m)| a * b * m)
            .sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> StateFunction {
        StateFunction(self.0.iter().map(|&v| f(v)).collect())
    }

    /// m-weighted mean.
    pub fn mean(&self, measure: &[f64]) -> f64 {
        let mass: f64 = measure.iter().sum();
        self.0.iter().zip(measure).map(|(u, m)| u * m).sum::<f64>() / mass
    }

    /// Subtracts the m-weighted mean on each connected component.
    pub fn centered(&self, model: &Model) -> StateFunction {
        let mut out = self.0.clone();
        for comp in model.components() {
            let mass: f64 = comp.iter().map(|&x| model.measure[x]).sum();
            let mean = comp.iter().map(|&x| self.0[x] * model.measure[x]).sum::<f64>() / mass;
            for &x in &comp {
                out[x] -= mean;
            }
        }
        StateFunction(out)
    }
}

impl From<StateFunction> for Vec<f64> {
    fn from(f: StateFunction) -> Self {
        f.0
    }
}

/// Complete graph on `n` states, unit measure, `J(x,y) = weight` for `x != y`.
pub fn builder_complete_graph(n: usize, weight: f64) -> Result<Model> {
    if n < 2 {
        return Err(invalid(format!("complete_graph needs n >= 2, got {n}")));
    }
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(invalid(format!("complete_graph needs weight > 0, got {weight}")));
    }
    let mut jumps = vec![weight; n * n];
    for x in 0..n {
        jumps[x * n + x] = 0.0;
    }
    Model::new(vec![1.0; n], jumps)
}

/// Ring of `n` states with polynomially decaying jumps
/// `J(x,y) = d(x,y)^{-1-alpha}`, `d` the ring distance. A lattice stand-in
/// for the fractional Laplacian.
pub fn builder_alpha_stable_ring(n: usize, alpha: f64) -> Result<Model> {
    if n < 3 {
        return Err(invalid(format!("alpha_stable_ring needs n >= 3, got {n}")));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid(format!("alpha_stable_ring needs 0 < alpha < 2, got {alpha}")));
    }
    let mut jumps = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            if x != y {
                let diff = x.abs_diff(y);
                let d = diff.min(n - diff) as f64;
                jumps[x * n + y] = d.powf(-1.0 - alpha);
            }
        }
    }
    Model::new(vec![1.0; n], jumps)
}

/// Random connected model used as a test fixture.
///
/// A random spanning tree guarantees connectivity; every other pair is joined
/// with probability `density`. Edge weights are uniform on `[0.2, 1]`, the
/// measure uniform on `[0.5, 2]`, and `J` is finally rescaled so the largest
/// exit rate equals `max_rate`.
pub fn builder_random_connected(n: usize, density: f64, max_rate: f64, seed: u64) -> Result<Model> {
    if n < 2 {
        return Err(invalid(format!("random_connected needs n >= 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(invalid(format!("density must lie in [0, 1], got {density}")));
    }
    if !(max_rate > 0.0 && max_rate.is_finite()) {
        return Err(invalid(format!("max_rate must be positive, got {max_rate}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let measure: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let mut jumps = vec![0.0; n * n];
    let set = |jumps: &mut Vec<f64>, x: usize, y: usize, w: f64| {
        jumps[x * n + y] = w;
        jumps[y * n + x] = w;
    };
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    for i in 1..n {
        let parent = order[rng.random_range(0..i)];
        let w = rng.random_range(0.2..1.0);
        set(&mut jumps, order[i], parent, w);
    }
    for x in 0..n {
        for y in x + 1..n {
            let roll: f64 = rng.random();
            if jumps[x * n + y] == 0.0 && roll < density {
                let w = rng.random_range(0.2..1.0);
                set(&mut jumps, x, y, w);
            }
        }
    }
    let top = (0..n)
        .map(|x| jumps[x * n..(x + 1) * n].iter().sum::<f64>() / measure[x])
        .fold(0.0, f64::max);
    let scale = max_rate / top;
    for w in jumps.iter_mut() {
        *w *= scale;
    }
    Model::new(measure, jumps)
}

/// A parsed model-spec document.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub model: Model,
    /// Optional explicit state function under the key `f`.
    pub function: Option<Vec<f64>>,
}

/// Parses a model-spec document and returns the validated model.
///
/// ```toml
/// n = 2
/// measure = [1.0, 1.0]
/// jumps = [[0, 1, 1.0]]
/// ```
///
/// or a named builder with its parameters at the top level:
///
/// ```toml
/// builder = "complete_graph"
/// n = 3
/// weight = 2.0
/// ```
pub fn build_model_from_spec(text: &str) -> Result<Model> {
    parse_model_document(text).map(|d| d.model)
}

pub fn parse_model_document(text: &str) -> Result<ModelDocument> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    let model = match table.get("builder") {
        Some(b) => {
            let name = b
                .as_str()
                .ok_or_else(|| Error::Parse("`builder` must be a string".into()))?;
            build_named(name, &table)?
        }
        None => build_explicit(&table)?,
    };
    let function = match table.get("f") {
        Some(v) => {
            let values = number_array(v, "f")?;
            if values.len() != model.n() {
                return Err(Error::LengthMismatch {
                    expected: model.n(),
                    got: values.len(),
                });
            }
            Some(values)
        }
        None => None,
    };
    Ok(ModelDocument { model, function })
}

fn number(v: &toml::Value, what: &str) -> Result<f64> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Parse(format!("`{what}` must be a number"))),
    }
}

fn index(v: &toml::Value, what: &str) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::Parse(format!("`{what}` must be a nonnegative integer"))),
    }
}

fn number_array(v: &toml::Value, what: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| Error::Parse(format!("`{what}` must be an array")))?
        .iter()
        .map(|x| number(x, what))
        .collect()
}

fn required<'a>(table: &'a toml::Table, key: &str) -> Result<&'a toml::Value> {
    table
        .get(key)
        .ok_or_else(|| Error::Parse(format!("missing key `{key}`")))
}

fn build_named(name: &str, table: &toml::Table) -> Result<Model> {
    let n = index(required(table, "n")?, "n")?;
    let opt = |key: &str, default: f64| -> Result<f64> { table.get(key).map_or(Ok(default), |v| number(v, key)) };
    match name {
        "complete_graph" => builder_complete_graph(n, opt("weight", 1.0)?),
        "alpha_stable_ring" => builder_alpha_stable_ring(n, number(required(table, "alpha")?, "alpha")?),
        "random_connected" => {
            let seed = table.get("seed").map_or(Ok(0), |v| index(v, "seed"))? as u64;
            builder_random_connected(n, opt("density", 0.3)?, opt("max_rate", 1.0)?, seed)
        }
        other => Err(Error::Parse(format!("unknown builder `{other}`"))),
    }
}

fn build_explicit(table: &toml::Table) -> Result<Model> {
    let n = index(required(table, "n")?, "n")?;
    let measure = number_array(required(table, "measure")?, "measure")?;
    if measure.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: measure.len(),
        });
    }
    if let Some((x, &m)) = measure.iter().enumerate().find(|(_, m)| !(**m > 0.0)) {
        return Err(Error::InvalidModel(vec![Violation::NonPositiveMeasure { x, value: m }]));
    }
    let entries = match table.get("jumps") {
        Some(v) => v
            .as_array()
            .ok_or_else(|| Error::Parse("`jumps` must be an array of [i, j, w] triples".into()))?
            .clone(),
        None => Vec::new(),
    };
    let mut jumps = vec![0.0; n * n];
    let mut given = vec![false; n * n];
    for entry in &entries {
        let triple = entry
            .as_array()
            .filter(|t| t.len() == 3)
            .ok_or_else(|| Error::Parse("each jump entry must be [i, j, w]".into()))?;
        let x = index(&triple[0], "jump index")?;
        let y = index(&triple[1], "jump index")?;
        let w = number(&triple[2], "jump weight")?;
        for idx in [x, y] {
            if idx >= n {
                return Err(Error::StateOutOfRange { index: idx, n });
            }
        }
        if x == y {
            return Err(Error::DiagonalJump(x));
        }
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidModel(vec![Violation::NegativeJump { x, y, weight: w }]));
        }
        for (a, b) in [(x, y), (y, x)] {
            let k = a * n + b;
            if given[k] && jumps[k] != w {
                return Err(Error::AsymmetricDuplicate {
                    x,
                    y,
                    forward: w,
                    backward: jumps[k],
                });
            }
        }
        jumps[x * n + y] = w;
        jumps[y * n + x] = w;
        given[x * n + y] = true;
        given[y * n + x] = true;
    }
    Model::new(measure, jumps)
}
