use std::fs;

use jumpform::{Model, StateFunction};

/// Where the test function `f` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSource {
    /// The `f` array of the model document.
    Spec,
    RandomZeroMean,
    Random,
    /// Indicator of a state minus its mean.
    Indicator(usize),
    Constant(f64),
    File(String),
}

impl FunctionSource {
    pub fn parse(text: &str) -> Result<Self, String> {
        let (head, arg) = match text.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (text, None),
        };
        match (head, arg) {
            ("spec", None) => Ok(Self::Spec),
            ("random-zero-mean", None) => Ok(Self::RandomZeroMean),
            ("random", None) => Ok(Self::Random),
            ("indicator", Some(k)) => k
                .parse()
                .map(Self::Indicator)
                .map_err(|_| format!("bad state index in `{text}`")),
            ("constant", None) => Ok(Self::Constant(1.0)),
            ("constant", Some(c)) => c
                .parse()
                .map(Self::Constant)
                .map_err(|_| format!("bad constant in `{text}`")),
            _ => Ok(Self::File(text.to_string())),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Spec => "spec".into(),
            Self::RandomZeroMean => "random-zero-mean".into(),
            Self::Random => "random".into(),
            Self::Indicator(k) => format!("indicator:{k}"),
            Self::Constant(c) => format!("constant:{c}"),
            Self::File(p) => p.clone(),
        }
    }

    pub fn resolve(&self, model: &Model, spec_f: Option<&[f64]>, seed: u64) -> Result<StateFunction, String> {
        let n = model.n();
        let f = match self {
            Self::Spec => {
                let v = spec_f.ok_or("the model document has no `f` array")?;
                StateFunction::for_model(model, v.to_vec())
            }
            Self::RandomZeroMean => Ok(StateFunction::random(n, seed).centered(model)),
            Self::Random => Ok(StateFunction::random(n, seed)),
            Self::Indicator(k) => StateFunction::centered_indicator(model, *k),
            Self::Constant(c) => StateFunction::new(vec![*c; n]),
            Self::File(path) => {
                let text = fs::read_to_string(path).map_err(|e| format!("cannot read `{path}`: {e}"))?;
                StateFunction::for_model(model, parse_numbers(&text)?)
            }
        };
        f.map_err(|e| e.to_string())
    }
}

/// A JSON array or a list of numbers separated by commas or whitespace.
fn parse_numbers(text: &str) -> Result<Vec<f64>, String> {
    let trimmed = text.trim();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed).map_err(|e| format!("bad function file: {e}"));
    }
    trimmed
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| format!("bad number `{s}` in function file"))
        })
        .collect()
}
