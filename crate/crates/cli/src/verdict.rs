//! Exit status as a pure function of an emitted document.

use serde_json::Value;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RESIDUAL: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub exit_code: i32,
    pub status: &'static str,
    /// Offending `p` values, or labels for non-p rows.
    pub failing: Vec<Value>,
}

impl Verdict {
    pub fn to_value(&self) -> Value {
        serde_json::json!({
            "status": self.status,
            "exit_code": self.exit_code,
            "failing": self.failing,
        })
    }
}

fn num(v: &Value, key: &str) -> Option<f64> {
    v.get(key).and_then(Value::as_f64)
}

fn flag(v: &Value, pointer: &str) -> Option<bool> {
    v.pointer(pointer).and_then(Value::as_bool)
}

fn rows<'a>(doc: &'a Value, key: &str) -> Result<&'a Vec<Value>, String> {
    doc.get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| format!("document has no `{key}` array"))
}

fn from_lists(hypothesis: Vec<Value>, residual: Vec<Value>) -> Verdict {
    if !hypothesis.is_empty() {
        Verdict {
            exit_code: EXIT_HYPOTHESIS,
            status: "hypothesis violated",
            failing: hypothesis,
        }
    } else if !residual.is_empty() {
        Verdict {
            exit_code: EXIT_RESIDUAL,
            status: "residual failure",
            failing: residual,
        }
    } else {
        Verdict {
            exit_code: EXIT_OK,
            status: "pass",
            failing: Vec::new(),
        }
    }
}

/// Recomputes the verdict of any document written by the CLI. Only fields
/// present in the document are consulted.
pub fn verdict_of(doc: &Value) -> Result<Verdict, String> {
    let command = doc
        .get("command")
        .and_then(Value::as_str)
        .ok_or("document has no `command` field")?;
    let mut hypothesis = Vec::new();
    let mut residual = Vec::new();
    match command {
        "verify" => {
            let tol = num(doc, "tolerance").ok_or("verify document has no `tolerance`")?;
            let tail_tol = num(doc, "tail_tolerance").ok_or("verify document has no `tail_tolerance`")?;
            for r in rows(doc, "reports")? {
                let p = r.get("p").cloned().unwrap_or(Value::Null);
                let kind = r.get("kind").and_then(Value::as_str).unwrap_or("hardy_stein");
                if kind == "hardy_stein" && flag(r, "/hypothesis_ii/decay/holds") != Some(true) {
                    hypothesis.push(p);
                    continue;
                }
                let rel = num(r, "rel_residual").unwrap_or(f64::NAN);
                let tail = num(r, "tail_bound").unwrap_or(f64::NAN);
                let lhs = num(r, "lhs").unwrap_or(f64::NAN);
                let tail_ok = kind != "hardy_stein" || tail <= tail_tol * lhs || lhs == 0.0;
                if !(rel <= tol) || !tail_ok {
                    residual.push(p);
                }
            }
        }
        "pform" => {
            for r in rows(doc, "reports")? {
                if flag(r, "/agree") != Some(true) {
                    residual.push(r.get("p").cloned().unwrap_or(Value::Null));
                }
            }
        }
        "bregman-constants" => {}
        "vague-limit" => {
            let tol = num(doc, "tolerance").ok_or("vague-limit document has no `tolerance`")?;
            let max_jump = num(doc, "max_jump").unwrap_or(0.0);
            if let Some(last) = rows(doc, "rows")?.last() {
                let r = num(last, "residual").unwrap_or(f64::NAN);
                if !(r <= tol * max_jump.max(f64::MIN_POSITIVE)) {
                    residual.push(last.get("t").cloned().unwrap_or(Value::Null));
                }
            }
        }
        "simulate" => {
            let band = num(doc, "z_band").ok_or("simulate document has no `z_band`")?;
            if let Some(z) = doc.pointer("/pt_check/z").and_then(Value::as_f64) {
                if !(z.abs() <= band) {
                    residual.push(Value::from("pt_check"));
                }
            }
            if let Some(z) = doc.pointer("/detailed_balance/max_abs_z").and_then(Value::as_f64) {
                if !(z <= band) {
                    residual.push(Value::from("detailed_balance"));
                }
            }
        }
        other => return Err(format!("unknown command `{other}` in document")),
    }
    Ok(from_lists(hypothesis, residual))
}
