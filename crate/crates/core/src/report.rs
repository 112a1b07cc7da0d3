//! Machine-readable verification reports.
//!
//! Reports serialize with sorted keys and every float written with 17
//! significant digits, so identical runs give identical bytes.

use serde::Serialize;
use serde_json::Value;

use crate::chart::Chart;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Theorem-level anchors a check may cite.
pub const ANCHORS: &[&str] = &[
    "Def. Sasaki",
    "Def. 3-Sasaki",
    "Prop. identities and their cyclic permutations",
    "Prop. Einstein with Einstein constant",
    "Prop. on cones",
    "Thm. A",
    "Thm. B",
    "Thm. B (a)",
    "Thm. B (b)",
    "Prop. on adapted scales (a)",
    "Prop. on adapted scales (b)",
    "Prop. on adapted scales (c)",
    "Lemma (a)",
    "Lemma (b)",
    "Lemma (c)",
    "Lemma (d)",
    "Lemma, second derivative identity",
    "Thm. on descent",
    "Thm. on tractor descent",
    "Quaternionic change formula",
    "Thm. D (a)",
    "Thm. D (b)",
    "Hermitian condition",
    "Def. quaternionic Heisenberg algebra",
    "Holonomy reduction",
    "Tractor curvature",
    "Numerical hygiene",
];

pub fn is_anchor(s: &str) -> bool {
    ANCHORS.contains(&s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChartDescriptor {
    pub name: String,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl From<&Chart> for ChartDescriptor {
    fn from(c: &Chart) -> Self {
        Self { name: c.name().to_string(), lo: c.lo().to_vec(), hi: c.hi().to_vec() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelDescriptor {
    pub name: String,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub chart: Option<ChartDescriptor>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub check_name: String,
    pub paper_anchor: String,
    pub n_points: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// `passed` is `max_residual ≤ tolerance`; NaN never passes.
    pub fn new(name: impl Into<String>, anchor: &str, n_points: usize, max_residual: f64, tolerance: f64) -> Self {
        debug_assert!(is_anchor(anchor), "unknown anchor {anchor}");
        Self {
            check_name: name.into(),
            paper_anchor: anchor.to_string(),
            n_points,
            max_residual,
            tolerance,
            passed: max_residual <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub artifact_version: String,
    pub models: Vec<ModelDescriptor>,
    pub checks: Vec<Check>,
    pub wall_time: Option<f64>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self { artifact_version: ARTIFACT_VERSION.to_string(), models: Vec::new(), checks: Vec::new(), wall_time: None }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report is serializable");
        let mut out = String::new();
        write_value(&v, 0, &mut out);
        out.push('\n');
        out
    }
}

impl Default for VerificationReport {
    fn default() -> Self {
        Self::new()
    }
}

/// `x` with 17 significant digits; non-finite values become `null`.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => out.push_str(&u.to_string()),
            (None, Some(i)) => out.push_str(&i.to_string()),
            _ => out.push_str(&format_f64(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) if a.iter().all(|x| x.is_number()) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(x, indent, out);
            }
            out.push(']');
        }
        Value::Array(a) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) => {
            out.push_str("{\n");
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(&m[*k], indent + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_is_sorted_and_fixed_precision() {
        let mut r = VerificationReport::new();
        r.checks.push(Check::new("a", "Thm. A", 3, 0.1, 1e-7));
        r.checks.push(Check::new("b", "Thm. A", 3, f64::NAN, 1e-7));
        let s = r.to_json();
        assert!(s.contains("\"max_residual\": 1.0000000000000001e-1"));
        assert!(s.contains("\"max_residual\": null"));
        assert!(s.find("\"artifact_version\"").unwrap() < s.find("\"checks\"").unwrap());
        assert!(!r.passed());
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["checks"][0]["tolerance"].as_f64(), Some(1e-7));
    }

    #[test]
    fn nan_never_passes() {
        assert!(!Check::new("x", "Thm. A", 1, f64::NAN, 1.0).passed);
        assert!(Check::new("x", "Thm. A", 1, 1.0, 1.0).passed);
    }
}
