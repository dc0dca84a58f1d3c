//! JSON reports and CSV spectra.

use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Check {
        Check { name: name.into(), pass: value <= tolerance, value, tolerance }
    }

    /// Passes when `value ≥ tolerance`.
    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Check {
        Check { name: name.into(), pass: value >= tolerance, value, tolerance }
    }

    /// Passes when `value` equals `expected` exactly.
    pub fn equals(name: impl Into<String>, value: f64, expected: f64) -> Check {
        Check { name: name.into(), pass: value == expected, value, tolerance: expected }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PoincareJson {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub complex: String,
    pub level: Option<usize>,
    pub dims: [usize; 4],
    pub eigen_gap: Option<f64>,
    pub poincare: Option<PoincareJson>,
    pub checks: Vec<Check>,
    /// Command-specific data, keys sorted.
    pub details: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str, complex: &str, dims: [usize; 4]) -> Report {
        Report {
            command: command.into(),
            complex: complex.into(),
            level: None,
            dims,
            eigen_gap: None,
            poincare: None,
            checks: Vec::new(),
            details: Map::new(),
        }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn detail(&mut self, key: &str, v: impl Serialize) {
        self.details.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }
}

/// Pretty JSON with a trailing newline. Non-finite numbers become `null`.
pub fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

pub fn write_spectrum<W: Write>(mut w: W, values: &[f64]) -> Result<()> {
    writeln!(w, "index,eigenvalue")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{i},{v:e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_csv() {
        let mut out = Vec::new();
        write_spectrum(&mut out, &[0.0, 2.5]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "index,eigenvalue\n0,0e0\n1,2.5e0\n");
    }

    #[test]
    fn report_has_the_documented_keys() {
        let mut r = Report::new("build", "first", [1, 2, 3, 4]);
        r.checks.push(Check::at_most("x", 0.0, 1e-12));
        let v: Value = serde_json::from_str(&to_json(&r)).unwrap();
        for key in ["complex", "level", "dims", "eigen_gap", "poincare", "checks"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(r.pass());
    }
}
