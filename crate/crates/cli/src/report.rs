use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Value};

/// One numeric check: the observed residual and the bound it must meet.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    /// `upper`: residual ≤ tolerance. `lower`: residual ≥ tolerance.
    pub bound: Bound,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Upper,
    Lower,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub parameters: Map<String, Value>,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub outputs: Map<String, Value>,
    pub wall_time_s: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunReport {
    pub fn start(command: String) -> Self {
        Self {
            command,
            parameters: Map::new(),
            checks: Vec::new(),
            passed: true,
            outputs: Map::new(),
            wall_time_s: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters.insert(key.into(), serde_json::to_value(value).expect("plain value"));
    }

    pub fn output(&mut self, key: &str, value: impl Serialize) {
        self.outputs.insert(key.into(), serde_json::to_value(value).expect("plain value"));
    }

    /// Records `residual ≤ tolerance`. NaN fails.
    pub fn at_most(&mut self, name: &str, residual: f64, tolerance: f64) {
        self.push(name, residual, tolerance, Bound::Upper, residual <= tolerance);
    }

    /// Records `residual ≥ tolerance`. NaN fails.
    pub fn at_least(&mut self, name: &str, residual: f64, tolerance: f64) {
        self.push(name, residual, tolerance, Bound::Lower, residual >= tolerance);
    }

    fn push(&mut self, name: &str, residual: f64, tolerance: f64, bound: Bound, passed: bool) {
        self.passed &= passed;
        self.checks.push(Check {
            name: name.into(),
            passed,
            residual,
            tolerance,
            bound,
        });
    }

    pub fn finish(&mut self) {
        if let Some(t) = self.started.take() {
            self.wall_time_s = t.elapsed().as_secs_f64();
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.command);
        for c in &self.checks {
            let op = match c.bound {
                Bound::Upper => "<=",
                Bound::Lower => ">=",
            };
            s.push_str(&format!(
                "  {} {}: {:.3e} {op} {:.1e}\n",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance
            ));
        }
        for (k, v) in &self.outputs {
            s.push_str(&format!("  {k}: {v}\n"));
        }
        s.push_str(&format!(
            "  {} in {:.3}s\n",
            if self.passed { "all checks passed" } else { "some checks FAILED" },
            self.wall_time_s
        ));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_residual_fails() {
        let mut r = RunReport::start("x".into());
        r.at_most("a", f64::NAN, 1.0);
        assert!(!r.passed);
        let mut r = RunReport::start("x".into());
        r.at_least("b", 2.0, 1.0);
        r.at_most("c", 0.5, 1.0);
        assert!(r.passed);
    }

    #[test]
    fn json_lists_tolerance_next_to_residual() {
        let mut r = RunReport::start("cmd".into());
        r.param("kappa", 1.5);
        r.at_most("gap", 1e-12, 1e-10);
        r.finish();
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["checks"][0]["tolerance"], 1e-10);
        assert_eq!(v["checks"][0]["residual"], 1e-12);
        assert_eq!(v["parameters"]["kappa"], 1.5);
        assert!(v.get("outputs").is_none());
    }
}
