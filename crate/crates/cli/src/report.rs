//! Versioned JSON report: one record per check, plus command tables.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::RunConfig;

pub const SCHEMA_VERSION: &str = "1.0.0";

/// Significant digits kept for every float in the output.
pub const SIG_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub status: Status,
    pub measured: Map<String, Value>,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    fn new(name: impl Into<String>, anchor: &str, status: Status) -> Self {
        CheckRecord {
            name: name.into(),
            anchor: anchor.to_string(),
            status,
            measured: Map::new(),
            residual: None,
            tolerance: None,
            note: None,
        }
    }

    /// Passes when `residual < tol`.
    pub fn bound(name: impl Into<String>, anchor: &str, residual: f64, tol: f64) -> Self {
        let status = if residual < tol {
            Status::Pass
        } else {
            Status::Fail
        };
        let mut c = Self::new(name, anchor, status);
        c.residual = Some(residual);
        c.tolerance = Some(tol);
        c
    }

    pub fn flag(name: impl Into<String>, anchor: &str, ok: bool) -> Self {
        Self::new(name, anchor, if ok { Status::Pass } else { Status::Fail })
    }

    pub fn skipped(name: impl Into<String>, anchor: &str, reason: impl Into<String>) -> Self {
        let mut c = Self::new(name, anchor, Status::Skipped);
        c.note = Some(reason.into());
        c
    }

    pub fn with(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.measured.insert(key.to_string(), v.into());
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.note = Some(s.into());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub command: crate::config::Command,
    pub config: RunConfig,
    pub checks: Vec<CheckRecord>,
    pub tables: BTreeMap<String, Value>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<BTreeMap<String, f64>>,
}

impl Report {
    pub fn new(config: &RunConfig) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: config.command,
            config: config.clone(),
            checks: Vec::new(),
            tables: BTreeMap::new(),
            summary: Summary::default(),
            timing: None,
        }
    }

    pub fn push(&mut self, c: CheckRecord) {
        match c.status {
            Status::Pass => self.summary.passed += 1,
            Status::Fail => self.summary.failed += 1,
            Status::Skipped => self.summary.skipped += 1,
        }
        self.checks.push(c);
    }

    pub fn table(&mut self, key: impl Into<String>, v: Value) {
        self.tables.insert(key.into(), v);
    }

    pub fn failed(&self) -> usize {
        self.summary.failed
    }

    pub fn exit_code(&self) -> u8 {
        u8::from(self.failed() > 0)
    }

    /// JSON text with every float cut to `SIG_DIGITS` significant digits.
    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut v = serde_json::to_value(self)?;
        round_floats(&mut v);
        let mut s = serde_json::to_string_pretty(&v)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Rounds floats in place; non-finite values become `null`.
pub fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            *v = serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number);
        }
        Value::Array(a) => a.iter_mut().for_each(round_floats),
        Value::Object(o) => o.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// `f64` to JSON, mapping non-finite values to `null`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}
