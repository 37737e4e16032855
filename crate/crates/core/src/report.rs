//! JSON check-report schema shared by all verifiers.
//!
//! Every verdict serializes to the same shape so downstream tooling can
//! aggregate reports from any suite:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "check": "frame_function_identities",
//!   "parameters": { "h": 1e-3, "dim": 3 },
//!   "max_residual": 2.1e-7,
//!   "tolerance": 5e-5,
//!   "pass": true,
//!   "samples": 200,
//!   "notes": []
//! }
//! ```
//!
//! `parameters` is a free-form object echoing the inputs that produced the
//! verdict; `notes` carries caveats (for example the smoothness assumption
//! baked into the finite-difference checks).

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One verdict: a named check, the residual it measured, the tolerance it
/// was held to, and whether it passed.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckReport {
    pub schema_version: u32,
    pub check: String,
    pub parameters: Value,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(
        check: impl Into<String>,
        parameters: Value,
        max_residual: f64,
        tolerance: f64,
        samples: usize,
    ) -> CheckReport {
        CheckReport {
            schema_version: REPORT_SCHEMA_VERSION,
            check: check.into(),
            parameters,
            max_residual,
            tolerance,
            pass: max_residual <= tolerance,
            samples,
            notes: Vec::new(),
        }
    }

    /// A report whose verdict is not residual-vs-tolerance (e.g. a covering
    /// fraction); the caller supplies the pass flag directly.
    pub fn with_verdict(
        check: impl Into<String>,
        parameters: Value,
        max_residual: f64,
        tolerance: f64,
        pass: bool,
        samples: usize,
    ) -> CheckReport {
        CheckReport {
            schema_version: REPORT_SCHEMA_VERSION,
            check: check.into(),
            parameters,
            max_residual,
            tolerance,
            pass,
            samples,
            notes: Vec::new(),
        }
    }

    pub fn note(mut self, text: impl Into<String>) -> CheckReport {
        self.notes.push(text.into());
        self
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("CheckReport serializes")
    }
}

/// Convenience for building the `parameters` object.
pub fn params(pairs: &[(&str, Value)]) -> Value {
    let mut map = serde_json::Map::new();
    for (k, v) in pairs {
        map.insert((*k).to_string(), v.clone());
    }
    Value::Object(map)
}

pub fn num(x: f64) -> Value {
    json!(x)
}
