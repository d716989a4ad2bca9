//! Report envelope and emission.
//!
//! Every analysis command produces the same envelope:
//!
//! ```json
//! { "config": {...}, "results": {...}, "meta": { "wall_ms": ... } }
//! ```
//!
//! `config` echoes the resolved parameters (targets *and* achieved
//! values), `results` carries exact rationals as `"p/q"` strings plus
//! the check list, and `meta` holds the only fields allowed to vary
//! between identical runs (wall time). Determinism contract: `config`
//! and `results` are byte-identical for identical (config, seed),
//! regardless of worker count.

use serde::Serialize;
use serde_json::{json, Value};

/// One verified inequality or identity, named after its guarantee.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
    /// Asserted checks drive the exit code; the rest are reported
    /// measurements.
    pub asserted: bool,
}

impl Check {
    pub fn asserted(
        name: impl Into<String>,
        expected: impl Into<String>,
        actual: impl Into<String>,
        pass: bool,
    ) -> Self {
        Check {
            name: name.into(),
            expected: expected.into(),
            actual: actual.into(),
            pass,
            asserted: true,
        }
    }

    pub fn reported(
        name: impl Into<String>,
        expected: impl Into<String>,
        actual: impl Into<String>,
        pass: bool,
    ) -> Self {
        Check {
            name: name.into(),
            expected: expected.into(),
            actual: actual.into(),
            pass,
            asserted: false,
        }
    }
}

/// What a command hands back for emission.
pub enum Payload {
    /// Standard envelope; `checks` is merged into `results`.
    Report {
        config: Value,
        results: Value,
        checks: Vec<Check>,
    },
    /// Pre-rendered output emitted verbatim (file formats, CSV).
    Raw(String),
}

pub struct Outcome {
    pub payload: Payload,
    /// Asserted checks that failed; nonzero means exit code 1.
    pub failed: usize,
}

impl Outcome {
    pub fn raw(text: String) -> Self {
        Outcome {
            payload: Payload::Raw(text),
            failed: 0,
        }
    }

    pub fn report(config: Value, results: Value, checks: Vec<Check>) -> Self {
        let failed = checks.iter().filter(|c| c.asserted && !c.pass).count();
        Outcome {
            payload: Payload::Report {
                config,
                results,
                checks,
            },
            failed,
        }
    }
}

/// Renders the outcome: JSON envelope, or a `name,expected,actual,pass`
/// CSV of the check list.
pub fn render(outcome: &Payload, csv: bool, wall_ms: u128) -> String {
    match outcome {
        Payload::Raw(text) => text.clone(),
        Payload::Report {
            config,
            results,
            checks,
        } => {
            if csv {
                let mut out = String::from("check,expected,actual,pass\n");
                for c in checks {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        csv_field(&c.name),
                        csv_field(&c.expected),
                        csv_field(&c.actual),
                        c.pass
                    ));
                }
                out
            } else {
                let mut results = results.clone();
                results["checks"] = json!(checks);
                let report = json!({
                    "config": config,
                    "results": results,
                    "meta": { "wall_ms": wall_ms as u64 },
                });
                let mut text =
                    serde_json::to_string_pretty(&report).expect("report serializes");
                text.push('\n');
                text
            }
        }
    }
}

/// Quotes a CSV field only when it needs it.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Fixed-precision float rendering so reports are byte-stable.
pub fn float(x: f64) -> String {
    format!("{x:.6}")
}
