//! Verification reports.
//!
//! Every identity check produces a [`Report`] carrying the mode it ran in,
//! the truncation order, the column margin excluded from the comparison,
//! and the worst defect found. Reports serialize to the JSON shape
//! `{"identity", "mode", "q", "N", "margin", "holds", "max_defect", "details"}`.

use serde::{Deserialize, Serialize};

/// Scalar domain a check ran in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Numeric,
}

/// Worst defect entry of a comparison: a symbolic rational function in
/// exact mode, a magnitude in numeric mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Defect {
    Symbolic(String),
    Magnitude(f64),
}

impl Defect {
    pub fn zero_symbolic() -> Self {
        Defect::Symbolic("0".to_string())
    }

    /// Numeric magnitude when available.
    pub fn magnitude(&self) -> Option<f64> {
        match self {
            Defect::Symbolic(_) => None,
            Defect::Magnitude(m) => Some(*m),
        }
    }
}

/// Outcome of verifying a single identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub identity: String,
    pub mode: Mode,
    /// Numeric q, or `null` in exact mode.
    pub q: Option<f64>,
    /// Truncation order of the context the check ran at.
    #[serde(rename = "N")]
    pub order: usize,
    /// Number of top columns excluded from the comparison.
    pub margin: usize,
    pub holds: bool,
    pub max_defect: Defect,
    #[serde(default)]
    pub details: serde_json::Value,
}

impl Report {
    pub fn new(identity: impl Into<String>, mode: Mode, q: Option<f64>, order: usize) -> Self {
        Report {
            identity: identity.into(),
            mode,
            q,
            order,
            margin: 0,
            holds: false,
            max_defect: match mode {
                Mode::Exact => Defect::zero_symbolic(),
                Mode::Numeric => Defect::Magnitude(0.0),
            },
            details: serde_json::Value::Object(Default::default()),
        }
    }

    pub fn with_margin(mut self, margin: usize) -> Self {
        self.margin = margin;
        self
    }

    pub fn with_outcome(mut self, holds: bool, max_defect: Defect) -> Self {
        self.holds = holds;
        self.max_defect = max_defect;
        self
    }

    pub fn with_details(mut self, details: serde_json::Value) -> Self {
        self.details = details;
        self
    }

    /// One-line human rendering, used by the CLI text format.
    pub fn to_line(&self) -> String {
        let q = match self.q {
            Some(q0) => format!("{q0}"),
            None => "exact".to_string(),
        };
        let defect = match &self.max_defect {
            Defect::Symbolic(s) => s.clone(),
            Defect::Magnitude(m) => format!("{:.3e}", m),
        };
        format!(
            "{} [q={}, N={}, margin={}] {} (max defect {})",
            self.identity,
            q,
            self.order,
            self.margin,
            if self.holds { "PASS" } else { "FAIL" },
            defect
        )
    }
}

/// Stable ordering for report bundles: by identity name, then by the `n`
/// and `lambda` detail fields when present. Suites may run out of order;
/// rendered output must not.
pub fn sort_reports(reports: &mut [Report]) {
    reports.sort_by(|a, b| {
        let key = |r: &Report| {
            (
                r.identity.clone(),
                r.details
                    .get("n")
                    .and_then(|v| v.as_i64())
                    .unwrap_or(i64::MIN),
                r.details
                    .get("lambda")
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
            )
        };
        key(a).cmp(&key(b))
    });
}
