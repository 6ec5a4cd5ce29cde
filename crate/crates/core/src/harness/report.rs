//! Findings report, `weft-report/1`, and its SARIF 2.1.0 export.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::frontend::Diagnostic;
use crate::reasoning::Outcome;

pub const REPORT_SCHEMA: &str = "weft-report/1";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDelta {
    pub added: usize,
    pub removed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub files: usize,
    pub statements: usize,
    pub functions: usize,
    /// Edge counts by kind before and after enhancement.
    pub edges_original: BTreeMap<String, usize>,
    pub edges_enhanced: BTreeMap<String, usize>,
    pub audit: BTreeMap<String, EdgeDelta>,
    pub oracle_queries: usize,
    pub invocations: usize,
    pub units: usize,
    pub vulnerable: usize,
    pub not_vulnerable: usize,
    pub undetermined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    /// `<invocation id>/<cwe>`.
    pub id: String,
    pub file: String,
    pub line: u32,
    pub api: String,
    pub cwe: String,
    pub verdict: Outcome,
    pub confidence: f64,
    pub low_confidence: bool,
    pub explanation: String,
    /// One entry per round; `null` when the round did not parse.
    pub votes: Vec<Option<bool>>,
    /// Relative to the output directory, when contexts were dumped.
    pub context_file: Option<String>,
    pub context_lines: BTreeMap<String, Vec<(u32, u32)>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub repo: String,
    pub summary: Summary,
    pub findings: Vec<Finding>,
    pub diagnostics: Vec<Diagnostic>,
    pub exit_code: i32,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Report> {
        serde_json::from_str(text)
    }

    pub fn to_sarif(&self) -> serde_json::Value {
        let mut rules: BTreeMap<&str, &str> = BTreeMap::new();
        for f in &self.findings {
            rules.entry(f.cwe.as_str()).or_insert(f.api.as_str());
        }
        let rules: Vec<_> = rules
            .keys()
            .map(|cwe| {
                json!({
                    "id": cwe,
                    "name": cwe,
                    "helpUri": format!("https://cwe.mitre.org/data/definitions/{}.html", cwe.trim_start_matches("CWE-")),
                })
            })
            .collect();
        let results: Vec<_> = self
            .findings
            .iter()
            .map(|f| {
                let level = match f.verdict {
                    Outcome::Vulnerable => "error",
                    Outcome::Undetermined => "warning",
                    Outcome::NotVulnerable => "none",
                };
                json!({
                    "ruleId": f.cwe,
                    "level": level,
                    "message": {"text": format!("{} at `{}`: {}", f.cwe, f.api, if f.explanation.is_empty() { "no explanation" } else { &f.explanation })},
                    "locations": [{
                        "physicalLocation": {
                            "artifactLocation": {"uri": f.file},
                            "region": {"startLine": f.line},
                        }
                    }],
                    "partialFingerprints": {"weftFindingId": f.id},
                    "properties": {"confidence": f.confidence, "lowConfidence": f.low_confidence},
                })
            })
            .collect();
        json!({
            "$schema": "https://raw.githubusercontent.com/oasis-tcs/sarif-spec/master/Schemata/sarif-schema-2.1.0.json",
            "version": "2.1.0",
            "runs": [{
                "tool": {"driver": {"name": "weft", "version": env!("CARGO_PKG_VERSION"), "rules": rules}},
                "results": results,
            }],
        })
    }
}
