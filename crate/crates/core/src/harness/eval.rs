//! Scans both variants of every pair and scores the predictions.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{load_paired_dataset, PairedSample};
use super::metrics::{compute_metrics, compute_pairwise, Metrics, Pairwise};
use super::report::Report;
use super::scan::{run_scan, ScanConfig, ScanError};
use crate::reasoning::Outcome;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub id: String,
    pub vulnerable_pred: bool,
    pub patched_pred: bool,
    pub vulnerable_exit: i32,
    pub patched_exit: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: Metrics,
    pub pairwise: Pairwise,
    pub samples: Vec<SampleResult>,
    pub rejected: Vec<(String, String)>,
}

/// A variant is predicted vulnerable when any finding (restricted to the
/// pair's CWE when given) is judged vulnerable.
pub fn predict(report: &Report, cwe: Option<&str>) -> bool {
    report.findings.iter().any(|f| f.verdict == Outcome::Vulnerable && cwe.is_none_or(|c| c == f.cwe))
}

fn variant_config(base: &ScanConfig, sample: &PairedSample, variant: &str, repo: &Path) -> ScanConfig {
    let sub = |d: &Option<PathBuf>| d.as_ref().map(|d| d.join(&sample.id).join(variant));
    ScanConfig { repo: repo.to_path_buf(), out: sub(&base.out), transcript: sub(&base.transcript), ..base.clone() }
}

/// Scans run in parallel across pairs; `base.out` and `base.transcript`
/// get one `<id>/<variant>` subdirectory per scan.
pub fn evaluate(dataset: &Path, base: &ScanConfig) -> Result<EvalReport, ScanError> {
    let load = load_paired_dataset(dataset).map_err(|e| ScanError::Config(e.to_string()))?;
    let samples = load
        .pairs
        .par_iter()
        .map(|s| {
            let v = run_scan(&variant_config(base, s, "vulnerable", &s.vulnerable))?;
            let p = run_scan(&variant_config(base, s, "patched", &s.patched))?;
            let cwe = s.cwe.as_deref();
            Ok(SampleResult {
                id: s.id.clone(),
                vulnerable_pred: predict(&v.report, cwe),
                patched_pred: predict(&p.report, cwe),
                vulnerable_exit: v.report.exit_code,
                patched_exit: p.report.exit_code,
            })
        })
        .collect::<Result<Vec<_>, ScanError>>()?;
    if samples.is_empty() {
        return Err(ScanError::Config("dataset has no usable pairs".into()));
    }
    let mut preds = Vec::new();
    let mut labels = Vec::new();
    for s in &samples {
        preds.push((format!("{}/vulnerable", s.id), s.vulnerable_pred));
        preds.push((format!("{}/patched", s.id), s.patched_pred));
        labels.push((format!("{}/vulnerable", s.id), true));
        labels.push((format!("{}/patched", s.id), false));
    }
    let metrics = compute_metrics(&preds, &labels).map_err(|e| ScanError::Config(e.to_string()))?;
    let pairs: Vec<(bool, bool)> = samples.iter().map(|s| (s.vulnerable_pred, s.patched_pred)).collect();
    let pairwise = compute_pairwise(&pairs).map_err(|e| ScanError::Config(e.to_string()))?;
    Ok(EvalReport { metrics, pairwise, samples, rejected: load.rejected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scan::OracleMode;

    #[test]
    fn mock_eval_on_toy_pairs() {
        let d = tempfile::tempdir().unwrap();
        let w = |rel: &str, text: &str| {
            let p = d.path().join(rel);
            std::fs::create_dir_all(p.parent().unwrap()).unwrap();
            std::fs::write(p, text).unwrap();
        };
        w("a/v/R.java", "class R { void run(String c) throws Exception { Runtime.getRuntime().exec(c); } }");
        w("a/f/R.java", "class R { void run(String c) throws Exception { String s = Safe.sanitize(c); Runtime.getRuntime().exec(s); } }");
        w("b/v/Q.java", "class Q { void q(java.sql.Statement st, String id) throws Exception { st.executeQuery(\"select \" + id); } }");
        w("b/f/Q.java", "class Q { void q(java.sql.Statement st, String id) throws Exception { st.executeQuery(\"select 1\"); } }");
        let ds = d.path().join("pairs.jsonl");
        std::fs::write(&ds, "{\"id\":\"a\",\"vulnerable\":\"a/v\",\"patched\":\"a/f\",\"cwe\":\"CWE-78\"}\n{\"id\":\"b\",\"vulnerable\":\"b/v\",\"patched\":\"b/f\"}\n").unwrap();
        let cfg = ScanConfig { oracle: OracleMode::Mock, out: Some(d.path().join("out")), ..ScanConfig::default() };
        let r = evaluate(&ds, &cfg).unwrap();
        assert_eq!(r.samples.len(), 2);
        assert_eq!((r.samples[0].vulnerable_pred, r.samples[0].patched_pred), (true, false));
        assert_eq!(r.pairwise.vp_s, r.pairwise.p_c - r.pairwise.p_r);
        assert!(d.path().join("out/a/patched/report.json").exists());
    }
}
