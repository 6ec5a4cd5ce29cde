use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("prediction and label ids differ: {0}")]
    IdMismatch(String),
    #[error("no pairs to score")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairwise {
    pub p_c: f64,
    pub p_r: f64,
    pub vp_s: f64,
    pub pairs: usize,
}

fn ratio(num: usize, den: usize, what: &str, warnings: &mut Vec<String>) -> f64 {
    if den == 0 {
        warnings.push(format!("{what} has a zero denominator; reported as 0"));
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 of `preds` against `labels`, matched by id.
pub fn compute_metrics(preds: &[(String, bool)], labels: &[(String, bool)]) -> Result<Metrics, MetricsError> {
    let truth: BTreeMap<&str, bool> = labels.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let pred: BTreeMap<&str, bool> = preds.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    if truth.len() != labels.len() || pred.len() != preds.len() {
        return Err(MetricsError::IdMismatch("duplicate id".into()));
    }
    if let Some(k) = pred.keys().find(|k| !truth.contains_key(*k)).or_else(|| truth.keys().find(|k| !pred.contains_key(*k))) {
        return Err(MetricsError::IdMismatch((*k).to_string()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (k, p) in &pred {
        match (p, truth[k]) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let mut warnings = Vec::new();
    let precision = ratio(tp, tp + fp, "precision", &mut warnings);
    let recall = ratio(tp, tp + fn_, "recall", &mut warnings);
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    Ok(Metrics { precision, recall, f1, tp, fp, fn_, tn, warnings })
}

/// Fractions of (vulnerable, patched) prediction pairs that are (1, 0)
/// and (0, 1), and their difference.
pub fn compute_pairwise(pairs: &[(bool, bool)]) -> Result<Pairwise, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = pairs.len() as f64;
    let p_c = pairs.iter().filter(|p| **p == (true, false)).count() as f64 / n;
    let p_r = pairs.iter().filter(|p| **p == (false, true)).count() as f64 / n;
    Ok(Pairwise { p_c, p_r, vp_s: p_c - p_r, pairs: pairs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(v: &[bool]) -> Vec<(String, bool)> {
        v.iter().enumerate().map(|(i, b)| (format!("s{i}"), *b)).collect()
    }

    #[test]
    fn perfect() {
        let l = ids(&[true, false, true]);
        let m = compute_metrics(&l, &l).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn two_tp_one_fp_two_fn() {
        let labels = ids(&[true, true, false, true, true]);
        let preds = ids(&[true, true, true, false, false]);
        let m = compute_metrics(&preds, &labels).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_), (2, 1, 2));
        // 2/3, 2/4 and their harmonic mean 4/7.
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.recall - 0.5).abs() < 1e-12);
        assert!((m.f1 - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn all_negative_predictions_warn() {
        let m = compute_metrics(&ids(&[false, false]), &ids(&[true, false])).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert_eq!(m.warnings.len(), 1);
    }

    #[test]
    fn id_mismatch() {
        let a = vec![("x".to_string(), true)];
        let b = vec![("y".to_string(), true)];
        assert_eq!(compute_metrics(&a, &b), Err(MetricsError::IdMismatch("x".into())));
    }

    #[test]
    fn pairwise_examples() {
        let p = compute_pairwise(&[(true, false), (false, true)]).unwrap();
        assert_eq!((p.p_c, p.p_r, p.vp_s), (0.5, 0.5, 0.0));
        let neg = compute_pairwise(&[(false, true), (false, true), (true, false), (true, true)]).unwrap();
        assert!(neg.vp_s < 0.0);
        assert_eq!(compute_pairwise(&[]), Err(MetricsError::EmptyInput));
    }

    proptest! {
        #[test]
        fn vp_s_is_exact_difference(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..200)) {
            let p = compute_pairwise(&pairs).unwrap();
            prop_assert_eq!(p.vp_s, p.p_c - p.p_r);
            prop_assert!((-1.0..=1.0).contains(&p.vp_s));
            prop_assert!((0.0..=1.0).contains(&p.p_c) && (0.0..=1.0).contains(&p.p_r));
        }
    }
}
