//! Pipeline orchestration, reports, evaluation metrics and the
//! identifier-rename transform.

pub mod dataset;
pub mod eval;
pub mod metrics;
pub mod rename;
pub mod report;
pub mod scan;

use crate::frontend::{DiagClass, Diagnostic};

pub use dataset::{load_paired_dataset, normalized_hash, DatasetError, DatasetLoad, PairedSample};
pub use eval::{evaluate, EvalReport, SampleResult};
pub use metrics::{compute_metrics, compute_pairwise, Metrics, MetricsError, Pairwise};
pub use rename::{adaptive_rename, RenameLabel, RenameMap, RenameOutput};
pub use report::{Finding, Report, Summary, REPORT_SCHEMA};
pub use scan::{run_scan, scan_model, OracleMode, ScanArtifacts, ScanConfig, ScanError, Timings};

/// Exit status for the most severe diagnostic class present.
pub fn exit_code(diags: &[Diagnostic]) -> i32 {
    match diags.iter().map(|d| d.class).max() {
        None | Some(DiagClass::Info) | Some(DiagClass::Oracle) => 0,
        Some(DiagClass::Parse) => 3,
        Some(DiagClass::OracleFatal) => 4,
        Some(DiagClass::Config) => 2,
        Some(DiagClass::Internal) => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exit_code_follows_highest_class() {
        let d = |c| Diagnostic::new("t", c, "");
        assert_eq!(exit_code(&[]), 0);
        assert_eq!(exit_code(&[d(DiagClass::Oracle), d(DiagClass::Info)]), 0);
        assert_eq!(exit_code(&[d(DiagClass::Oracle), d(DiagClass::Parse)]), 3);
        assert_eq!(exit_code(&[d(DiagClass::OracleFatal), d(DiagClass::Parse)]), 4);
        assert_eq!(exit_code(&[d(DiagClass::OracleFatal), d(DiagClass::Config)]), 2);
        assert_eq!(exit_code(&[d(DiagClass::Internal), d(DiagClass::Config)]), 1);
    }

    const CLASSES: [DiagClass; 6] = [DiagClass::Info, DiagClass::Oracle, DiagClass::Parse, DiagClass::OracleFatal, DiagClass::Config, DiagClass::Internal];

    proptest! {
        #[test]
        fn exit_code_depends_only_on_the_top_class(ks in proptest::collection::vec(0usize..6, 0..12), rot in any::<usize>()) {
            let diags: Vec<Diagnostic> = ks.iter().map(|k| Diagnostic::new("t", CLASSES[*k], format!("{k}"))).collect();
            let top: Vec<Diagnostic> = ks.iter().max().map(|k| Diagnostic::new("other", CLASSES[*k], "")).into_iter().collect();
            prop_assert_eq!(exit_code(&diags), exit_code(&top));
            let mut shuffled = diags.clone();
            if !shuffled.is_empty() {
                let n = shuffled.len();
                shuffled.rotate_left(rot % n);
            }
            prop_assert_eq!(exit_code(&diags), exit_code(&shuffled));
        }
    }
}
