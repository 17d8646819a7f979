//! End-to-end orchestration and report emission.

mod config;
mod report;
mod run;

pub use config::{resolve_instrument, PipelineConfig};
pub use report::{
    emit_report, residuals_csv, Block, CfaBlock, EfaBlock, Outcome, ReportFormat, RunMetadata,
    ValidationReport, RAW_DATA_REQUIRED, SECTIONS,
};
pub use run::{
    cfa_stage, efa_stage, factorability_stage, instrument_data, load_correlation, load_responses,
    prepare_input, read_structure, reliability_stage, resolve_structure, run_pipeline,
    structure_from_efa, PreparedInput, LOW_ITEM_TOTAL,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efa::EfaConfig;

    fn corr_config(dir: &std::path::Path) -> PipelineConfig {
        let path = dir.join("num.csv");
        std::fs::write(&path, crate::reference::numerical_final().to_csv()).unwrap();
        PipelineConfig {
            corr: Some(path),
            n: Some(1198),
            efa: EfaConfig::with_factors(2),
            ..Default::default()
        }
    }

    #[test]
    fn correlation_input_skips_raw_data_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let (report, _) = run_pipeline(&corr_config(dir.path())).unwrap();
        assert!(report.is_complete(), "{:?}", report.outcome);
        assert_eq!(report.quality.reason(), Some(RAW_DATA_REQUIRED));
        assert_eq!(report.scores.reason(), Some(RAW_DATA_REQUIRED));
        let cfa = report.cfa.done().unwrap();
        assert!(cfa.target.robust.is_none());
        assert_eq!(cfa.target.model.factors, vec!["MnU", "Otp"]);
        assert!(report.summary().contains("SKIPPED: raw data required"));
    }

    #[test]
    fn emitted_bytes_are_stable() {
        let dir = tempfile::tempdir().unwrap();
        let (report, _) = run_pipeline(&corr_config(dir.path())).unwrap();
        let formats = [ReportFormat::Json, ReportFormat::Text, ReportFormat::Csv];
        let a = emit_report(&report, None, &dir.path().join("a"), &formats).unwrap();
        let b = emit_report(&report, None, &dir.path().join("b"), &formats).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
        let scores = std::fs::read_to_string(dir.path().join("a/scores.csv")).unwrap();
        assert_eq!(scores.lines().count(), 1);
    }

    #[test]
    fn failing_stage_gives_partial_report() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = corr_config(dir.path());
        cfg.efa = EfaConfig::with_factors(6);
        let (report, _) = run_pipeline(&cfg).unwrap();
        assert_eq!(report.outcome.exit_code(), 1);
        assert!(report.factorability.done().is_some());
        assert!(report.cfa.reason().is_some());
    }
}
