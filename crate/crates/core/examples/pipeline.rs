//! Full validation run on the bundled EFA-phase fixture for the 22-item
//! numerical draft, written to a temporary directory.

use fus_core::efa::EfaConfig;
use fus_core::pipeline::{emit_report, run_pipeline, PipelineConfig, ReportFormat};

fn main() -> anyhow::Result<()> {
    let config = PipelineConfig {
        responses: Some(concat!(env!("CARGO_MANIFEST_DIR"), "/data/fixtures/efa_phase.csv").into()),
        instrument: "fus-numerical-draft".into(),
        efa: EfaConfig::with_factors(3),
        seed: 1,
        ..Default::default()
    };
    let (report, meta) = run_pipeline(&config)?;
    print!("{}", report.summary());

    let out = std::env::temp_dir().join("fus-pipeline-example");
    let files = emit_report(
        &report,
        Some(&meta),
        &out,
        &[ReportFormat::Json, ReportFormat::Text, ReportFormat::Csv],
    )?;
    println!("\nwrote {} files to {}", files.len(), out.display());
    std::process::exit(report.outcome.exit_code());
}
