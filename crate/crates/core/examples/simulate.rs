//! Generate the EFA-phase rating fixture and summarize it.
//!
//! `cargo run --example simulate -- data/fixtures/efa_phase.csv` rewrites the
//! bundled fixture.

use std::fs::File;
use std::io::BufWriter;

use fus_core::ingest::{apply_quality_filters, write_responses, QualityPolicy};
use fus_core::simgen::{efa_phase_plan, generate_rating_fixture};

fn main() -> anyhow::Result<()> {
    let plan = efa_phase_plan(1)?;
    let records = generate_rating_fixture(&plan)?;
    println!(
        "{} ratings from {} features",
        records.len(),
        plan.features.len()
    );
    for (id, mean) in plan.expected_scores() {
        println!("  {id:<22} expected mean {mean:.3}");
    }

    let (kept, report) = apply_quality_filters(records.clone(), &QualityPolicy::default())?;
    println!(
        "quality: {} in, {} attention failures, {} retained, {} timing flags",
        report.n_input,
        report.n_removed_attention,
        kept.len(),
        report.n_flagged_time
    );

    if let Some(path) = std::env::args().nth(1) {
        write_responses(BufWriter::new(File::create(&path)?), &records)?;
        println!("wrote {path}");
    }
    Ok(())
}
