//! Parse the bundled EFA-phase response file, apply the quality filters and
//! split the retained respondents into EFA and CFA halves.

use std::fs::File;
use std::io::BufReader;

use fus_core::ingest::{
    apply_quality_filters, parse_responses, split_sample, InstrumentDefinition, QualityPolicy,
    SplitConfig,
};

fn main() -> anyhow::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/fixtures/efa_phase.csv");
    let parsed = parse_responses(
        BufReader::new(File::open(path)?),
        &InstrumentDefinition::builtins(),
    )?;
    println!(
        "{} records parsed, {} malformed rows",
        parsed.records.len(),
        parsed.errors.len()
    );

    let (kept, q) = apply_quality_filters(parsed.records, &QualityPolicy::default())?;
    println!(
        "attention: {} removed, missing: {} removed, timing: {} flagged",
        q.n_removed_attention, q.n_removed_missing, q.n_flagged_time
    );
    if let Some((lo, hi)) = q.time_whiskers {
        println!("completion-time whiskers {lo:.1} s .. {hi:.1} s");
    }
    println!("{} records retained", kept.len());

    let (a, b) = split_sample(
        kept,
        &SplitConfig {
            seed: 7,
            ..Default::default()
        },
    )?;
    println!("split: {} records for EFA, {} for CFA", a.len(), b.len());
    Ok(())
}
