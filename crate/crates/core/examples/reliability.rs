//! Omega, AVE and alpha from reference and CFA loadings, then feature
//! scores on a simulated rating file.

use fus_core::cfa::{build_cfa, fit_ml, CfaOptions, Identification, ModelSpec, SampleMoments};
use fus_core::ingest::{apply_quality_filters, InstrumentDefinition, QualityPolicy};
use fus_core::reference;
use fus_core::reliability::{ave, mcdonald_omega, reliability_from_cfa, score_features};
use fus_core::simgen::{generate_rating_fixture, reference_plan};

fn main() -> anyhow::Result<()> {
    for f in 0..2 {
        let l = reference::factor_loadings(&reference::NUMERICAL_LOADINGS, f);
        println!(
            "reference numerical factor {}: omega = {:.3}, AVE = {:.3}",
            f + 1,
            mcdonald_omega(&l)?,
            ave(&l)?
        );
    }

    let inst = InstrumentDefinition::numerical();
    let r = reference::numerical_final();
    let model = build_cfa(
        &r.item_ids,
        &ModelSpec::from_instrument(&inst),
        Identification::Marker,
    )?;
    let fit = fit_ml(
        &model,
        &SampleMoments::from_correlation(&r, reference::N_NUMERICAL_CFA),
        &CfaOptions::default(),
    )?;
    for f in reliability_from_cfa(&fit, Some(&r))?.factors {
        println!(
            "CFA {}: omega = {:.3}, AVE = {:.3}, alpha = {:.3}",
            f.factor,
            f.omega,
            f.ave,
            f.alpha.unwrap_or(f64::NAN)
        );
    }

    let plan = reference_plan(240, 1)?;
    let (kept, _) =
        apply_quality_filters(generate_rating_fixture(&plan)?, &QualityPolicy::default())?;
    for inst in [
        InstrumentDefinition::numerical(),
        InstrumentDefinition::categorical(),
    ] {
        let table = score_features(&kept, &inst);
        println!("{}:", inst.name);
        for s in &table.scores {
            println!(
                "  {:>2}. {:<22} {:.3} (n = {})",
                s.rank, s.feature_id, s.overall, s.n_ratings
            );
        }
    }
    Ok(())
}
