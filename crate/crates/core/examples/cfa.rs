//! Two-factor and one-factor CFA on the bundled final correlation matrices,
//! with fit indices, standardized factor correlation and the nested test.

use fus_core::cfa::{
    build_cfa, fit_ml, scaled_chisq_diff, CfaOptions, Identification, ModelSpec, SampleMoments,
};
use fus_core::ingest::InstrumentDefinition;
use fus_core::reference;

fn main() -> anyhow::Result<()> {
    let cases = [
        (
            InstrumentDefinition::numerical(),
            reference::numerical_final(),
            reference::N_NUMERICAL_CFA,
        ),
        (
            InstrumentDefinition::categorical(),
            reference::categorical_final(),
            reference::N_CATEGORICAL_CFA,
        ),
    ];
    for (instrument, r, n) in cases {
        let items = instrument.item_labels();
        let sample = SampleMoments::from_correlation(&r, n);
        let two = build_cfa(
            &items,
            &ModelSpec::from_instrument(&instrument),
            Identification::Marker,
        )?;
        let one = build_cfa(
            &items,
            &ModelSpec::single_factor(&items, "G"),
            Identification::Marker,
        )?;
        let fit2 = fit_ml(&two, &sample, &CfaOptions::default())?;
        let fit1 = fit_ml(&one, &sample, &CfaOptions::default())?;
        for (label, fit) in [("2-factor", &fit2), ("1-factor", &fit1)] {
            let b = &fit.naive;
            println!(
                "{} {label}: chi2({}) = {:.2}, CFI = {:.3}, TLI = {:.3}, RMSEA = {:.3}, SRMR = {:.3}, converged = {}",
                instrument.name,
                b.df,
                b.t,
                b.cfi.unwrap_or(f64::NAN),
                b.tli.unwrap_or(f64::NAN),
                b.rmsea,
                b.srmr,
                fit.converged
            );
        }
        if let Some(st) = &fit2.standardized {
            println!(
                "  factor correlation = {:.3}",
                st.factor_correlations[(0, 1)]
            );
            for l in &st.loadings {
                println!("  {} on {}: {:.3}", l.item, l.factor, l.std_all);
            }
        }
        let diff = scaled_chisq_diff(&fit1, &fit2)?;
        println!(
            "  difference test: chi2({}) = {:.2}, p = {:.2e}",
            diff.df_d, diff.t_d, diff.p
        );
    }
    Ok(())
}
