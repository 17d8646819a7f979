//! Bartlett's test, KMO and item-total screening on the draft-instrument
//! correlation matrices.

use fus_core::corr::{factorability, format_p};
use fus_core::reference;

fn main() -> anyhow::Result<()> {
    for (name, r, n) in [
        (
            "numerical",
            reference::numerical_pre_efa(),
            reference::N_NUMERICAL_EFA,
        ),
        (
            "categorical",
            reference::categorical_pre_efa(),
            reference::N_CATEGORICAL_EFA,
        ),
    ] {
        let f = factorability(&r, n, None, 0.30)?;
        println!(
            "{name} (p = {}, n = {n}): chi2({}) = {:.2}, p {}, KMO = {:.3}",
            r.p(),
            f.bartlett_df,
            f.bartlett_chi2,
            format_p(f.bartlett_p),
            f.kmo_overall
        );
        let worst = f
            .item_total
            .items
            .iter()
            .min_by(|a, b| a.corrected_r.total_cmp(&b.corrected_r))
            .expect("items");
        println!(
            "  weakest item-total: {} r = {:.3}",
            worst.item, worst.corrected_r
        );
        if !f.low_correlation_items.is_empty() {
            println!("  flagged: {}", f.low_correlation_items.join(", "));
        }
    }
    Ok(())
}
