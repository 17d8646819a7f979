//! Two-factor ML + Promax EFA on the bundled final instruments' correlation
//! matrices, followed by the a-priori reduction on the 22-item draft matrix.

use fus_core::efa::{fit_efa, reduce_items, suggest_n_factors, EfaConfig, ReductionConfig};
use fus_core::reference;

fn main() -> anyhow::Result<()> {
    for (name, r) in [
        ("numerical", reference::numerical_final()),
        ("categorical", reference::categorical_final()),
    ] {
        let sol = fit_efa(&r, &EfaConfig::with_factors(2))?;
        println!(
            "{name}: converged = {}, phi12 = {:.3}",
            sol.converged,
            sol.phi[(0, 1)]
        );
        for (j, id) in sol.item_ids.iter().enumerate() {
            println!(
                "  {id}: {:>6.3} {:>6.3}  h2 = {:.3}",
                sol.pattern[(j, 0)],
                sol.pattern[(j, 1)],
                sol.communalities[j]
            );
        }
        println!(
            "  SS loadings {:.3?}, cumulative {:.3}",
            sol.variance.ss_loadings,
            sol.variance.cumulative.last().unwrap()
        );
    }

    let draft = reference::numerical_pre_efa();
    let s = suggest_n_factors(&draft);
    println!(
        "draft numerical: kaiser = {}, elbow = {}",
        s.kaiser, s.elbow
    );
    let red = reduce_items(
        &draft,
        &ReductionConfig {
            efa: EfaConfig::with_factors(3),
            ..Default::default()
        },
    )?;
    for step in &red.trace.steps {
        println!("  removed {:?} ({:?})", step.item, step.criterion);
    }
    println!(
        "  {} items remain on {} factors",
        red.items.len(),
        red.solution.n_factors
    );
    Ok(())
}
