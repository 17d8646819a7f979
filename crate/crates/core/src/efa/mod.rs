//! Exploratory factor analysis.

mod extract;
mod reduce;
mod retention;
mod rotate;
mod solution;

pub use extract::{efa_df, extract_ml, MlExtraction, HEYWOOD_BOUND};
pub use reduce::{
    reduce_items, Criterion, Reduction, ReductionConfig, ReductionStep, ReductionTrace,
};
pub use retention::{
    acceleration_elbow, eigenvalues, scree_csv, suggest_from_eigenvalues, suggest_n_factors,
    FactorCountSuggestion,
};
pub use rotate::{rotate_promax, rotate_varimax, varimax_criterion, Promax, Varimax};
pub use solution::{
    assign_items, fit_efa, variance_accounting, Assignment, EfaConfig, FactorCount, FactorSolution,
    Rotation, VarianceAccounting,
};
