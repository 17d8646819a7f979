//! Confirmatory factor analysis.

mod fit;
mod model;
mod robust;

pub use fit::{
    fit_indices, fit_ml, incremental_indices, rmsea, srmr, standardize, standardized_residuals,
    CfaFit, CfaOptions, Discrepancy, Estimate, FitIndices, Multiplier, NaiveBlock, RobustBlock,
    SampleMoments, Standardized, StandardizedLoading, UNIQUENESS_BOUND,
};
pub use model::{build_cfa, CfaModel, Identification, ModelSpec, ParamKind, Parameter};
pub use robust::{
    estimate_gamma, estimate_gamma_chunked, normal_theory_gamma, satorra_bentler,
    satorra_bentler_normal_theory, scaled_chisq_diff, scaled_difference, with_robust,
    GammaAccumulator, GammaMatrix, ScaledDifference,
};
