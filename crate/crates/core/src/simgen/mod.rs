//! Synthetic respondents from known factor models.

mod fixture;
mod model;

pub use fixture::{
    efa_phase_plan, generate_rating_fixture, reference_plan, reference_shifts, AttentionPlan,
    FeaturePlan, SimulationPlan, CATEGORICAL_THRESHOLDS, NUMERICAL_THRESHOLDS,
};
pub use model::{
    discretize_likert, generate_factor_data, generate_factor_data_with, PopulationModel,
};
