//! Reliability metrics and per-feature understandability scores.

mod metrics;
mod scoring;

pub use metrics::{
    ave, cronbach_alpha, factor_reliability, mcdonald_omega, reliability_from_cfa,
    reliability_from_efa, FactorReliability, ReliabilityReport,
};
pub use scoring::{
    rank_features, score_features, ScoreTable, SubscaleScore, UnderstandabilityScore,
};
