//! Correlation matrices and factorability statistics.

pub mod matrix;
pub mod stats;

pub use matrix::CorrelationMatrix;
pub use stats::{
    bartlett_test, chi_square_cdf, chi_square_sf, factorability, flag_low_correlation_items,
    format_p, item_total_correlations, item_total_from_correlation, kmo, pearson, pearson_matrix,
    BartlettTest, FactorabilityReport, ItemTotal, ItemTotalReport, Kmo,
};
