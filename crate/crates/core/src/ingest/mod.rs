//! Instruments, response records, quality filtering and sample splitting.

pub mod instrument;
pub mod matrix;
pub mod quality;
pub mod record;
pub mod split;

pub use instrument::{
    reference_features, Domain, FeatureDescriptor, GlossaryEntry, InstrumentDefinition,
    InstrumentKind, Item, Subscale,
};
pub use matrix::{to_matrix, RatingMatrix};
pub use quality::{apply_quality_filters, MissingRule, QualityPolicy, QualityReport, TimingRule};
pub use record::{
    parse_responses, write_responses, ParsedResponses, RatingRecord, RowError, Split,
};
pub use split::{split_sample, SplitConfig, SplitUnit, StratifyBy};
