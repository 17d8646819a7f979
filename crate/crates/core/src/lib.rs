pub mod cfa;
pub mod corr;
pub mod efa;
pub mod error;
pub mod ingest;
pub mod linalg;
pub mod optim;
pub mod pipeline;
pub mod reference;
pub mod reliability;
pub(crate) mod serde_matrix;
pub mod simgen;

pub use error::{Error, Result};
