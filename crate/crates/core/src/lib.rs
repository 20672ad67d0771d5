pub mod bounds;
pub mod design;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod ingest;
pub mod ranking;
pub mod spectral;

pub use error::{Error, Result};
