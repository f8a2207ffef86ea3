pub mod config;
pub mod dates;
pub mod error;
pub mod ingest;
pub mod keywords;
pub mod normalize;
pub mod pipeline;
pub mod report;
pub mod scoring;
pub mod series;
pub mod smoothing;
pub mod truncation;

pub use error::{Error, Result};
