//! The guide's chapters, compiled so their code listings run as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/quickstart.md")]
pub mod quickstart {}
#[doc = include_str!("../../../book/src/ingest.md")]
pub mod ingest {}
#[doc = include_str!("../../../book/src/normalize.md")]
pub mod normalize {}
#[doc = include_str!("../../../book/src/keywords.md")]
pub mod keywords {}
#[doc = include_str!("../../../book/src/scoring.md")]
pub mod scoring {}
#[doc = include_str!("../../../book/src/truncation.md")]
pub mod truncation {}
#[doc = include_str!("../../../book/src/smoothing.md")]
pub mod smoothing {}
#[doc = include_str!("../../../book/src/reporting.md")]
pub mod reporting {}
#[doc = include_str!("../../../book/src/reproducibility.md")]
pub mod reproducibility {}
#[doc = include_str!("../../../book/src/configuration.md")]
pub mod configuration {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
