//! Toolkit for benchmarking web data-record extraction.
//!
//! Pages are ingested from MHTML snapshots into cleaned element trees
//! ([`dom`]), rendered into model-friendly inputs ([`represent`]), run through
//! extractors ([`extract`]) and scored against XPath ground truth
//! ([`eval`]). [`synth`] derives redistributable synthetic pages with
//! remapped ground truth.

pub mod annotations;
pub mod dom;
pub mod eval;
pub mod extract;
pub mod represent;
pub mod synth;

pub use annotations::{DataRecord, PageAnnotation, PredictionSet};
pub use dom::{CleanConfig, DomTree, XPath};
