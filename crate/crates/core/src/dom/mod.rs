//! Page ingestion and DOM addressing: MHTML decoding, forgiving HTML parsing,
//! cleaning, canonical XPaths and text-node extraction.

pub mod html;
pub mod mhtml;
pub mod tree;
pub mod xpath;

use thiserror::Error;

pub use mhtml::{parse_mhtml, RawPage};
pub use tree::{build_clean_tree, CleanConfig, DomTree, ElementNode, NodeId};
pub use xpath::{Step, XPath, XPathSyntaxError};

#[derive(Debug, Error)]
pub enum DomError {
    #[error("archive contains no text/html part")]
    NoHtmlPart,
    #[error("malformed MIME archive: {0}")]
    MalformedMime(String),
    #[error("cannot decode page text: {0}")]
    EncodingError(String),
    #[error("cannot parse markup: {0}")]
    ParseFailure(String),
    /// A path step had no matching child; `step` is 1-based.
    #[error("xpath {path} not found (no match at step {step})")]
    NotFound { path: String, step: usize },
}

/// Text nodes of a cleaned tree: the `(XPath, text)` universe of a page.
pub fn extract_text_nodes(tree: &DomTree) -> Vec<(XPath, String)> {
    tree.text_nodes()
        .into_iter()
        .map(|(x, t)| (x, t.to_string()))
        .collect()
}
