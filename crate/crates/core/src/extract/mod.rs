//! Record extractors: MDR and an LLM endpoint adapter.

pub mod llm;
pub mod mdr;
pub mod mock;

use thiserror::Error;

use crate::annotations::PredictionSet;
use crate::dom::DomTree;
use crate::represent::{render, RenderOptions, RepresentationKind};

pub use llm::{
    build_prompt, llm_extract, parse_llm_response, validate_predicted_records, Candidate,
    LlmClient, LlmConfig, PromptTemplate,
};
pub use mdr::{find_data_regions, mdr_extract, normalized_edit_distance, DataRegion, MdrParams};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResponseParseError {
    #[error("no JSON found in model response")]
    NoJsonFound,
    #[error("model response is not an array of arrays of strings: {0}")]
    WrongShape(String),
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error(transparent)]
    ResponseParse(#[from] ResponseParseError),
    #[error("prompt template: {0}")]
    Template(String),
    #[error("API key variable {0} is not set")]
    MissingApiKey(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Something that turns a cleaned page into predicted records.
pub trait Extractor: Sync {
    fn name(&self) -> &str;
    fn extract(&self, tree: &DomTree) -> Result<PredictionSet, ExtractError>;
}

pub struct MdrExtractor {
    pub params: MdrParams,
}

impl Extractor for MdrExtractor {
    fn name(&self) -> &str {
        "mdr"
    }

    fn extract(&self, tree: &DomTree) -> Result<PredictionSet, ExtractError> {
        self.params.validate()?;
        Ok(mdr_extract(tree, &self.params))
    }
}

pub struct LlmExtractor {
    pub client: LlmClient,
    pub render: RenderOptions,
}

impl LlmExtractor {
    pub fn kind(&self) -> RepresentationKind {
        self.client.config().representation_kind
    }
}

impl Extractor for LlmExtractor {
    fn name(&self) -> &str {
        "llm"
    }

    fn extract(&self, tree: &DomTree) -> Result<PredictionSet, ExtractError> {
        let rep = render(tree, self.kind(), &self.render);
        self.client.extract(&rep, tree)
    }
}
