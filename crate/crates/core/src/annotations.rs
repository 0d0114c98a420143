//! Ground-truth and prediction record sets, and their JSON files.
//!
//! ```json
//! {"pages": [{"page_id": "p1", "records": [["/html[1]/body[1]/p[1]"]]}]}
//! ```
//!
//! Prediction files use the same layout with `extractor` and `meta` on every
//! page. A page whose extractor produced no usable output carries
//! `"records": null` and an `error` string.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::dom::{DomTree, XPath, XPathSyntaxError};

/// One data record: a set of XPaths. Iteration order is insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DataRecord {
    xpaths: IndexSet<XPath>,
}

impl DataRecord {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a path; returns false if it was already present.
    pub fn insert(&mut self, xpath: XPath) -> bool {
        self.xpaths.insert(xpath)
    }

    pub fn contains(&self, xpath: &XPath) -> bool {
        self.xpaths.contains(xpath)
    }

    pub fn len(&self) -> usize {
        self.xpaths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xpaths.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &XPath> {
        self.xpaths.iter()
    }

    pub fn intersection_len(&self, other: &DataRecord) -> usize {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.iter().filter(|x| large.contains(x)).count()
    }

    pub fn retain(&mut self, f: impl FnMut(&XPath) -> bool) {
        self.xpaths.retain(f);
    }
}

impl FromIterator<XPath> for DataRecord {
    fn from_iter<I: IntoIterator<Item = XPath>>(iter: I) -> Self {
        DataRecord {
            xpaths: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a DataRecord {
    type Item = &'a XPath;
    type IntoIter = indexmap::set::Iter<'a, XPath>;

    fn into_iter(self) -> Self::IntoIter {
        self.xpaths.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageAnnotation {
    pub page_id: String,
    pub records: Vec<DataRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub page_id: String,
    pub extractor: String,
    pub records: Vec<DataRecord>,
    #[serde(default)]
    pub meta: Map<String, Value>,
}

impl PredictionSet {
    pub fn new(page_id: impl Into<String>, extractor: impl Into<String>) -> Self {
        PredictionSet {
            page_id: page_id.into(),
            extractor: extractor.into(),
            records: Vec::new(),
            meta: Map::new(),
        }
    }
}

/// One page of a predictions file.
#[derive(Debug, Clone, PartialEq)]
pub enum PagePrediction {
    Available(PredictionSet),
    /// The extractor ran but produced nothing scoreable (e.g. an unparseable
    /// model response).
    Unavailable {
        page_id: String,
        extractor: String,
        reason: String,
        meta: Map<String, Value>,
    },
}

impl PagePrediction {
    pub fn page_id(&self) -> &str {
        match self {
            PagePrediction::Available(p) => &p.page_id,
            PagePrediction::Unavailable { page_id, .. } => page_id,
        }
    }

    pub fn extractor(&self) -> &str {
        match self {
            PagePrediction::Available(p) => &p.extractor,
            PagePrediction::Unavailable { extractor, .. } => extractor,
        }
    }

    pub fn meta(&self) -> &Map<String, Value> {
        match self {
            PagePrediction::Available(p) => &p.meta,
            PagePrediction::Unavailable { meta, .. } => meta,
        }
    }
}

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("page {page_id:?}, record {record}: {source}")]
    XPathSyntax {
        page_id: String,
        record: usize,
        #[source]
        source: XPathSyntaxError,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnnotationFile {
    pages: Vec<RawAnnotationPage>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnnotationPage {
    page_id: String,
    records: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct RawPredictionFile {
    pages: Vec<RawPredictionPage>,
}

#[derive(Serialize, Deserialize)]
struct RawPredictionPage {
    page_id: String,
    extractor: String,
    #[serde(default)]
    meta: Map<String, Value>,
    records: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn parse_record(
    page_id: &str,
    index: usize,
    raw: &[String],
) -> Result<DataRecord, AnnotationError> {
    let mut record = DataRecord::new();
    for s in raw {
        let xpath = XPath::parse(s).map_err(|source| AnnotationError::XPathSyntax {
            page_id: page_id.to_string(),
            record: index,
            source,
        })?;
        if !record.insert(xpath) {
            log::warn!("page {page_id:?} record {index}: duplicate xpath {s:?} dropped");
        }
    }
    Ok(record)
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>) -> Result<(), AnnotationError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(AnnotationError::Schema(format!("duplicate page_id {id:?}")));
        }
    }
    Ok(())
}

pub fn parse_annotations(text: &str) -> Result<Vec<PageAnnotation>, AnnotationError> {
    let raw: RawAnnotationFile =
        serde_json::from_str(text).map_err(|e| AnnotationError::Schema(e.to_string()))?;
    check_unique(raw.pages.iter().map(|p| p.page_id.as_str()))?;
    raw.pages
        .into_iter()
        .map(|page| {
            let records = page
                .records
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    if r.is_empty() {
                        return Err(AnnotationError::Schema(format!(
                            "page {:?}: ground-truth record {i} is empty",
                            page.page_id
                        )));
                    }
                    parse_record(&page.page_id, i, r)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(PageAnnotation {
                page_id: page.page_id,
                records,
            })
        })
        .collect()
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<PageAnnotation>, AnnotationError> {
    parse_annotations(&read(path.as_ref())?)
}

fn read(path: &Path) -> Result<String, AnnotationError> {
    fs::read_to_string(path).map_err(|source| AnnotationError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn records_to_strings(records: &[DataRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| r.iter().map(ToString::to_string).collect())
        .collect()
}

pub fn annotations_to_json(pages: &[PageAnnotation]) -> String {
    let value = serde_json::json!({
        "pages": pages.iter().map(|p| serde_json::json!({
            "page_id": p.page_id,
            "records": records_to_strings(&p.records),
        })).collect::<Vec<_>>()
    });
    let mut s = serde_json::to_string_pretty(&value).expect("json values always serialize");
    s.push('\n');
    s
}

pub fn parse_predictions(text: &str) -> Result<Vec<PagePrediction>, AnnotationError> {
    let raw: RawPredictionFile =
        serde_json::from_str(text).map_err(|e| AnnotationError::Schema(e.to_string()))?;
    check_unique(raw.pages.iter().map(|p| p.page_id.as_str()))?;
    raw.pages
        .into_iter()
        .map(|page| match page.records {
            Some(records) => {
                let records = records
                    .iter()
                    .enumerate()
                    .map(|(i, r)| parse_record(&page.page_id, i, r))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(PagePrediction::Available(PredictionSet {
                    page_id: page.page_id,
                    extractor: page.extractor,
                    records,
                    meta: page.meta,
                }))
            }
            None => Ok(PagePrediction::Unavailable {
                page_id: page.page_id,
                extractor: page.extractor,
                reason: page
                    .error
                    .unwrap_or_else(|| "no prediction available".into()),
                meta: page.meta,
            }),
        })
        .collect()
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<PagePrediction>, AnnotationError> {
    parse_predictions(&read(path.as_ref())?)
}

pub fn predictions_to_json(pages: &[PagePrediction]) -> String {
    let raw = RawPredictionFile {
        pages: pages
            .iter()
            .map(|p| match p {
                PagePrediction::Available(set) => RawPredictionPage {
                    page_id: set.page_id.clone(),
                    extractor: set.extractor.clone(),
                    meta: set.meta.clone(),
                    records: Some(records_to_strings(&set.records)),
                    error: None,
                },
                PagePrediction::Unavailable {
                    page_id,
                    extractor,
                    reason,
                    meta,
                } => RawPredictionPage {
                    page_id: page_id.clone(),
                    extractor: extractor.clone(),
                    meta: meta.clone(),
                    records: None,
                    error: Some(reason.clone()),
                },
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("prediction files always serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub page_id: String,
    /// Record paths that resolve to a node (counted per record occurrence).
    pub resolved: usize,
    pub unresolved: Vec<XPath>,
    /// Paths that resolve, but to a node without direct text.
    pub empty_text: Vec<XPath>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.unresolved.is_empty() && self.empty_text.is_empty()
    }

    pub fn failures(&self) -> usize {
        self.unresolved.len() + self.empty_text.len()
    }
}

/// Checks every record path of `ann` against the cleaned tree of its page.
pub fn validate_annotations(ann: &PageAnnotation, tree: &DomTree) -> ValidationReport {
    if ann.page_id != tree.page_id() {
        log::warn!(
            "validating annotation for {:?} against tree of {:?}",
            ann.page_id,
            tree.page_id()
        );
    }
    let mut report = ValidationReport {
        page_id: ann.page_id.clone(),
        ..Default::default()
    };
    for record in &ann.records {
        for xpath in record {
            match tree.resolve(xpath) {
                Ok(id) => {
                    report.resolved += 1;
                    if !tree.is_text_bearing(id) {
                        report.empty_text.push(xpath.clone());
                    }
                }
                Err(_) => report.unresolved.push(xpath.clone()),
            }
        }
    }
    report
}
