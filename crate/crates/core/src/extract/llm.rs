//! Chat-completion endpoint adapter: prompt construction, response parsing
//! and positional validation of predicted XPaths.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{ExtractError, ResponseParseError};
use crate::annotations::{DataRecord, PredictionSet};
use crate::dom::{DomTree, XPath};
use crate::represent::{Representation, RepresentationKind};

pub const DEFAULT_TEMPLATE: &str = "\
You are given a web page rendered as {format_instructions}

A data record is a group of text elements that together describe one repeated entity on the page, \
for example one product, one search result or one listing. Identify every data record on the page.

Answer with a JSON array and nothing else. Each element of the array is one record, written as an \
array of the XPath strings of the text elements that belong to that record. Every XPath must \
address an element of the page below. Do not invent elements.

Page:
{payload}
";

const PAYLOAD: &str = "{payload}";
const FORMAT: &str = "{format_instructions}";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    text: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            text: DEFAULT_TEMPLATE.to_string(),
        }
    }
}

impl PromptTemplate {
    pub fn new(text: impl Into<String>) -> Result<Self, ExtractError> {
        let text = text.into();
        for p in [PAYLOAD, FORMAT] {
            if !text.contains(p) {
                return Err(ExtractError::Template(format!(
                    "template lacks the {p} placeholder"
                )));
            }
        }
        Ok(PromptTemplate { text })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Hex SHA-256 of the template text.
    pub fn sha256(&self) -> String {
        format!("{:x}", Sha256::digest(self.text.as_bytes()))
    }
}

fn format_instructions(kind: RepresentationKind) -> &'static str {
    match kind {
        RepresentationKind::SlimmedHtml => {
            "HTML with all attributes removed. Address elements with absolute XPaths such as \
             /html/body/div[2]/span[1], where [k] is the 1-based position among siblings with the same tag."
        }
        RepresentationKind::HierarchicalJson => {
            "nested JSON that mirrors the HTML element tree. Each key is a tag name, with [k] giving the \
             1-based position among siblings with the same tag, and each string value is the text of that \
             element. Build each XPath by joining the keys from the top of the object down to the text, \
             for example /html/body/ul/li[2]/span."
        }
        RepresentationKind::FlatJson => {
            "a flat JSON object that maps the absolute XPath of every text element to its text. \
             Use the keys of this object verbatim as XPaths."
        }
    }
}

/// Instantiates `template` for `rep`. Placeholders are substituted in one
/// pass, so placeholder-like text inside the payload is left alone.
pub fn build_prompt(
    rep: &Representation,
    template: &PromptTemplate,
) -> Result<String, ExtractError> {
    let text = template.text();
    if !text.contains(PAYLOAD) {
        return Err(ExtractError::Template(format!(
            "template lacks the {PAYLOAD} placeholder"
        )));
    }
    let mut out = String::with_capacity(text.len() + rep.payload.len());
    let mut rest = text;
    loop {
        let next = [PAYLOAD, FORMAT]
            .into_iter()
            .filter_map(|p| rest.find(p).map(|i| (i, p)))
            .min_by_key(|&(i, _)| i);
        match next {
            Some((i, p)) => {
                out.push_str(&rest[..i]);
                out.push_str(if p == PAYLOAD {
                    &rep.payload
                } else {
                    format_instructions(rep.kind)
                });
                rest = &rest[i + p.len()..];
            }
            None => {
                out.push_str(rest);
                return Ok(out);
            }
        }
    }
}

/// One predicted XPath before validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Candidate {
    Path(XPath),
    /// A string that is not a well-formed XPath.
    Raw(String),
}

/// Replaces code-fence markers and their language tags with spaces.
fn strip_fences(body: &str) -> String {
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(i) = rest.find("```") {
        out.push_str(&rest[..i]);
        out.push(' ');
        rest = rest[i + 3..].trim_start_matches(|c: char| c.is_ascii_alphanumeric());
    }
    out.push_str(rest);
    out
}

fn as_records(value: &Value) -> Option<Vec<Vec<Candidate>>> {
    value
        .as_array()?
        .iter()
        .map(|rec| {
            rec.as_array()?
                .iter()
                .map(|s| {
                    let s = s.as_str()?;
                    Some(match XPath::parse(s.trim()) {
                        Ok(x) => Candidate::Path(x),
                        Err(_) => Candidate::Raw(s.to_string()),
                    })
                })
                .collect()
        })
        .collect()
}

/// Finds the first JSON array of arrays of strings in a model answer.
///
/// Code fences and surrounding prose are ignored. JSON values of any other
/// shape are skipped whole; if some JSON was found but none had the right
/// shape the answer is `WrongShape`.
pub fn parse_llm_response(body: &str) -> Result<Vec<Vec<Candidate>>, ResponseParseError> {
    let text = strip_fences(body);
    let mut pos = 0;
    let mut wrong_shape: Option<String> = None;
    while let Some(off) = text[pos..].find(['[', '{']) {
        let start = pos + off;
        let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(value)) => {
                if let Some(records) = as_records(&value) {
                    return Ok(records);
                }
                if wrong_shape.is_none() {
                    let mut shown = value.to_string();
                    if shown.len() > 80 {
                        let cut = (0..=80)
                            .rev()
                            .find(|&i| shown.is_char_boundary(i))
                            .unwrap_or(0);
                        shown.truncate(cut);
                        shown.push_str("...");
                    }
                    wrong_shape = Some(shown);
                }
                pos = start + stream.byte_offset();
            }
            _ => pos = start + 1,
        }
    }
    Err(match wrong_shape {
        Some(v) => ResponseParseError::WrongShape(v),
        None => ResponseParseError::NoJsonFound,
    })
}

/// Drops candidates that do not resolve to a text-bearing node. Records keep
/// their positions and may become empty.
pub fn validate_predicted_records(cands: &[Vec<Candidate>], tree: &DomTree) -> PredictionSet {
    let mut set = PredictionSet::new(tree.page_id(), "llm");
    set.records = cands
        .iter()
        .map(|rec| {
            rec.iter()
                .filter_map(|c| match c {
                    Candidate::Path(x) => Some(x),
                    Candidate::Raw(_) => None,
                })
                .filter(|x| tree.resolve(x).is_ok_and(|id| tree.is_text_bearing(id)))
                .cloned()
                .collect::<DataRecord>()
        })
        .collect();
    set
}

fn default_api_key_env() -> String {
    "WEBREC_API_KEY".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub endpoint_url: String,
    pub model: String,
    pub temperature: f64,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    pub max_retries: u32,
    /// Per-request timeout in seconds.
    pub timeout: f64,
    pub representation_kind: RepresentationKind,
    pub max_concurrent: usize,
    /// First retry delay in milliseconds; doubles on each further retry.
    pub backoff_ms: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint_url: "http://127.0.0.1:8787/v1/chat/completions".into(),
            model: "gemini-2.5-pro-preview-03-25".into(),
            temperature: 1.0,
            api_key_env: default_api_key_env(),
            max_retries: 2,
            timeout: 120.0,
            representation_kind: RepresentationKind::FlatJson,
            max_concurrent: 2,
            backoff_ms: 500,
        }
    }
}

/// Counting semaphore bounding in-flight requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Gate {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Shareable client; one instance bounds concurrency for all pages it serves.
pub struct LlmClient {
    config: LlmConfig,
    template: PromptTemplate,
    api_key: String,
    agent: ureq::Agent,
    gate: Gate,
}

enum Attempt {
    Done(String),
    Retry(String),
    Fatal(String),
}

impl LlmClient {
    /// Reads the API key from the configured environment variable.
    pub fn new(config: LlmConfig, template: PromptTemplate) -> Result<Self, ExtractError> {
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| ExtractError::MissingApiKey(config.api_key_env.clone()))?;
        Ok(Self::with_api_key(config, template, api_key))
    }

    pub fn with_api_key(
        config: LlmConfig,
        template: PromptTemplate,
        api_key: impl Into<String>,
    ) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout.max(0.001))))
            .http_status_as_error(false)
            .build()
            .into();
        LlmClient {
            gate: Gate::new(config.max_concurrent),
            config,
            template,
            api_key: api_key.into(),
            agent,
        }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    fn attempt(&self, page_id: &str, body: &str) -> Attempt {
        let _permit = self.gate.acquire();
        let resp = self
            .agent
            .post(&self.config.endpoint_url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
            .header("X-Webrec-Page-Id", page_id)
            .send(body);
        let mut resp = match resp {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        match status {
            200..=299 => Attempt::Done(text),
            429 | 500..=599 => Attempt::Retry(format!("HTTP {status}")),
            _ => Attempt::Fatal(format!("HTTP {status}: {}", text.trim())),
        }
    }

    /// Sends the prompt, retrying transient failures. Returns the answer text
    /// and the number of attempts made.
    pub fn complete(&self, page_id: &str, prompt: &str) -> Result<(String, u32), ExtractError> {
        let body = serde_json::json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        })
        .to_string();
        let mut attempts = 0;
        loop {
            attempts += 1;
            let last = match self.attempt(page_id, &body) {
                Attempt::Done(text) => return extract_content(&text).map(|c| (c, attempts)),
                Attempt::Fatal(message) => {
                    return Err(ExtractError::Transport { attempts, message })
                }
                Attempt::Retry(message) => message,
            };
            if attempts > self.config.max_retries {
                return Err(ExtractError::Transport {
                    attempts,
                    message: last,
                });
            }
            let delay = self
                .config
                .backoff_ms
                .saturating_mul(1u64 << (attempts - 1).min(16));
            log::debug!(
                "page {page_id}: attempt {attempts} failed ({last}), retrying in {delay} ms"
            );
            std::thread::sleep(Duration::from_millis(delay));
        }
    }

    /// Prompts with `rep` and validates the answer against `tree`, the cleaned
    /// page `rep` was rendered from.
    pub fn extract(
        &self,
        rep: &Representation,
        tree: &DomTree,
    ) -> Result<PredictionSet, ExtractError> {
        let prompt = build_prompt(rep, &self.template)?;
        let (answer, attempts) = self.complete(&rep.page_id, &prompt)?;
        let cands = parse_llm_response(&answer)?;
        let mut set = validate_predicted_records(&cands, tree);
        set.page_id = rep.page_id.clone();
        set.meta = self.meta(rep.kind, attempts);
        Ok(set)
    }

    pub fn meta(&self, kind: RepresentationKind, attempts: u32) -> serde_json::Map<String, Value> {
        let mut meta = serde_json::Map::new();
        meta.insert("model".into(), self.config.model.clone().into());
        meta.insert("temperature".into(), self.config.temperature.into());
        meta.insert("representation_kind".into(), kind.as_str().into());
        meta.insert("attempt_count".into(), attempts.into());
        meta.insert("template_sha256".into(), self.template.sha256().into());
        meta
    }
}

fn extract_content(body: &str) -> Result<String, ExtractError> {
    let v: Value = serde_json::from_str(body).map_err(|e| ExtractError::Transport {
        attempts: 1,
        message: format!("endpoint returned invalid JSON: {e}"),
    })?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ExtractError::Transport {
            attempts: 1,
            message: "endpoint response lacks choices[0].message.content".into(),
        })
}

/// Convenience wrapper that builds a one-off client.
pub fn llm_extract(
    rep: &Representation,
    tree: &DomTree,
    config: &LlmConfig,
    template: &PromptTemplate,
) -> Result<PredictionSet, ExtractError> {
    LlmClient::new(config.clone(), template.clone())?.extract(rep, tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::CleanConfig;
    use crate::represent::{to_flat_json, FlatStyle};

    fn fig1() -> DomTree {
        DomTree::parse(
            "fig1",
            "<html><body><ul><li><span>Sample Product</span></li><li><span>$999.00</span></li></ul></body></html>",
            CleanConfig::default(),
        )
        .unwrap()
    }

    fn paths(c: &[Candidate]) -> Vec<String> {
        c.iter()
            .map(|c| match c {
                Candidate::Path(x) => x.to_string(),
                Candidate::Raw(s) => format!("raw:{s}"),
            })
            .collect()
    }

    #[test]
    fn prompt_contains_payload_verbatim() {
        let rep = to_flat_json(&fig1(), FlatStyle::Compact);
        let t = PromptTemplate::default();
        let p = build_prompt(&rep, &t).unwrap();
        assert!(p.contains(&rep.payload));
        assert!(!p.contains("{payload}") && !p.contains("{format_instructions}"));
        assert_eq!(p, build_prompt(&rep, &t).unwrap());
    }

    #[test]
    fn template_errors() {
        assert!(matches!(
            PromptTemplate::new("no slots {format_instructions}"),
            Err(ExtractError::Template(_))
        ));
        assert!(matches!(
            PromptTemplate::new("{payload} only"),
            Err(ExtractError::Template(_))
        ));
        assert!(PromptTemplate::new("{format_instructions}\n{payload}").is_ok());
        assert_eq!(PromptTemplate::default().sha256().len(), 64);
    }

    #[test]
    fn payload_placeholders_are_not_expanded() {
        let mut rep = to_flat_json(&fig1(), FlatStyle::Compact);
        rep.payload = "literal {payload} and {format_instructions}".into();
        let t = PromptTemplate::new("[{payload}] ({format_instructions})").unwrap();
        let p = build_prompt(&rep, &t).unwrap();
        assert!(p.starts_with("[literal {payload} and {format_instructions}] ("));
    }

    #[test]
    fn parses_fenced_and_prose_answers() {
        let r = parse_llm_response("```json [[\"/html/body/ul/li[1]/span\"]] ```").unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(paths(&r[0]), vec!["/html[1]/body[1]/ul[1]/li[1]/span[1]"]);

        let r = parse_llm_response("```json\n[[\"/a\"]]\n```\n").unwrap();
        assert_eq!(r.len(), 1);

        let r = parse_llm_response("Here are the records: [[\"/a[1]\"],[\"/b[1]\",\"/b[2]\"]]")
            .unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[1].len(), 2);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            parse_llm_response("no structure here"),
            Err(ResponseParseError::NoJsonFound)
        );
        assert_eq!(
            parse_llm_response("[unterminated"),
            Err(ResponseParseError::NoJsonFound)
        );
        assert!(matches!(
            parse_llm_response("{\"records\": [[\"/a\"]]}"),
            Err(ResponseParseError::WrongShape(_))
        ));
        assert!(matches!(
            parse_llm_response("[\"/a\", \"/b\"]"),
            Err(ResponseParseError::WrongShape(_))
        ));
        assert!(matches!(
            parse_llm_response("[[1, 2]]"),
            Err(ResponseParseError::WrongShape(_))
        ));
    }

    #[test]
    fn skips_wrong_shaped_prose_brackets() {
        let r = parse_llm_response("For li[1] and li[2] the answer is [[\"/x\"], []]").unwrap();
        assert_eq!(r.len(), 2);
        assert!(r[1].is_empty());
        assert_eq!(parse_llm_response("[]").unwrap().len(), 0);
    }

    #[test]
    fn malformed_paths_are_kept_raw() {
        let r = parse_llm_response(r#"[["/a[0]", "//div", "/a"]]"#).unwrap();
        assert_eq!(paths(&r[0]), vec!["raw:/a[0]", "raw://div", "/a[1]"]);
    }

    #[test]
    fn validation_filters_in_place() {
        let t = fig1();
        let good: XPath = "/html/body/ul/li[1]/span".parse().unwrap();
        let bad: XPath = "/html/body/ul/li[3]/span".parse().unwrap();
        let text_free: XPath = "/html/body/ul".parse().unwrap();
        let cands = vec![
            vec![Candidate::Path(good.clone()), Candidate::Path(bad.clone())],
            vec![
                Candidate::Path(bad),
                Candidate::Raw("junk".into()),
                Candidate::Path(text_free),
            ],
            vec![Candidate::Path(good.clone())],
        ];
        let set = validate_predicted_records(&cands, &t);
        assert_eq!(set.records.len(), 3);
        assert_eq!(set.records[0].len(), 1);
        assert!(set.records[1].is_empty());
        assert!(set.records[2].contains(&good));
    }
}
