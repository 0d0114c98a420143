//! LLM input representations of a cleaned tree and token-cost estimates.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dom::{DomTree, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationKind {
    SlimmedHtml,
    HierarchicalJson,
    FlatJson,
}

impl RepresentationKind {
    pub const ALL: [RepresentationKind; 3] = [
        RepresentationKind::SlimmedHtml,
        RepresentationKind::HierarchicalJson,
        RepresentationKind::FlatJson,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RepresentationKind::SlimmedHtml => "slimmed_html",
            RepresentationKind::HierarchicalJson => "hierarchical_json",
            RepresentationKind::FlatJson => "flat_json",
        }
    }

    /// File suffix used when a representation is written next to its page.
    pub fn file_suffix(self) -> &'static str {
        match self {
            RepresentationKind::SlimmedHtml => "slim.html",
            RepresentationKind::HierarchicalJson => "hier.json",
            RepresentationKind::FlatJson => "flat.json",
        }
    }
}

impl fmt::Display for RepresentationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RepresentationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "slimmed_html" | "slim" | "html" => Ok(RepresentationKind::SlimmedHtml),
            "hierarchical_json" | "hier" => Ok(RepresentationKind::HierarchicalJson),
            "flat_json" | "flat" => Ok(RepresentationKind::FlatJson),
            _ => Err(format!("unknown representation {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlatStyle {
    /// Every step carries its index: `/html[1]/body[1]/...`.
    #[default]
    Indexed,
    /// Indices are omitted where the element has no same-tag sibling.
    Compact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenMethod {
    CharsDiv4,
    WhitespacePunct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerSpec {
    pub method: TokenMethod,
    /// Characters per token; only used by `chars_div4`.
    pub divisor: usize,
}

impl Default for TokenizerSpec {
    fn default() -> Self {
        TokenizerSpec {
            method: TokenMethod::CharsDiv4,
            divisor: 4,
        }
    }
}

impl TokenizerSpec {
    pub fn whitespace_punct() -> Self {
        TokenizerSpec {
            method: TokenMethod::WhitespacePunct,
            divisor: 4,
        }
    }

    pub fn method_name(&self) -> &'static str {
        match self.method {
            TokenMethod::CharsDiv4 => "chars_div4",
            TokenMethod::WhitespacePunct => "whitespace_punct",
        }
    }
}

impl FromStr for TokenMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chars_div4" => Ok(TokenMethod::CharsDiv4),
            "whitespace_punct" => Ok(TokenMethod::WhitespacePunct),
            _ => Err(format!("unknown token method {s:?}")),
        }
    }
}

/// Heuristic token count of `payload`.
///
/// `chars_div4` counts Unicode scalar values, not bytes.
pub fn estimate_tokens(payload: &str, spec: &TokenizerSpec) -> usize {
    match spec.method {
        TokenMethod::CharsDiv4 => {
            let divisor = spec.divisor.max(1);
            payload.chars().count().div_ceil(divisor)
        }
        TokenMethod::WhitespacePunct => {
            let mut count = 0;
            let mut in_word = false;
            for c in payload.chars() {
                if c.is_alphanumeric() || c == '_' {
                    if !in_word {
                        count += 1;
                        in_word = true;
                    }
                } else {
                    in_word = false;
                    if !c.is_whitespace() {
                        count += 1;
                    }
                }
            }
            count
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Representation {
    pub kind: RepresentationKind,
    pub payload: String,
    pub token_estimate: usize,
    pub page_id: String,
}

impl Representation {
    fn new(
        tree: &DomTree,
        kind: RepresentationKind,
        payload: String,
        spec: &TokenizerSpec,
    ) -> Self {
        Representation {
            kind,
            token_estimate: estimate_tokens(&payload, spec),
            payload,
            page_id: tree.page_id().to_string(),
        }
    }

    pub fn retokenize(&mut self, spec: &TokenizerSpec) {
        self.token_estimate = estimate_tokens(&self.payload, spec);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RenderOptions {
    pub flat_style: FlatStyle,
    pub tokenizer: TokenizerSpec,
}

pub fn render(tree: &DomTree, kind: RepresentationKind, opts: &RenderOptions) -> Representation {
    let payload = match kind {
        RepresentationKind::SlimmedHtml => slimmed_payload(tree),
        RepresentationKind::HierarchicalJson => compact(&hierarchical_value(tree)),
        RepresentationKind::FlatJson => pretty(&flat_value(tree, opts.flat_style)),
    };
    Representation::new(tree, kind, payload, &opts.tokenizer)
}

pub fn to_slimmed_html(tree: &DomTree) -> Representation {
    render(
        tree,
        RepresentationKind::SlimmedHtml,
        &RenderOptions::default(),
    )
}

pub fn to_hierarchical_json(tree: &DomTree) -> Representation {
    render(
        tree,
        RepresentationKind::HierarchicalJson,
        &RenderOptions::default(),
    )
}

pub fn to_flat_json(tree: &DomTree, style: FlatStyle) -> Representation {
    let opts = RenderOptions {
        flat_style: style,
        ..Default::default()
    };
    render(tree, RepresentationKind::FlatJson, &opts)
}

fn slimmed_payload(tree: &DomTree) -> String {
    tree.to_compact_html(false)
}

fn compact(value: &Value) -> String {
    serde_json::to_string(value).expect("json values always serialize")
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("json values always serialize")
}

/// Reserved key holding an element's own text when it also has text-bearing
/// children.
pub const TEXT_KEY: &str = "#text";

pub fn hierarchical_value(tree: &DomTree) -> Value {
    let root = tree.root();
    let mut top = Map::new();
    if let Some(v) = hier_node(tree, root) {
        top.insert(node_key(tree, root), v);
    }
    Value::Object(top)
}

fn node_key(tree: &DomTree, id: NodeId) -> String {
    if tree.has_same_tag_siblings(id) {
        format!("{}[{}]", tree.tag(id), tree.position(id))
    } else {
        tree.tag(id).to_string()
    }
}

fn hier_node(tree: &DomTree, id: NodeId) -> Option<Value> {
    let mut map = Map::new();
    for &c in tree.children(id) {
        if let Some(v) = hier_node(tree, c) {
            map.insert(node_key(tree, c), v);
        }
    }
    let text = tree.text(id);
    if map.is_empty() {
        return (!text.is_empty()).then(|| Value::String(text.to_string()));
    }
    if !text.is_empty() {
        map.shift_insert(0, TEXT_KEY.to_string(), Value::String(text.to_string()));
    }
    Some(Value::Object(map))
}

/// Text nodes keyed by XPath in the requested style, in document order.
pub fn flat_map(tree: &DomTree, style: FlatStyle) -> IndexMap<String, String> {
    tree.ids()
        .filter(|&id| tree.is_text_bearing(id))
        .map(|id| {
            let key = match style {
                FlatStyle::Indexed => tree.canonical_xpath(id).to_string(),
                FlatStyle::Compact => tree.compact_xpath(id),
            };
            (key, tree.text(id).to_string())
        })
        .collect()
}

fn flat_value(tree: &DomTree, style: FlatStyle) -> Value {
    Value::Object(
        flat_map(tree, style)
            .into_iter()
            .map(|(k, v)| (k, Value::String(v)))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::CleanConfig;

    const FIG1A: &str = r#"<html><body><ul class="products">
  <li class="item"><span class="name">Sample Product</span></li>
  <li class="item"><span class="price">$999.00</span></li>
</ul></body></html>"#;

    fn fig1() -> DomTree {
        DomTree::parse("fig1", FIG1A, CleanConfig::default()).unwrap()
    }

    #[test]
    fn fig1_flat_compact_is_exact() {
        let r = to_flat_json(&fig1(), FlatStyle::Compact);
        assert_eq!(
            r.payload,
            "{\n  \"/html/body/ul/li[1]/span\": \"Sample Product\",\n  \"/html/body/ul/li[2]/span\": \"$999.00\"\n}"
        );
        assert_eq!(r.kind, RepresentationKind::FlatJson);
        assert_eq!(r.page_id, "fig1");
    }

    #[test]
    fn fig1_flat_indexed() {
        let r = to_flat_json(&fig1(), FlatStyle::Indexed);
        let v: Value = serde_json::from_str(&r.payload).unwrap();
        assert_eq!(
            v,
            serde_json::json!({
                "/html[1]/body[1]/ul[1]/li[1]/span[1]": "Sample Product",
                "/html[1]/body[1]/ul[1]/li[2]/span[1]": "$999.00"
            })
        );
    }

    #[test]
    fn fig1_hierarchical_is_exact() {
        let r = to_hierarchical_json(&fig1());
        let v: Value = serde_json::from_str(&r.payload).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"html":{"body":{"ul":{
                "li[1]":{"span":"Sample Product"},
                "li[2]":{"span":"$999.00"}}}}})
        );
    }

    #[test]
    fn empty_trees() {
        let t = DomTree::parse("e", "<html><body></body></html>", CleanConfig::default()).unwrap();
        assert_eq!(
            to_slimmed_html(&t).payload.trim_end(),
            "<html><body></body></html>"
        );
        assert_eq!(to_hierarchical_json(&t).payload, "{}");
        assert_eq!(to_flat_json(&t, FlatStyle::Indexed).payload, "{}");
    }

    #[test]
    fn mixed_content_uses_text_key() {
        let t = DomTree::parse("m", "<div>lead<p>x</p>tail</div>", CleanConfig::default()).unwrap();
        let v = hierarchical_value(&t);
        assert_eq!(
            v,
            serde_json::json!({"div": {"#text": "lead tail", "p": "x"}})
        );
        let s = serde_json::to_string(&v).unwrap();
        assert!(s.starts_with(r##"{"div":{"#text""##));
    }

    #[test]
    fn slim_drops_attributes() {
        let r = to_slimmed_html(&fig1());
        assert!(!r.payload.contains("class"));
        assert!(r.payload.contains("<span>Sample Product</span>"));
    }

    #[test]
    fn slim_payload_is_compact_fig1b() {
        let r = to_slimmed_html(&fig1());
        assert_eq!(
            r.payload,
            "<html><body><ul><li><span>Sample Product</span></li><li><span>$999.00</span></li></ul></body></html>"
        );
        let fig1b = "<html>\n  <body>\n    <ul>\n      <li><span>Sample Product</span></li>\n      <li><span>$999.00</span></li>\n    </ul>\n  </body>\n</html>";
        let a = DomTree::parse("fig1", &r.payload, CleanConfig::default()).unwrap();
        let b = DomTree::parse("fig1", fig1b, CleanConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn token_estimates() {
        let div4 = TokenizerSpec::default();
        let wp = TokenizerSpec::whitespace_punct();
        assert_eq!(estimate_tokens("", &div4), 0);
        assert_eq!(estimate_tokens("", &wp), 0);
        assert_eq!(estimate_tokens("abcdefgh", &div4), 2);
        assert_eq!(estimate_tokens("abcdefghi", &div4), 3);
        assert_eq!(estimate_tokens("é", &div4), 1);
        assert_eq!(estimate_tokens("<li>$999.00</li>", &wp), 11);
        assert_eq!(estimate_tokens("foo_bar  baz", &wp), 2);
    }

    #[test]
    fn representation_estimate_matches_payload() {
        let opts = RenderOptions {
            flat_style: FlatStyle::Compact,
            tokenizer: TokenizerSpec::whitespace_punct(),
        };
        for kind in RepresentationKind::ALL {
            let r = render(&fig1(), kind, &opts);
            assert_eq!(
                r.token_estimate,
                estimate_tokens(&r.payload, &opts.tokenizer)
            );
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in RepresentationKind::ALL {
            assert_eq!(kind.as_str().parse::<RepresentationKind>().unwrap(), kind);
        }
    }
}
