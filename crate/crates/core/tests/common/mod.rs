#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde_json::Value;
use webrec::annotations::{load_annotations, PageAnnotation};
use webrec::dom::{parse_mhtml, CleanConfig, DomTree};

pub const CORPUS: [&str; 5] = ["fig1", "product", "hotel", "table", "listing"];

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn read(rel: &str) -> Vec<u8> {
    std::fs::read(fixture(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

pub fn page(name: &str, config: CleanConfig) -> DomTree {
    let raw = parse_mhtml(name, &read(&format!("corpus/{name}.mhtml"))).unwrap();
    DomTree::parse(name, &raw.html, config).unwrap()
}

pub fn gold() -> BTreeMap<String, PageAnnotation> {
    load_annotations(fixture("corpus/annotations.json"))
        .unwrap()
        .into_iter()
        .map(|a| (a.page_id.clone(), a))
        .collect()
}

/// Flattens a hierarchical JSON value back into `(path, text)` pairs, where
/// paths use the explicit-index form.
pub fn flatten_hierarchical(value: &Value) -> BTreeMap<String, String> {
    fn key_step(key: &str) -> String {
        if key.ends_with(']') {
            key.to_string()
        } else {
            format!("{key}[1]")
        }
    }
    fn walk(prefix: &str, v: &Value, out: &mut BTreeMap<String, String>) {
        match v {
            Value::String(s) => {
                out.insert(prefix.to_string(), s.clone());
            }
            Value::Object(map) => {
                for (k, child) in map {
                    if k == "#text" {
                        out.insert(prefix.to_string(), child.as_str().unwrap().to_string());
                    } else {
                        walk(&format!("{prefix}/{}", key_step(k)), child, out);
                    }
                }
            }
            other => panic!("unexpected value {other}"),
        }
    }
    let mut out = BTreeMap::new();
    walk("", value, &mut out);
    out
}
