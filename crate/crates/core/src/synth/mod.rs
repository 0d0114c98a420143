//! Seeded synthetic page derivation with ground-truth remapping.
//!
//! Operations run in a fixed order, each visiting its candidate sites in
//! document order and firing with probability `op_probability`:
//! rename_attributes, replace_text_category_preserving,
//! shuffle_numeric_digits, reorder_nonrecord_siblings,
//! inject_noise_siblings, duplicate_record, drop_record, wrap_records.
//!
//! A record's *container* is the highest element above all of its nodes whose
//! subtree holds no node of any other record, stopping below `body`.
//! Records without a container (for example records that share nodes) are
//! never duplicated, dropped or wrapped.

pub mod content;
pub mod generate;
pub mod rng;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotations::{DataRecord, PageAnnotation};
use crate::dom::{DomTree, ElementNode, NodeId, XPath};
use rng::SplitMix64;

pub use generate::{generate_listing_page, to_mhtml, ListingSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthOp {
    RenameAttributes,
    ReplaceTextCategoryPreserving,
    ShuffleNumericDigits,
    ReorderNonrecordSiblings,
    InjectNoiseSiblings,
    DuplicateRecord,
    DropRecord,
    WrapRecords,
}

impl SynthOp {
    pub const ALL: [SynthOp; 8] = [
        SynthOp::RenameAttributes,
        SynthOp::ReplaceTextCategoryPreserving,
        SynthOp::ShuffleNumericDigits,
        SynthOp::ReorderNonrecordSiblings,
        SynthOp::InjectNoiseSiblings,
        SynthOp::DuplicateRecord,
        SynthOp::DropRecord,
        SynthOp::WrapRecords,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SynthOp::RenameAttributes => "rename_attributes",
            SynthOp::ReplaceTextCategoryPreserving => "replace_text_category_preserving",
            SynthOp::ShuffleNumericDigits => "shuffle_numeric_digits",
            SynthOp::ReorderNonrecordSiblings => "reorder_nonrecord_siblings",
            SynthOp::InjectNoiseSiblings => "inject_noise_siblings",
            SynthOp::DuplicateRecord => "duplicate_record",
            SynthOp::DropRecord => "drop_record",
            SynthOp::WrapRecords => "wrap_records",
        }
    }

    pub fn is_content(self) -> bool {
        matches!(
            self,
            SynthOp::ReplaceTextCategoryPreserving | SynthOp::ShuffleNumericDigits
        )
    }
}

impl fmt::Display for SynthOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SynthOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SynthOp::ALL
            .into_iter()
            .find(|op| op.as_str() == s)
            .ok_or_else(|| format!("unknown synthesis op {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub structural_ops: BTreeSet<SynthOp>,
    pub content_ops: BTreeSet<SynthOp>,
    pub op_probability: f64,
}

impl Default for SynthConfig {
    /// Every op except the count-changing duplicate/drop pair, at 0.5.
    fn default() -> Self {
        SynthConfig::with_ops(
            0,
            SynthOp::ALL
                .into_iter()
                .filter(|op| !matches!(op, SynthOp::DuplicateRecord | SynthOp::DropRecord)),
            0.5,
        )
    }
}

impl SynthConfig {
    /// Sorts `ops` into the structural and content sets.
    pub fn with_ops(
        seed: u64,
        ops: impl IntoIterator<Item = SynthOp>,
        op_probability: f64,
    ) -> Self {
        let (content_ops, structural_ops) = ops.into_iter().partition(|op| op.is_content());
        SynthConfig {
            seed,
            structural_ops,
            content_ops,
            op_probability,
        }
    }

    pub fn enabled(&self, op: SynthOp) -> bool {
        self.structural_ops.contains(&op) || self.content_ops.contains(&op)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(0.0..=1.0).contains(&self.op_probability) {
            return Err(SynthError::Config(format!(
                "op_probability {} outside [0, 1]",
                self.op_probability
            )));
        }
        if self.structural_ops.is_empty() && self.content_ops.is_empty() {
            return Err(SynthError::Config("no synthesis ops enabled".into()));
        }
        if let Some(op) = self.structural_ops.iter().find(|op| op.is_content()) {
            return Err(SynthError::Config(format!("{op} is a content op")));
        }
        if let Some(op) = self.content_ops.iter().find(|op| !op.is_content()) {
            return Err(SynthError::Config(format!("{op} is a structural op")));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("synthesis config: {0}")]
    Config(String),
    #[error("page {0:?} has no records")]
    DegenerateInput(String),
    #[error("annotation does not validate against the page: {0}")]
    InvalidAnnotation(String),
    #[error("xpath {0} is not in the transform map")]
    UnmappedXPath(XPath),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedOp {
    pub op: SynthOp,
    /// Original path of the site; `#copyN` marks a duplicated subtree.
    pub site: String,
    pub draw: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformLog {
    pub page_seed: u64,
    /// Original text-bearing path to its path in the transformed page, in
    /// original document order. Nodes removed by `drop_record` are absent.
    pub xpath_map: IndexMap<XPath, XPath>,
    pub ops_applied: Vec<AppliedOp>,
    /// Original text-bearing paths removed with dropped records.
    pub dropped: Vec<XPath>,
}

/// Rewrites every path through the log's map.
pub fn remap_records(
    records: &[DataRecord],
    log: &TransformLog,
) -> Result<Vec<DataRecord>, SynthError> {
    records
        .iter()
        .map(|r| {
            r.iter()
                .map(|x| {
                    log.xpath_map
                        .get(x)
                        .cloned()
                        .ok_or_else(|| SynthError::UnmappedXPath(x.clone()))
                })
                .collect()
        })
        .collect()
}

/// Identity of a working node: the original node id and a copy number
/// (0 for the original, n for the n-th duplicated subtree).
type Key = (usize, u32);

#[derive(Debug, Clone)]
struct WNode {
    tag: String,
    attrs: Vec<(String, String)>,
    text: String,
    children: Vec<WNode>,
    key: Option<Key>,
}

impl WNode {
    fn from_tree(tree: &DomTree, id: NodeId) -> WNode {
        WNode {
            tag: tree.tag(id).to_string(),
            attrs: tree.attrs(id).to_vec(),
            text: tree.text(id).to_string(),
            children: tree
                .children(id)
                .iter()
                .map(|&c| WNode::from_tree(tree, c))
                .collect(),
            key: Some((id.index(), 0)),
        }
    }

    fn into_element(self, keys: &mut Vec<Option<Key>>) -> ElementNode {
        keys.push(self.key);
        ElementNode {
            tag: self.tag,
            attrs: self.attrs,
            text: self.text,
            children: self
                .children
                .into_iter()
                .map(|c| c.into_element(keys))
                .collect(),
        }
    }

    fn visit_mut(&mut self, f: &mut impl FnMut(&mut WNode)) {
        f(self);
        for c in &mut self.children {
            c.visit_mut(f);
        }
    }

    /// Parent of the node with `key` and the child's index.
    fn parent_of(&mut self, key: Key) -> Option<(&mut WNode, usize)> {
        if let Some(i) = self.children.iter().position(|c| c.key == Some(key)) {
            return Some((self, i));
        }
        self.children.iter_mut().find_map(|c| c.parent_of(key))
    }

    fn recopy(&mut self, copy: u32) {
        self.visit_mut(&mut |n| {
            if let Some((id, _)) = n.key {
                n.key = Some((id, copy));
            }
        });
    }

    fn collect_keys(&self, out: &mut Vec<Key>) {
        if let Some(k) = self.key {
            out.push(k);
        }
        for c in &self.children {
            c.collect_keys(out);
        }
    }
}

const NO_INSERT_PARENTS: &[&str] = &[
    "head",
    "title",
    "textarea",
    "table",
    "thead",
    "tbody",
    "tfoot",
    "tr",
    "colgroup",
    "select",
    "optgroup",
    "option",
    "svg",
    "math",
    "iframe",
    "plaintext",
    "xmp",
    "frameset",
];

const PHRASING: &[&str] = &[
    "p", "span", "a", "b", "i", "em", "strong", "small", "label", "h1", "h2", "h3", "h4", "h5",
    "h6", "code", "cite", "q", "sub", "sup", "u", "s", "abbr", "time", "mark", "font", "button",
    "pre", "dt", "big", "tt", "var", "kbd", "samp", "del", "ins", "bdi", "bdo", "data", "output",
    "legend", "caption", "summary",
];

struct Record {
    keys: Vec<Key>,
    container: Option<Key>,
}

struct Engine<'a> {
    tree: &'a DomTree,
    config: &'a SynthConfig,
    rng: SplitMix64,
    log: TransformLog,
    root: WNode,
    records: Vec<Record>,
    copies: u32,
}

impl Engine<'_> {
    fn site(&self, key: Key) -> String {
        let path = self.tree.canonical_xpath(self.id(key.0)).to_string();
        if key.1 == 0 {
            path
        } else {
            format!("{path}#copy{}", key.1)
        }
    }

    fn id(&self, index: usize) -> NodeId {
        self.tree
            .ids()
            .nth(index)
            .expect("key refers to an original node")
    }

    fn fire(&mut self, op: SynthOp, key: Key) -> bool {
        let (hit, draw) = self.rng.chance(self.config.op_probability);
        if hit {
            let site = self.site(key);
            self.log.ops_applied.push(AppliedOp { op, site, draw });
        }
        hit
    }

    fn preorder_keys(&self) -> Vec<Key> {
        let mut keys = Vec::new();
        self.root.collect_keys(&mut keys);
        keys
    }

    fn with_node(&mut self, key: Key, f: impl FnOnce(&mut WNode)) {
        if self.root.key == Some(key) {
            f(&mut self.root);
        } else if let Some((parent, i)) = self.root.parent_of(key) {
            f(&mut parent.children[i]);
        }
    }

    fn node_ref(&self, key: Key) -> Option<&WNode> {
        fn find(n: &WNode, key: Key) -> Option<&WNode> {
            if n.key == Some(key) {
                return Some(n);
            }
            n.children.iter().find_map(|c| find(c, key))
        }
        find(&self.root, key)
    }

    fn rename_attributes(&mut self) {
        let mut dict: BTreeMap<String, String> = BTreeMap::new();
        let mut used: BTreeSet<String> = BTreeSet::new();
        for key in self.preorder_keys() {
            if self.node_ref(key).is_none_or(|n| n.attrs.is_empty())
                || !self.fire(SynthOp::RenameAttributes, key)
            {
                continue;
            }
            let mut attrs = self
                .node_ref(key)
                .map(|n| n.attrs.clone())
                .unwrap_or_default();
            for (_, value) in attrs.iter_mut() {
                let tokens: Vec<String> = value
                    .split_whitespace()
                    .map(|tok| {
                        if let Some(t) = dict.get(tok) {
                            return t.clone();
                        }
                        let fresh = loop {
                            let candidate = format!("t{:06x}", self.rng.below(1 << 24));
                            if used.insert(candidate.clone()) {
                                break candidate;
                            }
                        };
                        dict.insert(tok.to_string(), fresh.clone());
                        fresh
                    })
                    .collect();
                *value = tokens.join(" ");
            }
            self.with_node(key, |n| n.attrs = attrs);
        }
    }

    fn rewrite_texts(&mut self, op: SynthOp) {
        for key in self.preorder_keys() {
            let Some(text) = self.node_ref(key).map(|n| n.text.clone()) else {
                continue;
            };
            let eligible = match op {
                SynthOp::ShuffleNumericDigits => content::digit_count(&text) >= 2,
                _ => !text.is_empty(),
            };
            if !eligible || !self.fire(op, key) {
                continue;
            }
            let new = match op {
                SynthOp::ShuffleNumericDigits => content::shuffle_digits(&text, &mut self.rng),
                _ => content::replace_text(&text, &mut self.rng),
            };
            self.with_node(key, |n| n.text = new);
        }
    }

    fn holds_record(&self, key: Key, record_nodes: &BTreeSet<usize>) -> bool {
        self.tree
            .subtree(self.id(key.0))
            .any(|i| record_nodes.contains(&i))
    }

    fn reorder_nonrecord_siblings(&mut self) {
        let record_nodes: BTreeSet<usize> = self
            .records
            .iter()
            .flat_map(|r| r.keys.iter().map(|k| k.0))
            .collect();
        for key in self.preorder_keys() {
            let Some(node) = self.node_ref(key) else {
                continue;
            };
            if node.tag == "html" {
                continue;
            }
            let slots: Vec<usize> = node
                .children
                .iter()
                .enumerate()
                .filter(|(_, c)| c.key.is_some_and(|k| !self.holds_record(k, &record_nodes)))
                .map(|(i, _)| i)
                .collect();
            if slots.len() < 2 || !self.fire(SynthOp::ReorderNonrecordSiblings, key) {
                continue;
            }
            let mut order = slots.clone();
            self.rng.shuffle(&mut order);
            self.with_node(key, |n| {
                let moved: Vec<WNode> = order.iter().map(|&i| n.children[i].clone()).collect();
                for (&slot, child) in slots.iter().zip(moved) {
                    n.children[slot] = child;
                }
            });
        }
    }

    fn ancestors_allow(&self, parent: Key, forbidden: &[&str]) -> bool {
        let id = self.id(parent.0);
        if self.tree.tag(id) == "html" {
            return false;
        }
        let mut cur = Some(id);
        while let Some(id) = cur {
            if forbidden.contains(&self.tree.tag(id)) {
                return false;
            }
            cur = self.tree.parent(id);
        }
        true
    }

    fn container_parents(&self) -> Vec<Key> {
        let mut parents: Vec<Key> = Vec::new();
        for r in &self.records {
            let Some(c) = r.container else { continue };
            let Some(p) = self.tree.parent(self.id(c.0)) else {
                continue;
            };
            let pk = (p.index(), 0);
            if !parents.contains(&pk) {
                parents.push(pk);
            }
        }
        parents.sort();
        parents
    }

    fn inject_noise_siblings(&mut self) {
        for parent in self.container_parents() {
            if !self.ancestors_allow(parent, NO_INSERT_PARENTS)
                || !self.fire(SynthOp::InjectNoiseSiblings, parent)
            {
                continue;
            }
            let tag = if self.rng.below(2) == 0 { "span" } else { "i" };
            let n_words = 1 + self.rng.below_usize(3);
            let text = (0..n_words)
                .map(|_| *self.rng.pick(content::WORDS))
                .collect::<Vec<_>>()
                .join(" ");
            let len = self.node_ref(parent).map_or(0, |n| n.children.len());
            let at = self.rng.below_usize(len + 1);
            self.with_node(parent, |n| {
                n.children.insert(
                    at,
                    WNode {
                        tag: tag.to_string(),
                        attrs: Vec::new(),
                        text,
                        children: Vec::new(),
                        key: None,
                    },
                )
            });
        }
    }

    fn duplicate_record(&mut self) {
        let mut k = 0;
        while k < self.records.len() {
            let Some(container) = self.records[k].container else {
                k += 1;
                continue;
            };
            if !self.fire(SynthOp::DuplicateRecord, container) {
                k += 1;
                continue;
            }
            self.copies += 1;
            let copy = self.copies;
            if let Some((parent, i)) = self.root.parent_of(container) {
                let mut clone = parent.children[i].clone();
                clone.recopy(copy);
                parent.children.insert(i + 1, clone);
            }
            let keys = self.records[k]
                .keys
                .iter()
                .map(|&(id, _)| (id, copy))
                .collect();
            self.records.insert(
                k + 1,
                Record {
                    keys,
                    container: Some((container.0, copy)),
                },
            );
            k += 2;
        }
    }

    fn drop_record(&mut self) {
        let mut k = 0;
        while k < self.records.len() {
            let container = self.records[k].container;
            let Some(container) = container.filter(|_| self.records.len() > 1) else {
                k += 1;
                continue;
            };
            if !self.fire(SynthOp::DropRecord, container) {
                k += 1;
                continue;
            }
            if let Some((parent, i)) = self.root.parent_of(container) {
                let removed = parent.children.remove(i);
                let mut keys = Vec::new();
                removed.collect_keys(&mut keys);
                for (id, copy) in keys {
                    let nid = self.id(id);
                    if copy == 0 && self.tree.is_text_bearing(nid) {
                        self.log.dropped.push(self.tree.canonical_xpath(nid));
                    }
                }
            }
            self.records.remove(k);
        }
    }

    fn wrap_records(&mut self) {
        for k in 0..self.records.len() {
            let Some(container) = self.records[k].container else {
                continue;
            };
            let parent = self
                .tree
                .parent(self.id(container.0))
                .expect("containers are below body");
            let parent_key = (parent.index(), 0);
            if !self.ancestors_allow(parent_key, NO_INSERT_PARENTS)
                || !self.fire(SynthOp::WrapRecords, container)
            {
                continue;
            }
            let phrasing = !self.ancestors_allow(parent_key, PHRASING);
            let tag = if phrasing { "span" } else { "div" };
            if let Some((parent, i)) = self.root.parent_of(container) {
                let inner = parent.children.remove(i);
                parent.children.insert(
                    i,
                    WNode {
                        tag: tag.to_string(),
                        attrs: Vec::new(),
                        text: String::new(),
                        children: vec![inner],
                        key: None,
                    },
                );
            }
        }
    }
}

fn find_container(tree: &DomTree, nodes: &[NodeId], foreign: &[usize]) -> Option<NodeId> {
    let clean = |id: NodeId| {
        let range = tree.subtree(id);
        let lo = foreign.partition_point(|&f| f < range.start);
        foreign.get(lo).is_none_or(|&f| f >= range.end)
    };
    // lowest common ancestor
    let mut lca = *nodes.first()?;
    for &n in &nodes[1..] {
        while !tree.subtree(lca).contains(&n.index()) {
            lca = tree.parent(lca)?;
        }
    }
    if !clean(lca) {
        return None;
    }
    let stop =
        |id: NodeId| matches!(tree.tag(id), "html" | "head" | "body") || tree.parent(id).is_none();
    if stop(lca) {
        return None;
    }
    let mut best = lca;
    while let Some(p) = tree.parent(best) {
        if stop(p) || !clean(p) {
            break;
        }
        best = p;
    }
    Some(best)
}

/// Derives a synthetic page from `tree` and its ground truth.
///
/// Returns the transformed tree, the ground truth rewritten onto it and the
/// log of everything that was done. Identical inputs give identical outputs.
pub fn synthesize_page(
    tree: &DomTree,
    ann: &PageAnnotation,
    config: &SynthConfig,
) -> Result<(DomTree, PageAnnotation, TransformLog), SynthError> {
    config.validate()?;
    if ann.records.is_empty() {
        return Err(SynthError::DegenerateInput(ann.page_id.clone()));
    }

    let mut resolved: Vec<Vec<NodeId>> = Vec::with_capacity(ann.records.len());
    for r in &ann.records {
        let mut ids = Vec::with_capacity(r.len());
        for x in r {
            let id = tree
                .resolve(x)
                .map_err(|e| SynthError::InvalidAnnotation(e.to_string()))?;
            if !tree.is_text_bearing(id) {
                return Err(SynthError::InvalidAnnotation(format!("{x} has no text")));
            }
            ids.push(id);
        }
        resolved.push(ids);
    }
    let records = resolved
        .iter()
        .enumerate()
        .map(|(k, ids)| {
            let mut foreign: Vec<usize> = resolved
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .flat_map(|(_, other)| other.iter().map(|i| i.index()))
                .collect();
            foreign.sort_unstable();
            foreign.dedup();
            Record {
                keys: ids.iter().map(|i| (i.index(), 0)).collect(),
                container: find_container(tree, ids, &foreign).map(|c| (c.index(), 0)),
            }
        })
        .collect();

    let page_seed = rng::page_seed(config.seed, &ann.page_id);
    let mut engine = Engine {
        tree,
        config,
        rng: SplitMix64::new(page_seed),
        log: TransformLog {
            page_seed,
            ..Default::default()
        },
        root: WNode::from_tree(tree, tree.root()),
        records,
        copies: 0,
    };

    for op in SynthOp::ALL {
        if !config.enabled(op) {
            continue;
        }
        match op {
            SynthOp::RenameAttributes => engine.rename_attributes(),
            SynthOp::ReplaceTextCategoryPreserving | SynthOp::ShuffleNumericDigits => {
                engine.rewrite_texts(op)
            }
            SynthOp::ReorderNonrecordSiblings => engine.reorder_nonrecord_siblings(),
            SynthOp::InjectNoiseSiblings => engine.inject_noise_siblings(),
            SynthOp::DuplicateRecord => engine.duplicate_record(),
            SynthOp::DropRecord => engine.drop_record(),
            SynthOp::WrapRecords => engine.wrap_records(),
        }
    }

    let mut keys = Vec::new();
    let element = engine.root.clone().into_element(&mut keys);
    let out = DomTree::from_element(tree.page_id(), element);
    let mut new_paths: BTreeMap<Key, XPath> = BTreeMap::new();
    for (id, key) in out.ids().zip(&keys) {
        if let Some(k) = key {
            new_paths.insert(*k, out.canonical_xpath(id));
        }
    }

    let mut log = engine.log;
    for id in tree.ids().filter(|&id| tree.is_text_bearing(id)) {
        if let Some(p) = new_paths.get(&(id.index(), 0)) {
            log.xpath_map.insert(tree.canonical_xpath(id), p.clone());
        }
    }
    let records = engine
        .records
        .iter()
        .map(|r| r.keys.iter().map(|k| new_paths[k].clone()).collect())
        .collect();
    Ok((
        out,
        PageAnnotation {
            page_id: ann.page_id.clone(),
            records,
        },
        log,
    ))
}
