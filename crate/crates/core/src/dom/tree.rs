use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::html::{self, normalize_whitespace, BLOCKLIST};
use super::mhtml::RawPage;
use super::xpath::{Step, XPath};
use super::DomError;

/// Owned, mutable element tree. Parsing produces one; [`DomTree`] freezes it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ElementNode {
    pub tag: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<ElementNode>,
    /// Normalized concatenation of the directly contained text segments.
    pub text: String,
}

impl ElementNode {
    pub fn new(tag: impl Into<String>) -> Self {
        ElementNode {
            tag: tag.into(),
            ..Default::default()
        }
    }

    pub fn with_text(mut self, text: impl AsRef<str>) -> Self {
        self.text = normalize_whitespace(text.as_ref());
        self
    }

    pub fn with_attr(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.attrs.push((name.into(), value.into()));
        self
    }

    pub fn with_child(mut self, child: ElementNode) -> Self {
        self.children.push(child);
        self
    }

    pub fn with_children(mut self, children: impl IntoIterator<Item = ElementNode>) -> Self {
        self.children.extend(children);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanConfig {
    /// Drop every attribute.
    pub slim: bool,
    /// Keep the `head` subtree.
    pub keep_head: bool,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            slim: true,
            keep_head: true,
        }
    }
}

impl CleanConfig {
    pub fn full() -> Self {
        CleanConfig {
            slim: false,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    tag: String,
    attrs: Vec<(String, String)>,
    text: String,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    /// 1-based position among same-tag siblings.
    position: u32,
    /// Whether the parent has more than one child with this tag.
    shared_tag: bool,
}

/// Immutable cleaned element tree. Node ids follow document (pre-)order, so
/// id order is document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomTree {
    page_id: String,
    nodes: Vec<Node>,
}

impl DomTree {
    pub fn from_element(page_id: impl Into<String>, root: ElementNode) -> DomTree {
        let mut nodes = Vec::new();
        // explicit stack: (element, parent, position, shared)
        let mut stack = vec![(root, None::<NodeId>, 1u32, false)];
        while let Some((el, parent, position, shared_tag)) = stack.pop() {
            let id = NodeId(nodes.len());
            if let Some(p) = parent {
                let parent_node: &mut Node = &mut nodes[p.0];
                parent_node.children.push(id);
            }
            nodes.push(Node {
                tag: el.tag,
                attrs: el.attrs,
                text: el.text,
                parent,
                children: Vec::with_capacity(el.children.len()),
                position,
                shared_tag,
            });
            let mut totals: HashMap<&str, u32> = HashMap::new();
            for c in &el.children {
                *totals.entry(c.tag.as_str()).or_default() += 1;
            }
            let mut seen: HashMap<String, u32> = HashMap::new();
            let mut positioned = Vec::with_capacity(el.children.len());
            for c in &el.children {
                let n = seen.entry(c.tag.clone()).or_default();
                *n += 1;
                positioned.push((*n, totals[c.tag.as_str()] > 1));
            }
            for (child, (pos, shared)) in el.children.into_iter().zip(positioned).rev() {
                stack.push((child, Some(id), pos, shared));
            }
        }
        DomTree {
            page_id: page_id.into(),
            nodes,
        }
    }

    /// Parses markup and applies cleaning.
    pub fn parse(
        page_id: impl Into<String>,
        html: &str,
        config: CleanConfig,
    ) -> Result<DomTree, DomError> {
        let root = html::parse_document(html).into_root().ok_or_else(|| {
            DomError::ParseFailure("document contains no elements or text".into())
        })?;
        let root = clean_element(root, config);
        Ok(DomTree::from_element(page_id, root))
    }

    pub fn page_id(&self) -> &str {
        &self.page_id
    }

    pub fn set_page_id(&mut self, page_id: impl Into<String>) {
        self.page_id = page_id.into();
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// All node ids in document order.
    pub fn ids(&self) -> impl DoubleEndedIterator<Item = NodeId> + ExactSizeIterator {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn tag(&self, id: NodeId) -> &str {
        &self.nodes[id.0].tag
    }

    pub fn text(&self, id: NodeId) -> &str {
        &self.nodes[id.0].text
    }

    pub fn attrs(&self, id: NodeId) -> &[(String, String)] {
        &self.nodes[id.0].attrs
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.0].parent
    }

    /// 1-based index among same-tag siblings.
    pub fn position(&self, id: NodeId) -> u32 {
        self.nodes[id.0].position
    }

    /// True when the parent has other children with the same tag (the root
    /// never does).
    pub fn has_same_tag_siblings(&self, id: NodeId) -> bool {
        self.nodes[id.0].shared_tag
    }

    pub fn is_text_bearing(&self, id: NodeId) -> bool {
        !self.nodes[id.0].text.is_empty()
    }

    /// Ids of the subtree rooted at `id` (inclusive), in document order.
    /// Because ids are assigned in preorder, a subtree is a contiguous range.
    pub fn subtree(&self, id: NodeId) -> std::ops::Range<usize> {
        id.0..self.subtree_end(id)
    }

    /// Node ids of the subtree rooted at `id` (inclusive), in preorder.
    pub fn descendants(&self, id: NodeId) -> impl Iterator<Item = NodeId> {
        self.subtree(id).map(NodeId)
    }

    fn subtree_end(&self, id: NodeId) -> usize {
        let mut cur = id;
        loop {
            match self.nodes[cur.0].children.last() {
                Some(&last) => cur = last,
                None => return cur.0 + 1,
            }
        }
    }

    /// Depth of the subtree rooted at `id`: 1 for a leaf.
    pub fn height(&self, id: NodeId) -> usize {
        let range = self.subtree(id);
        let base = range.start;
        let mut heights = vec![1usize; range.len()];
        for i in range.rev() {
            let h = self.nodes[i]
                .children
                .iter()
                .map(|c| heights[c.0 - base] + 1)
                .max()
                .unwrap_or(1);
            heights[i - base] = h;
        }
        heights[0]
    }

    /// Subtree height of every node, indexed by node id.
    pub fn heights(&self) -> Vec<usize> {
        let mut heights = vec![1usize; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            heights[i] = self.nodes[i]
                .children
                .iter()
                .map(|c| heights[c.0] + 1)
                .max()
                .unwrap_or(1);
        }
        heights
    }

    /// Number of ancestors.
    pub fn depth(&self, id: NodeId) -> usize {
        let mut d = 0;
        let mut cur = self.nodes[id.0].parent;
        while let Some(p) = cur {
            d += 1;
            cur = self.nodes[p.0].parent;
        }
        d
    }

    pub fn canonical_xpath(&self, id: NodeId) -> XPath {
        let mut steps = Vec::new();
        let mut cur = Some(id);
        while let Some(n) = cur {
            let node = &self.nodes[n.0];
            steps.push(Step::new(node.tag.clone(), node.position));
            cur = node.parent;
        }
        steps.reverse();
        XPath::new(steps)
    }

    /// Like [`canonical_xpath`](Self::canonical_xpath) rendered as text, but
    /// omitting the index on steps whose element is the only child of its tag.
    pub fn compact_xpath(&self, id: NodeId) -> String {
        let mut chain = Vec::new();
        let mut cur = Some(id);
        while let Some(n) = cur {
            chain.push(n);
            cur = self.nodes[n.0].parent;
        }
        let mut out = String::new();
        for n in chain.into_iter().rev() {
            let node = &self.nodes[n.0];
            out.push('/');
            out.push_str(&node.tag);
            if node.shared_tag {
                let _ = write!(out, "[{}]", node.position);
            }
        }
        out
    }

    /// Resolves an absolute path from the document root: the first step must
    /// match the root element itself.
    pub fn resolve(&self, path: &XPath) -> Result<NodeId, DomError> {
        let steps = path.steps();
        let Some(first) = steps.first() else {
            return Err(DomError::NotFound {
                path: path.to_string(),
                step: 0,
            });
        };
        let root = &self.nodes[0];
        if first.tag != root.tag || first.index != 1 {
            return Err(DomError::NotFound {
                path: path.to_string(),
                step: 1,
            });
        }
        self.walk(NodeId(0), &steps[1..], path, 1)
    }

    /// Resolves `path` relative to `root`: the first step selects among the
    /// children of `root`.
    pub fn resolve_from(&self, root: NodeId, path: &XPath) -> Result<NodeId, DomError> {
        self.walk(root, path.steps(), path, 0)
    }

    fn walk(
        &self,
        from: NodeId,
        steps: &[Step],
        path: &XPath,
        offset: usize,
    ) -> Result<NodeId, DomError> {
        let mut cur = from;
        for (i, step) in steps.iter().enumerate() {
            let next = self.nodes[cur.0].children.iter().copied().find(|c| {
                let n = &self.nodes[c.0];
                n.tag == step.tag && n.position == step.index
            });
            match next {
                Some(n) => cur = n,
                None => {
                    return Err(DomError::NotFound {
                        path: path.to_string(),
                        step: offset + i + 1,
                    })
                }
            }
        }
        Ok(cur)
    }

    /// Every element with non-empty direct text, in document order, paired
    /// with its canonical path. This is the candidate universe for records.
    pub fn text_nodes(&self) -> Vec<(XPath, &str)> {
        self.ids()
            .filter(|&id| self.is_text_bearing(id))
            .map(|id| (self.canonical_xpath(id), self.text(id)))
            .collect()
    }

    /// Text-bearing nodes in the subtree of `id`, inclusive.
    pub fn text_bearing_in(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.subtree(id)
            .map(NodeId)
            .filter(|&n| self.is_text_bearing(n))
    }

    /// Rebuilds an owned copy of the subtree rooted at `id`.
    pub fn to_element(&self, id: NodeId) -> ElementNode {
        let node = &self.nodes[id.0];
        ElementNode {
            tag: node.tag.clone(),
            attrs: node.attrs.clone(),
            text: node.text.clone(),
            children: node.children.iter().map(|&c| self.to_element(c)).collect(),
        }
    }

    /// Pretty-printed markup with two-space indentation. Elements whose
    /// subtree is a single chain are printed on one line.
    pub fn to_html(&self, with_attrs: bool) -> String {
        let mut out = String::new();
        self.write_node(&mut out, NodeId(0), 0, with_attrs);
        out
    }

    /// Serializes without any layout whitespace.
    pub fn to_compact_html(&self, with_attrs: bool) -> String {
        let mut out = String::new();
        self.write_inline(&mut out, NodeId(0), with_attrs);
        out
    }

    fn is_chain(&self, id: NodeId) -> bool {
        self.subtree(id).all(|i| self.nodes[i].children.len() <= 1)
    }

    fn write_node(&self, out: &mut String, id: NodeId, indent: usize, with_attrs: bool) {
        let pad = "  ".repeat(indent);
        out.push_str(&pad);
        if self.is_chain(id) {
            self.write_inline(out, id, with_attrs);
            out.push('\n');
            return;
        }
        let node = &self.nodes[id.0];
        self.write_open(out, id, with_attrs);
        out.push('\n');
        if !node.text.is_empty() {
            out.push_str(&pad);
            out.push_str("  ");
            out.push_str(&escape_text(&node.text));
            out.push('\n');
        }
        for &c in &node.children {
            self.write_node(out, c, indent + 1, with_attrs);
        }
        if !is_void(&node.tag) {
            out.push_str(&pad);
            let _ = write!(out, "</{}>", node.tag);
        }
        out.push('\n');
    }

    fn write_inline(&self, out: &mut String, id: NodeId, with_attrs: bool) {
        let node = &self.nodes[id.0];
        self.write_open(out, id, with_attrs);
        out.push_str(&escape_text(&node.text));
        for &c in &node.children {
            self.write_inline(out, c, with_attrs);
        }
        if !is_void(&node.tag) {
            let _ = write!(out, "</{}>", node.tag);
        }
    }

    fn write_open(&self, out: &mut String, id: NodeId, with_attrs: bool) {
        let node = &self.nodes[id.0];
        out.push('<');
        out.push_str(&node.tag);
        if with_attrs {
            for (k, v) in &node.attrs {
                let _ = write!(out, " {}=\"{}\"", k, escape_attr(v));
            }
        }
        out.push('>');
    }
}

fn is_void(tag: &str) -> bool {
    matches!(
        tag,
        "area"
            | "base"
            | "br"
            | "col"
            | "embed"
            | "hr"
            | "img"
            | "input"
            | "keygen"
            | "link"
            | "meta"
            | "param"
            | "source"
            | "track"
            | "wbr"
    )
}

fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\u{a0}' => out.push_str("&nbsp;"),
            c => out.push(c),
        }
    }
    out
}

fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '"' => out.push_str("&quot;"),
            '<' => out.push_str("&lt;"),
            c => out.push(c),
        }
    }
    out
}

fn clean_element(mut el: ElementNode, config: CleanConfig) -> ElementNode {
    let mut stack = vec![&mut el];
    while let Some(node) = stack.pop() {
        if config.slim {
            node.attrs.clear();
        }
        node.children
            .retain(|c| !BLOCKLIST.contains(&c.tag.as_str()));
        if !config.keep_head {
            node.children.retain(|c| c.tag != "head");
        }
        stack.extend(node.children.iter_mut());
    }
    el
}

/// Parses a raw page and applies cleaning.
pub fn build_clean_tree(page: &RawPage, config: CleanConfig) -> Result<DomTree, DomError> {
    DomTree::parse(page.page_id.clone(), &page.html, config)
}
